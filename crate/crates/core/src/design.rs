//! Design-space sweeps over the knobs that set the effective coupling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{eq1_effective_rates, resolved_sideband_ratio, with_effective_detuning, DerivedRates, DEFAULT_SIDEBAND_THRESHOLD};
use crate::params::SystemParams;
use crate::presets::{MAX_DISSIPATION_FRACTION_4K, OMEGA_M_DESIGN_HZ, TARGET_KAPPA_EFF_1_HZ};
use crate::units::{to_angular, to_hz};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptField {
    /// Bare cavity frequency.
    OmegaCav,
    /// Dressed detuning; the bare cavity frequency is solved for.
    DeltaEff,
    #[serde(rename = "kappa_cav_1")]
    KappaCav1,
    #[serde(rename = "kappa_cav_2")]
    KappaCav2,
    G,
}

impl SweptField {
    pub fn as_str(self) -> &'static str {
        match self {
            SweptField::OmegaCav => "omega_cav",
            SweptField::DeltaEff => "delta_eff",
            SweptField::KappaCav1 => "kappa_cav_1",
            SweptField::KappaCav2 => "kappa_cav_2",
            SweptField::G => "g",
        }
    }
}

impl fmt::Display for SweptField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweptField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().trim_end_matches("_hz");
        [
            SweptField::OmegaCav,
            SweptField::DeltaEff,
            SweptField::KappaCav1,
            SweptField::KappaCav2,
            SweptField::G,
        ]
        .into_iter()
        .find(|f| f.as_str() == key)
        .ok_or_else(|| Error::InvalidInput(format!("cannot sweep `{s}`")))
    }
}

/// Pass/fail criteria evaluated on every sweep row. Hz where dimensional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub kappa_eff_1_band_hz: (f64, f64),
    pub sideband_threshold: f64,
    pub omega_m_hz: f64,
    pub max_dissipation_fraction: f64,
}

impl Default for Targets {
    fn default() -> Self {
        Self {
            kappa_eff_1_band_hz: TARGET_KAPPA_EFF_1_HZ,
            sideband_threshold: DEFAULT_SIDEBAND_THRESHOLD,
            omega_m_hz: OMEGA_M_DESIGN_HZ,
            max_dissipation_fraction: MAX_DISSIPATION_FRACTION_4K,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base_params: SystemParams,
    pub swept_field: SweptField,
    /// Sweep values in Hz.
    pub values: Vec<f64>,
    pub targets: Targets,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidInput("sweep has no values".into()));
        }
        let (lo, hi) = self.targets.kappa_eff_1_band_hz;
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("target band [{lo}, {hi}] Hz is empty")));
        }
        if !(self.targets.omega_m_hz > 0.0) {
            return Err(Error::InvalidInput("omega_m_hz must be positive".into()));
        }
        self.base_params.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value_hz: f64,
    pub rates: Option<DerivedRates>,
    /// Why the row could not be evaluated.
    pub error: Option<String>,
    pub in_target_band: bool,
    pub sideband_ratio: f64,
    pub sideband_resolved: bool,
    pub dissipation_ok: bool,
}

impl SweepRow {
    pub fn valid(&self) -> bool {
        self.rates.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub field: SweptField,
    pub rows: Vec<SweepRow>,
}

/// Parameters with the swept field set to `value_hz`.
pub fn apply_sweep_value(base: &SystemParams, field: SweptField, value_hz: f64) -> Result<SystemParams> {
    let v = to_angular(value_hz);
    let mut p = *base;
    match field {
        SweptField::OmegaCav => p.omega_cav = v,
        SweptField::DeltaEff => p = with_effective_detuning(base, v)?,
        SweptField::KappaCav1 => p.kappa_cav_1 = v,
        SweptField::KappaCav2 => p.kappa_cav_2 = v,
        SweptField::G => p.g = v,
    }
    p.validate()?;
    Ok(p)
}

/// Evaluates one sweep point; invalid values produce a flagged row.
pub fn sweep_row(base: &SystemParams, field: SweptField, value_hz: f64, targets: &Targets) -> SweepRow {
    let evaluated = apply_sweep_value(base, field, value_hz).and_then(|p| eq1_effective_rates(&p));
    match evaluated {
        Ok(rates) => {
            let keff1 = to_hz(rates.kappa_eff_1);
            let (lo, hi) = targets.kappa_eff_1_band_hz;
            let ratio = resolved_sideband_ratio(rates.kappa_lc_tot, to_angular(targets.omega_m_hz))
                .unwrap_or(f64::INFINITY);
            SweepRow {
                value_hz,
                rates: Some(rates),
                error: None,
                in_target_band: (lo..=hi).contains(&keff1),
                sideband_ratio: ratio,
                sideband_resolved: ratio < targets.sideband_threshold,
                dissipation_ok: rates.dissipation_fraction <= targets.max_dissipation_fraction,
            }
        }
        Err(e) => SweepRow {
            value_hz,
            rates: None,
            error: Some(e.to_string()),
            in_target_band: false,
            sideband_ratio: f64::NAN,
            sideband_resolved: false,
            dissipation_ok: false,
        },
    }
}

/// Evaluates the effective-rate map at every sweep value. Rows keep the
/// order of `spec.values` whatever the execution strategy.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Exec::default())
}

pub fn run_sweep_with(spec: &SweepSpec, exec: Exec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = exec.map(&spec.values, |&v| sweep_row(&spec.base_params, spec.swept_field, v, &spec.targets));
    Ok(SweepResult {
        field: spec.swept_field,
        rows,
    })
}

/// Positive `Δ_eff` (rad/s) at which `κ_eff,1` equals `target_keff1` (rad/s):
/// `Δ_eff = √(κ_cav,1 g² / κ_eff,1 − (κ_cav,tot/2)²)`.
pub fn find_target_detuning(base: &SystemParams, target_keff1: f64) -> Result<f64> {
    base.validate()?;
    let half = 0.5 * base.kappa_cav_tot();
    let ceiling = base.kappa_cav_1 * base.g * base.g / (half * half);
    if !(target_keff1 > 0.0) {
        return Err(Error::NoSolution(format!(
            "target kappa_eff_1 must be positive, got {} Hz",
            to_hz(target_keff1)
        )));
    }
    if target_keff1 > ceiling {
        return Err(Error::NoSolution(format!(
            "target kappa_eff_1 {} Hz exceeds the zero-detuning value {} Hz",
            to_hz(target_keff1),
            to_hz(ceiling)
        )));
    }
    let square = base.kappa_cav_1 * base.g * base.g / target_keff1 - half * half;
    Ok(square.max(0.0).sqrt())
}

/// Lowers or raises `κ_LC,bare` so that `κ_LC,loss / κ_LC,tot = fraction`
/// with the effective rates held fixed; the bare cavity frequency is
/// re-solved so `Δ_eff` does not move.
pub fn bare_loss_for_fraction(params: &SystemParams, fraction: f64) -> Result<SystemParams> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!("fraction must lie in [0, 1), got {fraction}")));
    }
    let rates = eq1_effective_rates(params)?;
    let ports = rates.kappa_eff_1 + rates.kappa_eff_2;
    let bare = fraction * ports / (1.0 - fraction) - rates.kappa_eff_loss;
    if bare < 0.0 {
        return Err(Error::NoSolution(format!(
            "cavity-inherited loss alone exceeds a {fraction} dissipation fraction"
        )));
    }
    let mut out = *params;
    out.kappa_lc_bare = bare;
    with_effective_detuning(&out, rates.delta_eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rates_at_detuning;
    use crate::presets::{four_kelvin, Hat};
    use crate::units::MHZ;
    use approx::assert_relative_eq;

    fn spec(values: Vec<f64>) -> SweepSpec {
        SweepSpec {
            base_params: Hat::Posts270.params(),
            swept_field: SweptField::DeltaEff,
            values,
            targets: Targets::default(),
        }
    }

    #[test]
    fn coupling_falls_with_detuning() {
        let values: Vec<f64> = (0..25).map(|i| (200.0 + 50.0 * i as f64) * MHZ).collect();
        let res = run_sweep(&spec(values)).unwrap();
        let k: Vec<f64> = res.rows.iter().map(|r| r.rates.unwrap().kappa_eff_1).collect();
        assert!(k.windows(2).all(|w| w[1] < w[0]));
        let neg: Vec<f64> = (0..10).map(|i| -(300.0 + 50.0 * i as f64) * MHZ).collect();
        let res = run_sweep(&spec(neg)).unwrap();
        let k: Vec<f64> = res.rows.iter().map(|r| r.rates.unwrap().kappa_eff_1).collect();
        assert!(k.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn invalid_rows_are_kept_and_flagged() {
        let mut s = spec(vec![420.0 * MHZ, 10.0 * MHZ, 900.0 * MHZ]);
        let res = run_sweep(&s).unwrap();
        assert_eq!(res.rows.len(), 3);
        assert!(res.rows[0].valid() && !res.rows[1].valid() && res.rows[2].valid());
        assert!(res.rows[1].error.is_some());
        s.swept_field = SweptField::KappaCav2;
        s.values = vec![MHZ, -MHZ];
        let res = run_sweep(&s).unwrap();
        assert!(res.rows[0].valid() && !res.rows[1].valid());
    }

    #[test]
    fn empty_sweep_rejected() {
        assert!(run_sweep(&spec(vec![])).is_err());
        let mut s = spec(vec![1.0]);
        s.targets.kappa_eff_1_band_hz = (2.0, 1.0);
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn band_edges_are_inclusive() {
        let base = Hat::Posts270.params();
        let rates = eq1_effective_rates(&base).unwrap();
        let k = to_hz(rates.kappa_eff_1);
        let targets = Targets {
            kappa_eff_1_band_hz: (k, k * 1.1),
            ..Targets::default()
        };
        let row = sweep_row(&base, SweptField::G, to_hz(base.g), &targets);
        assert!(row.in_target_band);
    }

    #[test]
    fn target_detuning_design_point() {
        let p = SystemParams::from_hz(7.6e9, 7.0e9, 150e6, 0.0, 0.0, 0.48e6, 60e6);
        let d = find_target_detuning(&p, to_angular(1.5 * MHZ)).unwrap();
        assert_relative_eq!(to_hz(d), 354_375.0f64.sqrt() * MHZ, max_relative = 1e-12);
        let back = rates_at_detuning(&p, d);
        assert_relative_eq!(to_hz(back.kappa_eff_1), 1.5 * MHZ, max_relative = 1e-9);
    }

    #[test]
    fn target_detuning_boundaries() {
        let p = four_kelvin(420.0 * MHZ).unwrap();
        let half = 0.5 * p.kappa_cav_tot();
        let ceiling = p.kappa_cav_1 * p.g * p.g / (half * half);
        assert_eq!(find_target_detuning(&p, ceiling).unwrap(), 0.0);
        assert!(matches!(find_target_detuning(&p, ceiling * 1.01), Err(Error::NoSolution(_))));
        assert!(find_target_detuning(&p, 0.0).is_err());
    }

    #[test]
    fn fraction_self_consistency() {
        let p = Hat::Posts300.params();
        for f in [0.05, 0.17, 0.3] {
            let q = bare_loss_for_fraction(&p, f).unwrap();
            let r = eq1_effective_rates(&q).unwrap();
            assert_relative_eq!(r.dissipation_fraction, f, max_relative = 1e-12);
        }
        assert!(bare_loss_for_fraction(&p, 1.0).is_err());
        assert!(matches!(bare_loss_for_fraction(&p, 0.0), Err(Error::NoSolution(_))));
    }
}
