//! Pump–probe reflection with mechanical modes coupled to the LC
//! (optomechanically induced transparency).
//!
//! Under a red-detuned pump each mechanical mode adds a self-energy to the
//! inverse LC susceptibility:
//!
//! ```text
//! χ_LC,eff⁻¹(ω) = i(ω_LC + δ_pump − ω) + (κ_LC,bare + κ_pump)/2
//!               + Σ_j G_j² / (i(ω_pump + ω_m,j − ω) + Γ_m,j/2)
//! ```
//!
//! and the probe reflection is the usual `S11` with this susceptibility.
//! A mode opens a transparency window of width `Γ_m + Γ_e`,
//! `Γ_e = 4G²/κ_LC,tot`, at `ω_pump + ω_m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{dressed_modes, eq1_effective_rates, inverse_susceptibility, resolved_sideband_ratio, response};
use crate::params::{SystemParams, Warning};
use crate::lineshape::extract_fwhm;
use crate::trace::{linspace, merge_grids, validate_grid, ComplexTrace, TraceKind};
use crate::units::{to_angular, to_hz};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    pub omega_m: f64,
    pub gamma_m: f64,
}

impl MechanicalMode {
    pub fn from_hz(omega_m_hz: f64, gamma_m_hz: f64) -> Self {
        Self {
            omega_m: to_angular(omega_m_hz),
            gamma_m: to_angular(gamma_m_hz),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_m > 0.0) || !self.omega_m.is_finite() {
            return Err(Error::InvalidParameter {
                field: "omega_m",
                reason: format!("must be positive, got {} Hz", to_hz(self.omega_m)),
            });
        }
        if !(self.gamma_m >= 0.0) || !self.gamma_m.is_finite() {
            return Err(Error::InvalidParameter {
                field: "gamma_m",
                reason: format!("must be nonnegative, got {} Hz", to_hz(self.gamma_m)),
            });
        }
        Ok(())
    }
}

/// A mechanical mode together with its pump-enhanced coupling `G` (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledMode {
    pub mode: MechanicalMode,
    pub coupling: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    pub omega_pump: f64,
    /// Pump-enhanced electromechanical coupling `G`.
    pub coupling: f64,
    /// Pump-induced shift of the LC frequency (signed).
    pub lc_shift: f64,
    /// Pump-induced extra LC loss.
    pub lc_extra_loss: f64,
}

impl PumpConfig {
    fn validate(&self) -> Result<()> {
        if !(self.omega_pump > 0.0) || !self.omega_pump.is_finite() {
            return Err(Error::InvalidParameter {
                field: "omega_pump",
                reason: "must be positive".into(),
            });
        }
        if !(self.coupling >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "coupling",
                reason: "G must be nonnegative".into(),
            });
        }
        if !(self.lc_extra_loss >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "lc_extra_loss",
                reason: "must be nonnegative".into(),
            });
        }
        if !self.lc_shift.is_finite() {
            return Err(Error::InvalidParameter {
                field: "lc_shift",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Electromechanical damping `Γ_e = 4G²/κ_LC,tot`.
pub fn gamma_e(coupling: f64, kappa_lc_tot: f64) -> Result<f64> {
    if !(kappa_lc_tot > 0.0) {
        return Err(Error::InvalidInput(format!(
            "LC linewidth must be positive, got {kappa_lc_tot}"
        )));
    }
    Ok(4.0 * coupling * coupling / kappa_lc_tot)
}

/// Inverse of [`gamma_e`]: the `G` that produces damping `gamma_e`.
pub fn coupling_for_gamma_e(gamma_e: f64, kappa_lc_tot: f64) -> Result<f64> {
    if !(kappa_lc_tot > 0.0) {
        return Err(Error::InvalidInput(format!(
            "LC linewidth must be positive, got {kappa_lc_tot}"
        )));
    }
    if !(gamma_e >= 0.0) {
        return Err(Error::InvalidInput(format!("gamma_e must be nonnegative, got {gamma_e}")));
    }
    Ok((0.25 * gamma_e * kappa_lc_tot).sqrt())
}

/// LC parameters with the phenomenological pump shift and extra loss applied.
pub fn pumped_params(params: &SystemParams, lc_shift: f64, lc_extra_loss: f64) -> SystemParams {
    let mut p = *params;
    p.omega_lc += lc_shift;
    p.kappa_lc_bare += lc_extra_loss;
    p
}

/// Dressed LC frequency and total linewidth seen by the mechanics, rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveLc {
    pub omega: f64,
    pub kappa_tot: f64,
}

pub fn effective_lc(params: &SystemParams, lc_shift: f64, lc_extra_loss: f64) -> Result<EffectiveLc> {
    let p = pumped_params(params, lc_shift, lc_extra_loss);
    let dressed = dressed_modes(&p)?;
    let rates = eq1_effective_rates(&p)?;
    Ok(EffectiveLc {
        omega: dressed.omega_lc,
        kappa_tot: rates.kappa_lc_tot,
    })
}

/// Pump frequency on the lower mechanical sideband of the (shifted, dressed) LC.
pub fn lower_sideband_pump(params: &SystemParams, lc_shift: f64, lc_extra_loss: f64, omega_m: f64) -> Result<f64> {
    Ok(effective_lc(params, lc_shift, lc_extra_loss)?.omega - omega_m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmitSpectrum {
    /// `S11` normalized to unit far-off-resonance reflection.
    pub trace: ComplexTrace,
    pub warnings: Vec<Warning>,
}

/// Reflection with a single mechanical mode coupled at `pump.coupling`.
pub fn omit_reflection(
    params: &SystemParams,
    mode: &MechanicalMode,
    pump: &PumpConfig,
    freqs: &[f64],
) -> Result<OmitSpectrum> {
    let modes = [CoupledMode {
        mode: *mode,
        coupling: pump.coupling,
    }];
    multi_mode_omit(params, &modes, pump, freqs)
}

/// Reflection with several mechanical modes; each mode carries its own `G`
/// and `pump.coupling` is not used.
pub fn multi_mode_omit(
    params: &SystemParams,
    modes: &[CoupledMode],
    pump: &PumpConfig,
    freqs: &[f64],
) -> Result<OmitSpectrum> {
    multi_mode_omit_with(params, modes, pump, freqs, Exec::default())
}

pub fn multi_mode_omit_with(
    params: &SystemParams,
    modes: &[CoupledMode],
    pump: &PumpConfig,
    freqs: &[f64],
    exec: Exec,
) -> Result<OmitSpectrum> {
    params.validate()?;
    pump.validate()?;
    if modes.is_empty() {
        return Err(Error::InvalidInput("no mechanical modes".into()));
    }
    for m in modes {
        m.mode.validate()?;
        if !(m.coupling >= 0.0) || !m.coupling.is_finite() {
            return Err(Error::InvalidParameter {
                field: "coupling",
                reason: format!("G must be finite and nonnegative, got {} Hz", to_hz(m.coupling)),
            });
        }
    }
    if freqs.is_empty() {
        return Err(Error::InvalidInput("empty frequency grid".into()));
    }
    validate_grid(freqs)?;
    let pumped = pumped_params(params, pump.lc_shift, pump.lc_extra_loss);
    pumped.validate()?;
    let warnings = diagnose(&pumped, modes, pump)?;

    let values = exec
        .map(freqs, |&f| pumped_reflection(&pumped, modes, pump.omega_pump, to_angular(f)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(OmitSpectrum {
        trace: ComplexTrace {
            freqs: freqs.to_vec(),
            values,
            kind: TraceKind::S11,
        },
        warnings,
    })
}

fn pumped_reflection(p: &SystemParams, modes: &[CoupledMode], omega_pump: f64, omega: f64) -> Result<Complex64> {
    let mut lc_inverse = inverse_susceptibility(omega, p.omega_lc, p.kappa_lc_bare);
    for m in modes {
        if m.coupling == 0.0 {
            continue;
        }
        let mech_inverse = inverse_susceptibility(omega, omega_pump + m.mode.omega_m, m.mode.gamma_m);
        if mech_inverse == Complex64::new(0.0, 0.0) {
            // lossless mode on resonance decouples the LC completely
            let mut blocked = *p;
            blocked.g = 0.0;
            return response(&blocked, omega, Complex64::new(1.0, 0.0)).map(|(_, s11)| s11);
        }
        lc_inverse += m.coupling * m.coupling / mech_inverse;
    }
    response(p, omega, lc_inverse).map(|(_, s11)| s11)
}

/// Probe grid for an OMIT measurement: a coarse sweep over the dressed LC
/// line (±5 linewidths) plus `fine_points` samples across ±10 expected
/// window widths around each transparency feature.
pub fn omit_grid(
    params: &SystemParams,
    modes: &[CoupledMode],
    pump: &PumpConfig,
    coarse_points: usize,
    fine_points: usize,
) -> Result<Vec<f64>> {
    let lc = effective_lc(params, pump.lc_shift, pump.lc_extra_loss)?;
    let mut grids = vec![linspace(
        to_hz(lc.omega - 5.0 * lc.kappa_tot),
        to_hz(lc.omega + 5.0 * lc.kappa_tot),
        coarse_points,
    )];
    for m in modes {
        let width = m.mode.gamma_m + gamma_e(m.coupling, lc.kappa_tot)?;
        if width > 0.0 {
            let center = pump.omega_pump + m.mode.omega_m;
            grids.push(linspace(to_hz(center - 10.0 * width), to_hz(center + 10.0 * width), fine_points));
        }
    }
    let grid = merge_grids(&grids);
    validate_grid(&grid)?;
    Ok(grid)
}

/// Transparency feature of one mechanical mode, Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransparencyWindow {
    pub mode: usize,
    pub peak_hz: f64,
    /// Pump-to-peak frequency difference.
    pub omega_m_hz: f64,
    /// Width of the mode's contribution `|S11 − S11,without mode|²`.
    pub fwhm_hz: f64,
    /// Width of the bump in `|S11|²` itself, when it is a single clean peak.
    /// Interference with the background reflection can distort it.
    pub reflection_fwhm_hz: Option<f64>,
    /// `Γ_m + Γ_e` for comparison with `fwhm_hz`.
    pub expected_fwhm_hz: f64,
    pub gamma_e_hz: f64,
}

/// Locates and measures each mode's transparency feature.
///
/// Near `ω_pump + ω_m` the reflection is the background (the same
/// spectrum with that mode uncoupled) plus a single complex pole whose width
/// is the total mechanical damping, so the width is read off the squared
/// difference from the background. The search spans ±10 expected widths,
/// clipped halfway to neighboring modes. `None` marks a mode without a
/// resolvable window (for instance `G = 0`).
pub fn transparency_windows(
    spectrum: &OmitSpectrum,
    params: &SystemParams,
    modes: &[CoupledMode],
    pump: &PumpConfig,
) -> Result<Vec<Option<TransparencyWindow>>> {
    let lc = effective_lc(params, pump.lc_shift, pump.lc_extra_loss)?;
    let pumped = pumped_params(params, pump.lc_shift, pump.lc_extra_loss);
    let trace = &spectrum.trace;
    let (first, last) = (trace.freqs[0], trace.freqs[trace.len() - 1]);
    let mut out = Vec::with_capacity(modes.len());
    for (j, m) in modes.iter().enumerate() {
        let ge = gamma_e(m.coupling, lc.kappa_tot)?;
        let width = m.mode.gamma_m + ge;
        let center = pump.omega_pump + m.mode.omega_m;
        let mut half = 10.0 * width;
        for (k, other) in modes.iter().enumerate() {
            if k != j {
                half = half.min(0.5 * (other.mode.omega_m - m.mode.omega_m).abs());
            }
        }
        let lo = to_hz(center - half).max(first);
        let hi = to_hz(center + half).min(last);
        if !(m.coupling > 0.0 && half > 0.0 && lo < hi) {
            out.push(None);
            continue;
        }
        // a grid too coarse to sample the window leaves it unresolved
        let local = match trace.window(lo, hi) {
            Ok(local) if local.len() >= 3 => local,
            _ => {
                out.push(None);
                continue;
            }
        };
        let mut others = modes.to_vec();
        others[j].coupling = 0.0;
        let change = local
            .freqs
            .iter()
            .zip(&local.values)
            .map(|(&f, &v)| Ok(v - pumped_reflection(&pumped, &others, pump.omega_pump, to_angular(f))?))
            .collect::<Result<Vec<_>>>()?;
        let change = ComplexTrace::new(local.freqs.clone(), change, TraceKind::S11)?;
        let Ok(peak) = extract_fwhm(&change, (lo, hi)) else {
            out.push(None);
            continue;
        };
        out.push(Some(TransparencyWindow {
            mode: j,
            peak_hz: peak.center_hz,
            omega_m_hz: peak.center_hz - to_hz(pump.omega_pump),
            fwhm_hz: peak.fwhm_hz,
            reflection_fwhm_hz: extract_fwhm(&local, (lo, hi)).ok().map(|p| p.fwhm_hz),
            expected_fwhm_hz: to_hz(width),
            gamma_e_hz: to_hz(ge),
        }));
    }
    Ok(out)
}

fn diagnose(pumped: &SystemParams, modes: &[CoupledMode], pump: &PumpConfig) -> Result<Vec<Warning>> {
    let mut out = pumped.warnings();
    let lc = EffectiveLc {
        omega: dressed_modes(pumped)?.omega_lc,
        kappa_tot: eq1_effective_rates(pumped)?.kappa_lc_tot,
    };
    if pump.omega_pump >= lc.omega {
        out.push(Warning::PumpNotRedDetuned);
    }
    let offset = modes
        .iter()
        .map(|m| pump.omega_pump - (lc.omega - m.mode.omega_m))
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if offset.abs() >= lc.kappa_tot {
        out.push(Warning::PumpOffSideband { offset_hz: to_hz(offset) });
    }
    for m in modes {
        let ratio = resolved_sideband_ratio(lc.kappa_tot, m.mode.omega_m)?;
        if ratio >= 1.0 {
            out.push(Warning::SidebandUnresolved { ratio });
        }
    }
    for i in 0..modes.len() {
        for j in i + 1..modes.len() {
            let (a, b) = (modes[i].mode, modes[j].mode);
            if (a.omega_m - b.omega_m).abs() <= a.gamma_m.max(b.gamma_m) {
                out.push(Warning::OverlappingModes { first: i, second: j });
            }
        }
    }
    Ok(out)
}
