//! Run configuration: `key = value` lines grouped under `[block]` headers,
//! every frequency and rate in Hz. See the repository README for the full
//! key list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use reentrant::design::{SweptField, Targets};
use reentrant::presets::{design_point, millikelvin, Hat};
use reentrant::units::to_angular;
use reentrant::{with_effective_detuning, ParamName, SystemParams, SystemParamsHz};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub system: Option<SystemBlock>,
    pub grid: Option<GridBlock>,
    pub simulate: Option<SimulateBlock>,
    pub fit: Option<FitBlock>,
    pub sweep: Option<SweepBlock>,
    pub omit: Option<OmitBlock>,
    /// Directory relative paths inside the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Overrides on top of a preset; with no preset every field except
/// `delta_eff_hz` is required.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub omega_cav_hz: Option<f64>,
    pub omega_lc_hz: Option<f64>,
    pub kappa_cav_1_hz: Option<f64>,
    pub kappa_cav_2_hz: Option<f64>,
    pub kappa_cav_loss_hz: Option<f64>,
    pub kappa_lc_bare_hz: Option<f64>,
    pub g_hz: Option<f64>,
    /// Re-solves the bare cavity frequency for this dressed detuning.
    pub delta_eff_hz: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub start_hz: Option<f64>,
    pub stop_hz: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Extra samples across ±10 LC linewidths.
    pub fine_points: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<String>,
    /// Amplitude SNR against the largest `|S|` on the grid.
    pub noise_snr: Option<f64>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    #[serde(default)]
    pub traces: Vec<PathBuf>,
    #[serde(default = "default_free")]
    pub free: Vec<String>,
    #[serde(default)]
    pub shared: Vec<String>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub auto_init: Option<bool>,
    pub consistency_sigma: Option<f64>,
    pub initial_guess: Option<SystemBlock>,
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
    pub monte_carlo: Option<MonteCarloBlock>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloBlock {
    pub runs: usize,
    pub snr: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub field: String,
    pub values_hz: Option<Vec<f64>>,
    pub start_hz: Option<f64>,
    pub stop_hz: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub targets: TargetsBlock,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsBlock {
    pub kappa_eff_1_band_hz: Option<[f64; 2]>,
    pub sideband_threshold: Option<f64>,
    pub omega_m_hz: Option<f64>,
    pub max_dissipation_fraction: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmitBlock {
    /// Defaults to the lower sideband of the first mode.
    pub pump_hz: Option<f64>,
    #[serde(default)]
    pub lc_shift_hz: f64,
    #[serde(default)]
    pub lc_extra_loss_hz: f64,
    #[serde(default = "default_coarse")]
    pub coarse_points: usize,
    #[serde(default = "default_fine")]
    pub fine_points: usize,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub mode: Vec<ModeBlock>,
}

/// One mechanical mode; give exactly one of `g_em_hz` (`G/2π`) or
/// `gamma_e_hz`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeBlock {
    pub omega_m_hz: f64,
    pub gamma_m_hz: f64,
    pub g_em_hz: Option<f64>,
    pub gamma_e_hz: Option<f64>,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        toml::from_str("").expect("every simulate key has a default")
    }
}

impl Default for FitBlock {
    fn default() -> Self {
        toml::from_str("").expect("every fit key has a default")
    }
}

fn default_points() -> usize {
    2001
}

fn default_kinds() -> Vec<String> {
    vec!["s21".into()]
}

fn default_free() -> Vec<String> {
    ["omega_cav", "omega_lc", "g", "kappa_lc_bare", "kappa_cav_1"]
        .map(String::from)
        .to_vec()
}

fn default_coarse() -> usize {
    401
}

fn default_fine() -> usize {
    801
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

/// Named starting points: the four hats, `all` (the four hats in turn),
/// `design` (the 600 MHz simulation design point) and `millikelvin`.
pub fn preset_systems(name: &str) -> CliResult<Vec<(String, SystemParams)>> {
    match name {
        "all" => Ok(Hat::ALL.iter().map(|h| (h.name().to_string(), h.params())).collect()),
        "design" => Ok(vec![(name.into(), design_point(600e6)?)]),
        "millikelvin" => Ok(vec![(name.into(), millikelvin())]),
        _ => {
            let hat: Hat = name
                .parse()
                .map_err(|e: reentrant::Error| CliError::Config(e.to_string()))?;
            Ok(vec![(hat.name().to_string(), hat.params())])
        }
    }
}

impl SystemBlock {
    pub fn apply(&self, base: Option<SystemParams>) -> CliResult<SystemParams> {
        let b: Option<SystemParamsHz> = base.map(Into::into);
        let pick = |name: &str, over: Option<f64>, from: Option<f64>| {
            over.or(from)
                .ok_or_else(|| CliError::Config(format!("[system] is missing `{name}` and no preset was given")))
        };
        let hz = SystemParamsHz {
            omega_cav_hz: pick("omega_cav_hz", self.omega_cav_hz, b.map(|b| b.omega_cav_hz))?,
            omega_lc_hz: pick("omega_lc_hz", self.omega_lc_hz, b.map(|b| b.omega_lc_hz))?,
            kappa_cav_1_hz: pick("kappa_cav_1_hz", self.kappa_cav_1_hz, b.map(|b| b.kappa_cav_1_hz))?,
            kappa_cav_2_hz: pick("kappa_cav_2_hz", self.kappa_cav_2_hz, b.map(|b| b.kappa_cav_2_hz))?,
            kappa_cav_loss_hz: pick("kappa_cav_loss_hz", self.kappa_cav_loss_hz, b.map(|b| b.kappa_cav_loss_hz))?,
            kappa_lc_bare_hz: pick("kappa_lc_bare_hz", self.kappa_lc_bare_hz, b.map(|b| b.kappa_lc_bare_hz))?,
            g_hz: pick("g_hz", self.g_hz, b.map(|b| b.g_hz))?,
        };
        let mut p: SystemParams = hz.into();
        p.validate()?;
        if let Some(d) = self.delta_eff_hz {
            p = with_effective_detuning(&p, to_angular(d))?;
        }
        Ok(p)
    }
}

pub fn param_names(names: &[String], key: &str) -> CliResult<Vec<ParamName>> {
    names
        .iter()
        .map(|n| {
            n.parse()
                .map_err(|_| CliError::Config(format!("{key}: unknown parameter `{n}`")))
        })
        .collect()
}

impl SweepBlock {
    pub fn swept_field(&self) -> CliResult<SweptField> {
        self.field
            .parse()
            .map_err(|e: reentrant::Error| CliError::Config(format!("[sweep] field: {e}")))
    }

    pub fn values(&self) -> CliResult<Vec<f64>> {
        match (&self.values_hz, self.start_hz, self.stop_hz, self.points) {
            (Some(v), None, None, None) => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) => Ok(reentrant::trace::linspace(a, b, n)),
            (None, None, None, None) => Err(CliError::Config("[sweep] needs `values_hz` or `start_hz`/`stop_hz`/`points`".into())),
            _ => Err(CliError::Config(
                "[sweep] give either `values_hz` or all of `start_hz`/`stop_hz`/`points`".into(),
            )),
        }
    }
}

impl TargetsBlock {
    pub fn targets(&self) -> Targets {
        let d = Targets::default();
        Targets {
            kappa_eff_1_band_hz: self.kappa_eff_1_band_hz.map(|[a, b]| (a, b)).unwrap_or(d.kappa_eff_1_band_hz),
            sideband_threshold: self.sideband_threshold.unwrap_or(d.sideband_threshold),
            omega_m_hz: self.omega_m_hz.unwrap_or(d.omega_m_hz),
            max_dissipation_fraction: self.max_dissipation_fraction.unwrap_or(d.max_dissipation_fraction),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg: RunConfig = toml::from_str(
            r#"
            seed = 3
            preset = "270um"
            [system]
            g_hz = 57e6
            [grid]
            start_hz = 6.8e9
            stop_hz = 7.6e9
            points = 101
            [fit]
            free = ["g", "omega_lc_hz"]
            [fit.bounds]
            g = [1e6, 1e9]
            [sweep]
            field = "delta_eff"
            values_hz = [2e8, 6e8]
            [omit]
            [[omit.mode]]
            omega_m_hz = 0.66e6
            gamma_m_hz = 10.0
            gamma_e_hz = 900.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.grid.unwrap().points, 101);
        let fit = cfg.fit.unwrap();
        assert_eq!(param_names(&fit.free, "free").unwrap(), vec![ParamName::G, ParamName::OmegaLc]);
        assert_eq!(cfg.omit.unwrap().mode.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[system]\ng = 1.0\n").is_err());
    }

    #[test]
    fn system_needs_every_field_without_preset() {
        let block = SystemBlock {
            g_hz: Some(1e6),
            ..Default::default()
        };
        match block.apply(None) {
            Err(CliError::Config(msg)) => assert!(msg.contains("omega_cav_hz")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_resolve() {
        assert_eq!(preset_systems("all").unwrap().len(), 4);
        assert_eq!(preset_systems("316um").unwrap()[0].0, "316um");
        assert!(preset_systems("nope").is_err());
    }
}
