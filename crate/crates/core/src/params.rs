//! Bare model parameters of the cavity–LC chain.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{to_angular, to_hz};

/// Bare rates and frequencies, all in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega_cav: f64,
    pub omega_lc: f64,
    pub kappa_cav_1: f64,
    pub kappa_cav_2: f64,
    pub kappa_cav_loss: f64,
    pub kappa_lc_bare: f64,
    pub g: f64,
}

/// `SystemParams` as quoted in Hz (`f = ω/2π`); the file/report view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParamsHz {
    pub omega_cav_hz: f64,
    pub omega_lc_hz: f64,
    pub kappa_cav_1_hz: f64,
    pub kappa_cav_2_hz: f64,
    pub kappa_cav_loss_hz: f64,
    pub kappa_lc_bare_hz: f64,
    pub g_hz: f64,
}

impl From<SystemParamsHz> for SystemParams {
    fn from(p: SystemParamsHz) -> Self {
        SystemParams::from_hz(
            p.omega_cav_hz,
            p.omega_lc_hz,
            p.kappa_cav_1_hz,
            p.kappa_cav_2_hz,
            p.kappa_cav_loss_hz,
            p.kappa_lc_bare_hz,
            p.g_hz,
        )
    }
}

impl From<SystemParams> for SystemParamsHz {
    fn from(p: SystemParams) -> Self {
        SystemParamsHz {
            omega_cav_hz: to_hz(p.omega_cav),
            omega_lc_hz: to_hz(p.omega_lc),
            kappa_cav_1_hz: to_hz(p.kappa_cav_1),
            kappa_cav_2_hz: to_hz(p.kappa_cav_2),
            kappa_cav_loss_hz: to_hz(p.kappa_cav_loss),
            kappa_lc_bare_hz: to_hz(p.kappa_lc_bare),
            g_hz: to_hz(p.g),
        }
    }
}

/// Non-fatal conditions attached to model results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum Warning {
    /// `g` is not small compared to the mode frequencies.
    RotatingWave { g_over_omega: f64 },
    /// `|Δ_eff|` is below `max(κ_cav,tot, g)`, where the effective-rate formula is approximate.
    NonDispersive { delta_eff_hz: f64, bound_hz: f64 },
    /// Pump sits above the effective LC frequency.
    PumpNotRedDetuned,
    /// Pump is farther than one LC linewidth from the lower mechanical sideband.
    PumpOffSideband { offset_hz: f64 },
    /// `κ_LC,tot / 4ω_m ≥ 1`.
    SidebandUnresolved { ratio: f64 },
    /// Two mechanical modes lie within one linewidth of each other.
    OverlappingModes { first: usize, second: usize },
}

impl SystemParams {
    /// Builds parameters from values quoted in Hz.
    #[allow(clippy::too_many_arguments)]
    pub fn from_hz(
        f_cav: f64,
        f_lc: f64,
        kappa_cav_1: f64,
        kappa_cav_2: f64,
        kappa_cav_loss: f64,
        kappa_lc_bare: f64,
        g: f64,
    ) -> Self {
        Self {
            omega_cav: to_angular(f_cav),
            omega_lc: to_angular(f_lc),
            kappa_cav_1: to_angular(kappa_cav_1),
            kappa_cav_2: to_angular(kappa_cav_2),
            kappa_cav_loss: to_angular(kappa_cav_loss),
            kappa_lc_bare: to_angular(kappa_lc_bare),
            g: to_angular(g),
        }
    }

    pub fn kappa_cav_tot(&self) -> f64 {
        self.kappa_cav_1 + self.kappa_cav_2 + self.kappa_cav_loss
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::OmegaCav => self.omega_cav,
            ParamName::OmegaLc => self.omega_lc,
            ParamName::KappaCav1 => self.kappa_cav_1,
            ParamName::KappaCav2 => self.kappa_cav_2,
            ParamName::KappaCavLoss => self.kappa_cav_loss,
            ParamName::KappaLcBare => self.kappa_lc_bare,
            ParamName::G => self.g,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        match name {
            ParamName::OmegaCav => self.omega_cav = value,
            ParamName::OmegaLc => self.omega_lc = value,
            ParamName::KappaCav1 => self.kappa_cav_1 = value,
            ParamName::KappaCav2 => self.kappa_cav_2 = value,
            ParamName::KappaCavLoss => self.kappa_cav_loss = value,
            ParamName::KappaLcBare => self.kappa_lc_bare = value,
            ParamName::G => self.g = value,
        }
    }

    pub fn with(mut self, name: ParamName, value: f64) -> Self {
        self.set(name, value);
        self
    }

    /// Checks the hard invariants: finite values, positive frequencies,
    /// nonnegative rates.
    pub fn validate(&self) -> Result<()> {
        for name in ParamName::ALL {
            let v = self.get(name);
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field: name.as_str(),
                    reason: format!("must be finite, got {v}"),
                });
            }
            if name.is_frequency() && v <= 0.0 {
                return Err(Error::InvalidParameter {
                    field: name.as_str(),
                    reason: format!("frequency must be positive, got {} Hz", to_hz(v)),
                });
            }
            if !name.is_frequency() && v < 0.0 {
                return Err(Error::InvalidParameter {
                    field: name.as_str(),
                    reason: format!("rate must be nonnegative, got {} Hz", to_hz(v)),
                });
            }
        }
        Ok(())
    }

    /// Soft checks; currently only the rotating-wave guard `g < min(ω)/10`.
    pub fn warnings(&self) -> Vec<Warning> {
        let min_omega = self.omega_cav.min(self.omega_lc);
        if self.g >= min_omega / 10.0 {
            vec![Warning::RotatingWave {
                g_over_omega: self.g / min_omega,
            }]
        } else {
            Vec::new()
        }
    }
}

/// Names of the `SystemParams` fields, used to select free fit parameters
/// and swept fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    OmegaCav,
    OmegaLc,
    #[serde(rename = "kappa_cav_1")]
    KappaCav1,
    #[serde(rename = "kappa_cav_2")]
    KappaCav2,
    KappaCavLoss,
    KappaLcBare,
    G,
}

impl ParamName {
    pub const ALL: [ParamName; 7] = [
        ParamName::OmegaCav,
        ParamName::OmegaLc,
        ParamName::KappaCav1,
        ParamName::KappaCav2,
        ParamName::KappaCavLoss,
        ParamName::KappaLcBare,
        ParamName::G,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::OmegaCav => "omega_cav",
            ParamName::OmegaLc => "omega_lc",
            ParamName::KappaCav1 => "kappa_cav_1",
            ParamName::KappaCav2 => "kappa_cav_2",
            ParamName::KappaCavLoss => "kappa_cav_loss",
            ParamName::KappaLcBare => "kappa_lc_bare",
            ParamName::G => "g",
        }
    }

    pub fn is_frequency(self) -> bool {
        matches!(self, ParamName::OmegaCav | ParamName::OmegaLc)
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().trim_end_matches("_hz");
        ParamName::ALL
            .into_iter()
            .find(|n| n.as_str() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown parameter name `{s}`")))
    }
}
