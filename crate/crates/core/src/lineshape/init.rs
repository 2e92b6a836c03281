//! Starting-point heuristic for the fit: the cavity is the widest feature
//! and the LC the narrowest feature above three times the median power.
//! A feature is a local maximum that is also the highest point of its own
//! half-height run, spanning at least three samples; anything else is
//! treated as noise.

use crate::params::{ParamName, SystemParams};
use crate::units::to_angular;

const MIN_FEATURE_SAMPLES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Feature {
    pub center_hz: f64,
    pub width_hz: f64,
    pub height: f64,
}

/// Local maxima above `3 × median` with their half-height widths.
///
/// Widths are measured by walking outward until the power drops below half
/// of the maximum, so a noise spike riding on a broad line inherits the
/// width of that line.
pub(crate) fn features(freqs: &[f64], power: &[f64]) -> Vec<Feature> {
    let n = power.len();
    if n < 3 {
        return Vec::new();
    }
    let mut sorted = power.to_vec();
    sorted.sort_by(f64::total_cmp);
    let threshold = 3.0 * sorted[n / 2];
    let mut out = Vec::new();
    for i in 1..n - 1 {
        let p = power[i];
        if !(p > threshold && p >= power[i - 1] && p > power[i + 1]) {
            continue;
        }
        let half = 0.5 * p;
        let mut l = i;
        while l > 0 && power[l] > half {
            l -= 1;
        }
        let mut r = i;
        while r < n - 1 && power[r] > half {
            r += 1;
        }
        // flank ripples and isolated spikes are not features
        if r - l < MIN_FEATURE_SAMPLES + 1 || power[l..=r].iter().any(|&q| q > p) {
            continue;
        }
        out.push(Feature {
            center_hz: freqs[i],
            width_hz: freqs[r] - freqs[l],
            height: p,
        });
    }
    out
}

/// Replaces the free bare frequencies in `guess` with values read off the
/// spectrum. Dressed peak positions are pulled back to bare values with the
/// dispersive shift implied by the guessed `g` and `κ_cav,tot`.
pub(crate) fn auto_initial_guess(
    freqs: &[f64],
    power: &[f64],
    guess: &SystemParams,
    free: &[ParamName],
) -> SystemParams {
    let set_cav = free.contains(&ParamName::OmegaCav);
    let set_lc = free.contains(&ParamName::OmegaLc);
    if !set_cav && !set_lc {
        return *guess;
    }
    let found = features(freqs, power);
    let widest = found
        .iter()
        .max_by(|a, b| a.width_hz.total_cmp(&b.width_hz).then(a.height.total_cmp(&b.height)));
    let narrowest = found
        .iter()
        .min_by(|a, b| a.width_hz.total_cmp(&b.width_hz).then(b.height.total_cmp(&a.height)));
    let (Some(widest), Some(narrowest)) = (widest, narrowest) else {
        return *guess;
    };
    if widest.width_hz <= narrowest.width_hz {
        return *guess;
    }
    let cav = to_angular(widest.center_hz);
    let lc = to_angular(narrowest.center_hz);
    let delta = cav - lc;
    let half_kappa = 0.5 * guess.kappa_cav_tot();
    let shift = guess.g * guess.g * delta / (delta * delta + half_kappa * half_kappa);
    let mut out = *guess;
    if set_cav {
        out.omega_cav = cav - shift;
    }
    if set_lc {
        out.omega_lc = lc + shift;
    }
    out
}
