//! Synthetic measurement noise: i.i.d. complex Gaussian on the linear
//! amplitude, with `E|n|² = σ²` (each quadrature `σ/√2`).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::trace::{ComplexTrace, TraceKind};

pub fn add_complex_noise(trace: &ComplexTrace, sigma: f64, seed: u64) -> Result<ComplexTrace> {
    if trace.kind == TraceKind::PowerNormalized {
        return Err(Error::InvalidInput("noise is added to complex amplitudes, not power".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("noise sigma must be finite and nonnegative, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma * std::f64::consts::FRAC_1_SQRT_2)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let values = trace
        .values
        .iter()
        .map(|v| v + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    ComplexTrace::new(trace.freqs.clone(), values, trace.kind)
}

/// Noise amplitude giving amplitude SNR `snr` against the largest `|value|`
/// inside `window` (Hz), or the whole trace when `window` is `None`.
pub fn sigma_for_snr(trace: &ComplexTrace, window: Option<(f64, f64)>, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidInput(format!("SNR must be positive, got {snr}")));
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let peak = trace
        .freqs
        .iter()
        .zip(&trace.values)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(_, v)| v.norm())
        .fold(0.0f64, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidInput("no signal inside the SNR window".into()));
    }
    Ok(peak / snr)
}

/// `|value|²` scaled to unit maximum.
pub fn to_power_trace(trace: &ComplexTrace) -> Result<ComplexTrace> {
    ComplexTrace::from_power(trace.freqs.clone(), &trace.power())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::linspace;

    fn zeros(n: usize) -> ComplexTrace {
        ComplexTrace::new(linspace(0.0, 1.0, n), vec![Complex64::new(0.0, 0.0); n], TraceKind::S21).unwrap()
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let t = zeros(100);
        assert_eq!(add_complex_noise(&t, 0.1, 7).unwrap(), add_complex_noise(&t, 0.1, 7).unwrap());
        assert_ne!(add_complex_noise(&t, 0.1, 7).unwrap(), add_complex_noise(&t, 0.1, 8).unwrap());
    }

    #[test]
    fn noise_power_matches_sigma() {
        let n = 200_000;
        let noisy = add_complex_noise(&zeros(n), 0.3, 1).unwrap();
        let mean_sq: f64 = noisy.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_sq / 0.09 - 1.0).abs() < 0.02, "{mean_sq}");
    }

    #[test]
    fn snr_reference_is_windowed_peak() {
        let freqs = linspace(0.0, 4.0, 5);
        let values = [1.0, 4.0, 0.5, 2.0, 0.1].iter().map(|&v| Complex64::new(0.0, v)).collect();
        let t = ComplexTrace::new(freqs, values, TraceKind::S21).unwrap();
        assert_eq!(sigma_for_snr(&t, None, 100.0).unwrap(), 0.04);
        assert_eq!(sigma_for_snr(&t, Some((2.0, 4.0)), 100.0).unwrap(), 0.02);
        assert!(sigma_for_snr(&t, None, 0.0).is_err());
    }
}
