//! Linewidth extraction and least-squares fitting of measured spectra.

mod fit;
mod fwhm;
pub(crate) mod init;
mod multi;
mod noise;

pub use fit::{fit_trace, model_power, FitConfig, FitResult};
pub use fwhm::{extract_fwhm, Peak};
pub use multi::{multi_trace_fit, multi_trace_fit_with, MultiFitResult, SharedEstimate, DEFAULT_CONSISTENCY_SIGMA};
pub use noise::{add_complex_noise, sigma_for_snr, to_power_trace};

use crate::error::Result;
use crate::exec::Exec;
use crate::trace::ComplexTrace;

/// Fits one noisy copy of `clean` per seed. Noise has standard deviation
/// `sigma` on the complex amplitude; results follow `seeds` order.
pub fn monte_carlo_fits(
    clean: &ComplexTrace,
    sigma: f64,
    config: &FitConfig,
    seeds: &[u64],
    exec: Exec,
) -> Result<Vec<FitResult>> {
    exec.map(seeds, |&seed| {
        let noisy = add_complex_noise(clean, sigma, seed)?;
        fit_trace(&noisy, config)
    })
    .into_iter()
    .collect()
}

/// Sample mean and standard deviation.
pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}
