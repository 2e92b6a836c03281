//! Independent fits to several traces, averaged over shared parameters.

use serde::Serialize;

use super::fit::{fit_trace, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::params::ParamName;
use crate::trace::ComplexTrace;
use crate::units::to_hz;

/// Mean and spread of one shared parameter across traces, Hz.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharedEstimate {
    pub name: ParamName,
    pub mean_hz: f64,
    /// Standard error of the mean, `s / √n`.
    pub std_error_hz: f64,
    /// RMS of the individual fit uncertainties.
    pub fit_sigma_hz: f64,
    /// `Σ (xᵢ − x̄)² / σᵢ² / (n − 1)`.
    pub reduced_chi2: f64,
    /// `√χ²_red ≤ consistency_sigma`.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiFitResult {
    pub shared: Vec<SharedEstimate>,
    pub fits: Vec<FitResult>,
    /// False when any individual fit did not converge.
    pub complete: bool,
}

pub const DEFAULT_CONSISTENCY_SIGMA: f64 = 1.0;

/// Fits each trace on its own (frequencies stay per trace) and averages
/// the parameters in `shared`.
pub fn multi_trace_fit(
    traces: &[ComplexTrace],
    shared: &[ParamName],
    config: &FitConfig,
) -> Result<MultiFitResult> {
    multi_trace_fit_with(traces, shared, config, DEFAULT_CONSISTENCY_SIGMA, Exec::default())
}

pub fn multi_trace_fit_with(
    traces: &[ComplexTrace],
    shared: &[ParamName],
    config: &FitConfig,
    consistency_sigma: f64,
    exec: Exec,
) -> Result<MultiFitResult> {
    if traces.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "multi-trace fit needs at least 2 traces, got {}",
            traces.len()
        )));
    }
    if let Some(name) = shared.iter().find(|n| !config.free_params.contains(n)) {
        return Err(Error::InvalidInput(format!("shared parameter `{name}` is not free")));
    }
    let fits = exec
        .map(traces, |t| fit_trace(t, config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let shared = shared
        .iter()
        .map(|&name| summarize(name, &fits, consistency_sigma))
        .collect();
    let complete = fits.iter().all(|f| f.converged);
    Ok(MultiFitResult { shared, fits, complete })
}

fn summarize(name: ParamName, fits: &[FitResult], consistency_sigma: f64) -> SharedEstimate {
    let n = fits.len() as f64;
    let xs: Vec<f64> = fits.iter().map(|f| to_hz(f.params.get(name))).collect();
    let sigmas: Vec<f64> = fits.iter().map(|f| f.uncertainties_hz[&name]).collect();
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let chi2: f64 = xs
        .iter()
        .zip(&sigmas)
        .map(|(x, s)| {
            let d = x - mean;
            if d == 0.0 {
                0.0
            } else {
                d * d / (s * s)
            }
        })
        .sum();
    let reduced_chi2 = chi2 / (n - 1.0);
    SharedEstimate {
        name,
        mean_hz: mean,
        std_error_hz: (var / n).sqrt(),
        fit_sigma_hz: (sigmas.iter().map(|s| s * s).sum::<f64>() / n).sqrt(),
        reduced_chi2,
        consistent: reduced_chi2.sqrt() <= consistency_sigma,
    }
}
