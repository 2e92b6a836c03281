//! Sampled spectra and frequency grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    S21,
    S11,
    /// Real power in `[0, 1]`, stored in the real part of `values`.
    PowerNormalized,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::S21 => "s21",
            TraceKind::S11 => "s11",
            TraceKind::PowerNormalized => "power_normalized",
        }
    }
}

/// A response sampled on a strictly increasing frequency grid (Hz).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexTrace {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub kind: TraceKind,
}

impl ComplexTrace {
    pub fn new(freqs: Vec<f64>, values: Vec<Complex64>, kind: TraceKind) -> Result<Self> {
        let trace = Self { freqs, values, kind };
        trace.validate()?;
        Ok(trace)
    }

    /// Wraps real power samples, scaling them to unit maximum.
    pub fn from_power(freqs: Vec<f64>, power: &[f64]) -> Result<Self> {
        let peak = power.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(peak > 0.0) {
            return Err(Error::InvalidInput("power trace has no positive sample".into()));
        }
        let values = power.iter().map(|p| Complex64::new(p / peak, 0.0)).collect();
        Self::new(freqs, values, TraceKind::PowerNormalized)
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.freqs)?;
        if self.values.len() != self.freqs.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} frequencies",
                self.values.len(),
                self.freqs.len()
            )));
        }
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite trace value".into()));
        }
        if self.kind == TraceKind::PowerNormalized
            && self
                .values
                .iter()
                .any(|v| v.im != 0.0 || v.re < 0.0 || v.re > 1.0)
        {
            return Err(Error::InvalidInput(
                "normalized power must be real and within [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// `|value|²` for complex traces, the stored value for power traces.
    pub fn power(&self) -> Vec<f64> {
        match self.kind {
            TraceKind::PowerNormalized => self.values.iter().map(|v| v.re).collect(),
            _ => self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Restricts the trace to `lo ≤ f ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Self> {
        let (freqs, values): (Vec<f64>, Vec<Complex64>) = self
            .freqs
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(f, v)| (*f, *v))
            .unzip();
        Self::new(freqs, values, self.kind)
    }
}

pub fn validate_grid(freqs: &[f64]) -> Result<()> {
    if freqs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "frequency grid needs at least 2 points, got {}",
            freqs.len()
        )));
    }
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::InvalidInput("non-finite frequency".into()));
    }
    if let Some(i) = freqs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "frequencies not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// `n` evenly spaced points over `[start, stop]`, endpoints included.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Merges several grids into one strictly increasing grid, dropping points
/// closer than `1e-12` relative to their neighbour.
pub fn merge_grids(grids: &[Vec<f64>]) -> Vec<f64> {
    let mut all: Vec<f64> = grids.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for f in all {
        match out.last() {
            Some(&last) if f - last <= 1e-12 * f.abs().max(1.0) => {}
            _ => out.push(f),
        }
    }
    out
}
