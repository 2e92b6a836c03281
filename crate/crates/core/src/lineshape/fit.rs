//! Damped least-squares (Levenberg–Marquardt) fit of the coupled-mode model
//! to measured power spectra.
//!
//! Model and data are each scaled to unit maximum, and the model carries a
//! least-squares amplitude factor, so unknown line attenuation drops out.
//! Gradients come from central finite differences with a relative step of
//! `1e-6` and an absolute floor.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::init::auto_initial_guess;
use crate::error::{Error, Result};
use crate::model::{inverse_susceptibility, response};
use crate::params::{ParamName, SystemParams};
use crate::trace::{ComplexTrace, TraceKind};
use crate::units::{to_angular, to_hz};

const FD_RELATIVE_STEP: f64 = 1e-6;
/// Absolute finite-difference floor, rad/s (≈ 1.6 Hz).
const FD_ABSOLUTE_STEP: f64 = 10.0;
const LAMBDA_INITIAL: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
const DEGENERACY_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub free_params: Vec<ParamName>,
    pub initial_guess: SystemParams,
    /// Per-parameter `[lo, hi]` in rad/s. Missing entries default to
    /// `(0, ∞)` for frequencies and `[0, ∞)` for rates.
    pub bounds: BTreeMap<ParamName, (f64, f64)>,
    pub max_iterations: usize,
    /// Relative cost/step threshold for declaring convergence.
    pub tolerance: f64,
    /// Re-seed free frequencies from the features found in the trace.
    pub auto_init: bool,
    /// Per-point weights; uniform when `None`.
    pub weights: Option<Vec<f64>>,
}

impl FitConfig {
    pub fn new(initial_guess: SystemParams, free_params: &[ParamName]) -> Self {
        Self {
            free_params: free_params.to_vec(),
            initial_guess,
            bounds: BTreeMap::new(),
            max_iterations: 200,
            tolerance: 1e-10,
            auto_init: true,
            weights: None,
        }
    }

    pub fn bounds_for(&self, name: ParamName) -> (f64, f64) {
        self.bounds.get(&name).copied().unwrap_or(if name.is_frequency() {
            (f64::MIN_POSITIVE, f64::INFINITY)
        } else {
            (0.0, f64::INFINITY)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.free_params.is_empty() {
            return Err(Error::InvalidInput("no free parameters".into()));
        }
        for (i, name) in self.free_params.iter().enumerate() {
            if self.free_params[..i].contains(name) {
                return Err(Error::InvalidInput(format!("parameter `{name}` listed twice")));
            }
        }
        self.initial_guess.validate()?;
        for &name in &self.free_params {
            let (lo, hi) = self.bounds_for(name);
            let v = self.initial_guess.get(name);
            if !(lo <= hi) || v < lo || v > hi {
                return Err(Error::InvalidParameter {
                    field: name.as_str(),
                    reason: format!("initial guess {} Hz outside bounds", to_hz(v)),
                });
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    #[serde(skip)]
    pub params: SystemParams,
    /// RMS of the weighted residuals of the normalized power.
    pub residual_norm: f64,
    pub initial_residual_norm: f64,
    /// 1σ per free parameter, Hz.
    pub uncertainties_hz: BTreeMap<ParamName, f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    #[serde(skip)]
    pub cost_history: Vec<f64>,
}

/// The normalized power the fit compares against for a trace of `kind`.
pub fn model_power(params: &SystemParams, freqs_hz: &[f64], kind: TraceKind) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let w = to_angular(f);
        let (s21, s11) = response(params, w, inverse_susceptibility(w, params.omega_lc, params.kappa_lc_bare))?;
        out.push(match kind {
            TraceKind::S11 => s11.norm_sqr(),
            _ => s21.norm_sqr(),
        });
    }
    normalize(&mut out)?;
    Ok(out)
}

fn normalize(p: &mut [f64]) -> Result<()> {
    let peak = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::InvalidInput("spectrum has no positive power".into()));
    }
    p.iter_mut().for_each(|v| *v /= peak);
    Ok(())
}

struct Problem<'a> {
    freqs: &'a [f64],
    data: Vec<f64>,
    sqrt_w: Vec<f64>,
    kind: TraceKind,
    base: SystemParams,
    free: &'a [ParamName],
    bounds: Vec<(f64, f64)>,
}

impl Problem<'_> {
    fn params_at(&self, x: &[f64]) -> SystemParams {
        let mut p = self.base;
        for (&name, &v) in self.free.iter().zip(x) {
            p.set(name, v);
        }
        p
    }

    fn residuals(&self, x: &[f64]) -> Option<DVector<f64>> {
        let p = self.params_at(x);
        let model = model_power(&p, self.freqs, self.kind).ok()?;
        // best overall scale in closed form, so the noisy data maximum does
        // not bias the fit
        let (mut md, mut mm) = (0.0, 0.0);
        for ((m, d), w) in model.iter().zip(&self.data).zip(&self.sqrt_w) {
            md += w * w * m * d;
            mm += w * w * m * m;
        }
        let a = if mm > 0.0 { md / mm } else { 1.0 };
        let r = DVector::from_iterator(
            model.len(),
            model
                .iter()
                .zip(&self.data)
                .zip(&self.sqrt_w)
                .map(|((m, d), w)| w * (a * m - d)),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn clamp(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Central differences, falling back to a one-sided difference when the
    /// model is undefined on one side (for instance a port rate at zero).
    fn jacobian(&self, x: &[f64], r0: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = self.data.len();
        let mut jac = DMatrix::zeros(m, x.len());
        for j in 0..x.len() {
            let h = (FD_RELATIVE_STEP * x[j].abs()).max(FD_ABSOLUTE_STEP);
            let (lo, hi) = self.bounds[j];
            let up = (x[j] + h).min(hi);
            let down = (x[j] - h).max(lo);
            let at = |v: f64| {
                let mut xs = x.to_vec();
                xs[j] = v;
                self.residuals(&xs)
            };
            let col = match (at(up), at(down)) {
                (Some(rp), Some(rm)) if up > down => (rp - rm) / (up - down),
                (Some(rp), _) if up > x[j] => (rp - r0) / (up - x[j]),
                (_, Some(rm)) if down < x[j] => (r0 - rm) / (x[j] - down),
                _ => return Err(Error::Singular),
            };
            jac.set_column(j, &col);
        }
        Ok(jac)
    }

    fn degeneracy_check(&self, jac: &DMatrix<f64>) -> Result<()> {
        let jtj = jac.transpose() * jac;
        let n = jtj.nrows();
        let diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)].sqrt()).collect();
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::DegenerateParameters {
                first: self.free[i].as_str(),
                second: self.free[i].as_str(),
            });
        }
        let corr = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] / (diag[i] * diag[j]));
        let mut worst = (0, 0, 0.0f64);
        for i in 0..n {
            for j in i + 1..n {
                let c = corr[(i, j)].abs();
                if c > worst.2 {
                    worst = (i, j, c);
                }
            }
        }
        let min_eig = corr
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if n > 1 && (worst.2 > 1.0 - DEGENERACY_LIMIT || min_eig < DEGENERACY_LIMIT * DEGENERACY_LIMIT) {
            return Err(Error::DegenerateParameters {
                first: self.free[worst.0].as_str(),
                second: self.free[worst.1].as_str(),
            });
        }
        Ok(())
    }
}

fn cost(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Solves `(Â + λI) y = −ĝ` in Marquardt-scaled coordinates.
fn damped_step(jtj: &DMatrix<f64>, grad: &DVector<f64>, scale: &[f64], lambda: f64) -> Option<DVector<f64>> {
    let n = jtj.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| {
        jtj[(i, j)] / (scale[i] * scale[j]) + if i == j { lambda } else { 0.0 }
    });
    let b = DVector::from_fn(n, |i, _| -grad[i] / scale[i]);
    let y = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a.lu().solve(&b)?,
    };
    Some(DVector::from_fn(n, |i, _| y[i] / scale[i]))
}

/// Fits the model to `trace` over the free parameters in `config`.
///
/// Running out of iterations is not an error; it yields `converged = false`.
pub fn fit_trace(trace: &ComplexTrace, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    trace.validate()?;
    let n = config.free_params.len();
    if trace.len() < 5 * n {
        return Err(Error::InvalidInput(format!(
            "{} points is too few for {n} free parameters",
            trace.len()
        )));
    }
    let mut data = trace.power();
    normalize(&mut data)?;
    let sqrt_w: Vec<f64> = match &config.weights {
        Some(w) if w.len() != trace.len() => {
            return Err(Error::InvalidInput("weights length differs from trace".into()))
        }
        Some(w) if w.iter().any(|v| !(*v >= 0.0)) => {
            return Err(Error::InvalidInput("weights must be nonnegative".into()))
        }
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; trace.len()],
    };
    let weight_sum: f64 = sqrt_w.iter().map(|w| w * w).sum();

    let mut start = config.initial_guess;
    if config.auto_init {
        start = auto_initial_guess(&trace.freqs, &data, &start, &config.free_params);
    }
    let problem = Problem {
        freqs: &trace.freqs,
        data,
        sqrt_w,
        kind: trace.kind,
        base: start,
        free: &config.free_params,
        bounds: config.free_params.iter().map(|&p| config.bounds_for(p)).collect(),
    };

    let mut x: Vec<f64> = config.free_params.iter().map(|&p| start.get(p)).collect();
    problem.clamp(&mut x);
    let mut r = problem
        .residuals(&x)
        .ok_or_else(|| Error::InvalidInput("model undefined at initial guess".into()))?;
    let mut c = cost(&r);
    let initial_cost = c;
    let mut history = vec![c];
    let mut lambda = LAMBDA_INITIAL;
    let mut converged = false;
    let mut iterations = 0;
    let floor = 1e-28 * r.len() as f64;

    let mut jac = problem.jacobian(&x, &r)?;
    problem.degeneracy_check(&jac)?;

    while iterations < config.max_iterations {
        if c <= floor {
            converged = true;
            break;
        }
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let d = jtj[(i, i)].sqrt();
                if d > 0.0 {
                    d
                } else {
                    1.0
                }
            })
            .collect();

        let mut accepted = None;
        while lambda <= LAMBDA_MAX {
            if let Some(step) = damped_step(&jtj, &grad, &scale, lambda) {
                let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                problem.clamp(&mut trial);
                if let Some(rt) = problem.residuals(&trial) {
                    let ct = cost(&rt);
                    if ct < c {
                        accepted = Some((trial, rt, ct));
                        lambda = (lambda / 10.0).max(1e-15);
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        let Some((trial, rt, ct)) = accepted else {
            // no descent direction left at working precision
            converged = true;
            break;
        };
        let rel_step = x
            .iter()
            .zip(&trial)
            .map(|(a, b)| (b - a).abs() / a.abs().max(FD_ABSOLUTE_STEP))
            .fold(0.0f64, f64::max);
        let rel_cost = (c - ct) / c;
        x = trial;
        r = rt;
        c = ct;
        history.push(c);
        if rel_cost <= config.tolerance && rel_step <= config.tolerance {
            converged = true;
            break;
        }
        jac = problem.jacobian(&x, &r)?;
    }

    let params = problem.params_at(&x);
    let uncertainties_hz = uncertainties(&problem, &x, &r, n)?;
    let rms = |cost: f64| (cost / weight_sum).sqrt();
    Ok(FitResult {
        params,
        residual_norm: rms(c),
        initial_residual_norm: rms(initial_cost),
        uncertainties_hz,
        converged,
        iterations,
        cost_history: history,
    })
}

/// `σ² diag((JᵀJ)⁻¹)` with `σ²` the residual variance, converted to Hz.
fn uncertainties(
    problem: &Problem<'_>,
    x: &[f64],
    r: &DVector<f64>,
    n: usize,
) -> Result<BTreeMap<ParamName, f64>> {
    let jac = problem.jacobian(x, r)?;
    let jtj = jac.transpose() * &jac;
    let dof = (r.len() - n).max(1) as f64;
    let variance = cost(r) / dof;
    let scale: Vec<f64> = (0..n).map(|i| jtj[(i, i)].sqrt().max(f64::MIN_POSITIVE)).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] / (scale[i] * scale[j]));
    let inv = scaled.try_inverse();
    Ok(problem
        .free
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let sigma = match &inv {
                Some(m) if m[(i, i)] >= 0.0 => (variance * m[(i, i)]).sqrt() / scale[i],
                _ => f64::INFINITY,
            };
            (name, to_hz(sigma))
        })
        .collect())
}
