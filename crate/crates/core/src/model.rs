//! Input–output model of the two-port cavity coupled to the LC resonator.
//!
//! Conventions: a mode with frequency `ω0` and energy decay rate `κ` has
//! susceptibility `χ(ω) = 1 / (i(ω0 − ω) + κ/2)`. The probe response is
//! governed by
//!
//! ```text
//! D(ω)   = i(ω_cav − ω) + κ_cav,tot/2 + g² χ_LC(ω)
//! S21(ω) = √(κ_cav,1 κ_cav,2) / D(ω)
//! S11(ω) = 1 − κ_cav,1 / D(ω)
//! ```
//!
//! All arguments are in rad/s except frequency grids, which are in Hz.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::params::{SystemParams, Warning};
use crate::trace::{validate_grid, ComplexTrace, TraceKind};
use crate::units::{to_angular, to_hz};

/// Single-mode susceptibility `1 / (i(ω0 − ω) + κ/2)`.
pub fn susceptibility(omega: f64, omega_0: f64, kappa_tot: f64) -> Result<Complex64> {
    if !(kappa_tot >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "kappa_tot must be nonnegative, got {kappa_tot}"
        )));
    }
    let inv = inverse_susceptibility(omega, omega_0, kappa_tot);
    if inv == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular);
    }
    Ok(inv.inv())
}

#[inline]
pub(crate) fn inverse_susceptibility(omega: f64, omega_0: f64, kappa: f64) -> Complex64 {
    Complex64::new(0.5 * kappa, omega_0 - omega)
}

/// Transmission and reflection at one angular frequency, given the
/// (possibly pump-dressed) inverse LC susceptibility at that frequency.
///
/// Written as `N / (D_cav χ_LC⁻¹ + g²)` so that a lossless LC driven on
/// resonance (`χ_LC⁻¹ = 0`) gives a finite answer.
#[inline]
pub(crate) fn response(p: &SystemParams, omega: f64, lc_inverse: Complex64) -> Result<(Complex64, Complex64)> {
    let cav_inverse = inverse_susceptibility(omega, p.omega_cav, p.kappa_cav_tot());
    let denom = cav_inverse * lc_inverse + p.g * p.g;
    if denom == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular);
    }
    let ratio = lc_inverse / denom;
    let s21 = (p.kappa_cav_1 * p.kappa_cav_2).sqrt() * ratio;
    let s11 = 1.0 - p.kappa_cav_1 * ratio;
    Ok((s21, s11))
}

fn bare_response(p: &SystemParams, freq_hz: f64) -> Result<(Complex64, Complex64)> {
    let omega = to_angular(freq_hz);
    response(p, omega, inverse_susceptibility(omega, p.omega_lc, p.kappa_lc_bare))
}

fn evaluate(
    params: &SystemParams,
    freqs: &[f64],
    kind: TraceKind,
    exec: Exec,
) -> Result<ComplexTrace> {
    params.validate()?;
    if freqs.is_empty() {
        return Err(Error::InvalidInput("empty frequency grid".into()));
    }
    validate_grid(freqs)?;
    let values = exec
        .map(freqs, |&f| {
            bare_response(params, f).map(|(s21, s11)| match kind {
                TraceKind::S11 => s11,
                _ => s21,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexTrace {
        freqs: freqs.to_vec(),
        values,
        kind,
    })
}

/// Transmission `S21` on a grid in Hz.
pub fn s21(params: &SystemParams, freqs: &[f64]) -> Result<ComplexTrace> {
    s21_with(params, freqs, Exec::default())
}

pub fn s21_with(params: &SystemParams, freqs: &[f64], exec: Exec) -> Result<ComplexTrace> {
    evaluate(params, freqs, TraceKind::S21, exec)
}

/// Reflection off port 1, normalized to unit reflection far off resonance.
pub fn s11(params: &SystemParams, freqs: &[f64]) -> Result<ComplexTrace> {
    s11_with(params, freqs, Exec::default())
}

pub fn s11_with(params: &SystemParams, freqs: &[f64], exec: Exec) -> Result<ComplexTrace> {
    evaluate(params, freqs, TraceKind::S11, exec)
}

/// Both eigenvalues of the non-Hermitian coupling matrix
/// `[[ω_cav − iκ_cav,tot/2, g], [g, ω_LC − iκ_LC,bare/2]]`, unordered.
pub fn normal_mode_eigenvalues(p: &SystemParams) -> [Complex64; 2] {
    let a = Complex64::new(p.omega_cav, -0.5 * p.kappa_cav_tot());
    let d = Complex64::new(p.omega_lc, -0.5 * p.kappa_lc_bare);
    if p.g == 0.0 {
        return [a, d];
    }
    let mean = 0.5 * (a + d);
    let half_split = 0.5 * (a - d);
    let root = (half_split * half_split + p.g * p.g).sqrt();
    [mean + root, mean - root]
}

/// Dressed (normal-mode) frequencies and linewidths, in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressedModes {
    pub omega_cav: f64,
    pub omega_lc: f64,
    pub kappa_cav: f64,
    pub kappa_lc: f64,
    /// Fraction of the cavity-like eigenvector's weight on the bare cavity.
    pub cavity_weight: f64,
}

impl DressedModes {
    /// `Δ_eff = ω_cav,dressed − ω_LC,dressed`.
    pub fn delta_eff(&self) -> f64 {
        self.omega_cav - self.omega_lc
    }
}

/// Solves the coupled two-mode problem and labels each branch by which
/// bare mode dominates its eigenvector.
pub fn dressed_modes(p: &SystemParams) -> Result<DressedModes> {
    p.validate()?;
    let eig = normal_mode_eigenvalues(p);
    let d = Complex64::new(p.omega_lc, -0.5 * p.kappa_lc_bare);
    // eigenvector ∝ (λ − d, g); weight on the bare cavity component
    let weight = |lambda: Complex64| {
        let c = (lambda - d).norm_sqr();
        let total = c + p.g * p.g;
        if total == 0.0 {
            0.0
        } else {
            c / total
        }
    };
    let (w0, w1) = if p.g == 0.0 { (1.0, 0.0) } else { (weight(eig[0]), weight(eig[1])) };
    if (w0 - w1).abs() <= 1e-12 {
        return Err(Error::AmbiguousBranch);
    }
    let (cav, lc, w) = if w0 > w1 { (eig[0], eig[1], w0) } else { (eig[1], eig[0], w1) };
    Ok(DressedModes {
        omega_cav: cav.re,
        omega_lc: lc.re,
        kappa_cav: -2.0 * cav.im,
        kappa_lc: -2.0 * lc.im,
        cavity_weight: w,
    })
}

/// Effective rates of the LC, all in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedRates {
    pub delta_eff: f64,
    pub kappa_cav_tot: f64,
    pub kappa_eff_1: f64,
    pub kappa_eff_2: f64,
    pub kappa_eff_loss: f64,
    pub kappa_lc_bare: f64,
    pub kappa_lc_loss: f64,
    pub kappa_lc_tot: f64,
    pub dissipation_fraction: f64,
    /// `|Δ_eff| ≥ max(κ_cav,tot, g)`.
    pub dispersive_valid: bool,
    pub g: f64,
}

/// Hz view of [`DerivedRates`] for reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedRatesHz {
    pub delta_eff_hz: f64,
    pub kappa_cav_tot_hz: f64,
    pub kappa_eff_1_hz: f64,
    pub kappa_eff_2_hz: f64,
    pub kappa_eff_loss_hz: f64,
    pub kappa_lc_bare_hz: f64,
    pub kappa_lc_loss_hz: f64,
    pub kappa_lc_tot_hz: f64,
    pub dissipation_fraction: f64,
    pub dispersive_valid: bool,
    pub g_hz: f64,
}

impl DerivedRates {
    pub fn in_hz(&self) -> DerivedRatesHz {
        DerivedRatesHz {
            delta_eff_hz: to_hz(self.delta_eff),
            kappa_cav_tot_hz: to_hz(self.kappa_cav_tot),
            kappa_eff_1_hz: to_hz(self.kappa_eff_1),
            kappa_eff_2_hz: to_hz(self.kappa_eff_2),
            kappa_eff_loss_hz: to_hz(self.kappa_eff_loss),
            kappa_lc_bare_hz: to_hz(self.kappa_lc_bare),
            kappa_lc_loss_hz: to_hz(self.kappa_lc_loss),
            kappa_lc_tot_hz: to_hz(self.kappa_lc_tot),
            dissipation_fraction: self.dissipation_fraction,
            dispersive_valid: self.dispersive_valid,
            g_hz: to_hz(self.g),
        }
    }

    pub fn warnings(&self) -> Vec<Warning> {
        if self.dispersive_valid {
            Vec::new()
        } else {
            vec![Warning::NonDispersive {
                delta_eff_hz: to_hz(self.delta_eff),
                bound_hz: to_hz(self.kappa_cav_tot.max(self.g)),
            }]
        }
    }
}

/// Effective couplings `κ_eff,i = κ_cav,i g² / (Δ_eff² + (κ_cav,tot/2)²)`
/// using the dressed detuning.
pub fn eq1_effective_rates(p: &SystemParams) -> Result<DerivedRates> {
    let dressed = dressed_modes(p)?;
    Ok(rates_at_detuning(p, dressed.delta_eff()))
}

/// The effective-rate map evaluated at an externally supplied `Δ_eff`.
pub fn rates_at_detuning(p: &SystemParams, delta_eff: f64) -> DerivedRates {
    let kappa_cav_tot = p.kappa_cav_tot();
    let factor = p.g * p.g / (delta_eff * delta_eff + 0.25 * kappa_cav_tot * kappa_cav_tot);
    let kappa_eff_1 = p.kappa_cav_1 * factor;
    let kappa_eff_2 = p.kappa_cav_2 * factor;
    let kappa_eff_loss = p.kappa_cav_loss * factor;
    let kappa_lc_loss = p.kappa_lc_bare + kappa_eff_loss;
    let kappa_lc_tot = kappa_eff_1 + kappa_eff_2 + kappa_lc_loss;
    let dissipation_fraction = if kappa_lc_tot > 0.0 { kappa_lc_loss / kappa_lc_tot } else { 0.0 };
    DerivedRates {
        delta_eff,
        kappa_cav_tot,
        kappa_eff_1,
        kappa_eff_2,
        kappa_eff_loss,
        kappa_lc_bare: p.kappa_lc_bare,
        kappa_lc_loss,
        kappa_lc_tot,
        dissipation_fraction,
        dispersive_valid: delta_eff.abs() >= kappa_cav_tot.max(p.g),
        g: p.g,
    }
}

/// Bare cavity frequency that places the dressed detuning at `delta_eff`,
/// holding every other parameter fixed.
///
/// With `a − d = δ − iε` (`δ = ω_cav − ω_LC`, `ε = (κ_cav,tot − κ_LC,bare)/2`)
/// the eigenvalue splitting satisfies `(Δ_eff + iy)² = (δ − iε)² + 4g²`,
/// which solves to `δ² = (Δ_eff² + ε² − 4g²) / (1 + ε²/Δ_eff²)`.
pub fn with_effective_detuning(p: &SystemParams, delta_eff: f64) -> Result<SystemParams> {
    if delta_eff == 0.0 || !delta_eff.is_finite() {
        return Err(Error::NoSolution(format!(
            "effective detuning must be finite and nonzero, got {} Hz",
            to_hz(delta_eff)
        )));
    }
    let eps = 0.5 * (p.kappa_cav_tot() - p.kappa_lc_bare);
    let num = delta_eff * delta_eff + eps * eps - 4.0 * p.g * p.g;
    if num <= 0.0 {
        return Err(Error::NoSolution(format!(
            "dressed detuning {} Hz is inside the avoided crossing",
            to_hz(delta_eff)
        )));
    }
    let bare = (num / (1.0 + eps * eps / (delta_eff * delta_eff))).sqrt();
    let mut out = *p;
    out.omega_cav = p.omega_lc + bare.copysign(delta_eff);
    out.validate()?;
    Ok(out)
}

/// Ratio `κ_LC,tot / 4ω_m`; the resolved-sideband regime is ratio ≪ 1.
pub fn resolved_sideband_ratio(kappa_lc_tot: f64, omega_m: f64) -> Result<f64> {
    if !(omega_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mechanical frequency must be positive, got {omega_m}"
        )));
    }
    if !(kappa_lc_tot >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "LC linewidth must be nonnegative, got {kappa_lc_tot}"
        )));
    }
    Ok(kappa_lc_tot / (4.0 * omega_m))
}

pub const DEFAULT_SIDEBAND_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SidebandVerdict {
    pub ratio: f64,
    pub threshold: f64,
    pub resolved: bool,
}

/// Judges `κ_LC,tot ≪ 4ω_m` as `ratio < threshold`.
pub fn resolved_sideband(kappa_lc_tot: f64, omega_m: f64, threshold: f64) -> Result<SidebandVerdict> {
    let ratio = resolved_sideband_ratio(kappa_lc_tot, omega_m)?;
    Ok(SidebandVerdict {
        ratio,
        threshold,
        resolved: ratio < threshold,
    })
}
