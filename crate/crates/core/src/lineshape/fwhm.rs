use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::ComplexTrace;

/// A single spectral feature, all frequencies in Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub center_hz: f64,
    pub fwhm_hz: f64,
    /// Peak power above the linear baseline.
    pub height: f64,
}

/// Measures the full width at half maximum of the one peak inside
/// `[lo, hi]` (Hz).
///
/// The baseline is the straight line through the power at the two window
/// edges. Half-maximum crossings are linearly interpolated between grid
/// points; the center comes from a parabola through the three samples
/// around the maximum. Crossings closer than half a FWHM to the window
/// edge are rejected as [`Error::WindowTooNarrow`].
pub fn extract_fwhm(trace: &ComplexTrace, window: (f64, f64)) -> Result<Peak> {
    let (lo, hi) = window;
    let (first, last) = match (trace.freqs.first(), trace.freqs.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidInput("empty trace".into())),
    };
    if !(lo < hi) || lo < first || hi > last {
        return Err(Error::InvalidInput(format!(
            "window [{lo}, {hi}] Hz not inside trace range [{first}, {last}] Hz"
        )));
    }
    let start = trace.freqs.partition_point(|&f| f < lo);
    let end = trace.freqs.partition_point(|&f| f <= hi);
    let f = &trace.freqs[start..end];
    if f.len() < 3 {
        return Err(Error::InvalidInput("window holds fewer than 3 samples".into()));
    }
    let power = trace.power();
    let p = &power[start..end];
    fwhm_of_samples(f, p)
}

pub(crate) fn fwhm_of_samples(f: &[f64], p: &[f64]) -> Result<Peak> {
    let n = f.len();
    let (f0, f1) = (f[0], f[n - 1]);
    let (p0, p1) = (p[0], p[n - 1]);
    let q: Vec<f64> = f
        .iter()
        .zip(p)
        .map(|(&x, &y)| y - (p0 + (p1 - p0) * (x - f0) / (f1 - f0)))
        .collect();

    let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (imax, &qmax) = q
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty window");
    if !(qmax > 1e-9 * scale) {
        return Err(Error::NoPeak);
    }
    let half = 0.5 * qmax;

    // contiguous runs above half maximum
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if q[i] > half {
            let s = i;
            while i + 1 < n && q[i + 1] > half {
                i += 1;
            }
            runs.push((s, i));
        }
        i += 1;
    }
    let main = runs
        .iter()
        .position(|&(s, e)| s <= imax && imax <= e)
        .expect("maximum lies in a run");
    // neighbouring runs count as separate peaks only across a real valley
    let mut left = runs[main].0;
    let mut right = runs[main].1;
    for &(s, e) in runs[..main].iter().rev() {
        let valley = q[e..=left].iter().copied().fold(f64::INFINITY, f64::min);
        if valley < 0.5 * half {
            return Err(Error::MultiplePeaks);
        }
        left = s;
    }
    for &(s, e) in &runs[main + 1..] {
        let valley = q[right..=s].iter().copied().fold(f64::INFINITY, f64::min);
        if valley < 0.5 * half {
            return Err(Error::MultiplePeaks);
        }
        right = e;
    }
    if left == 0 || right == n - 1 {
        return Err(Error::WindowTooNarrow);
    }

    let cross = |a: usize, b: usize| f[a] + (half - q[a]) * (f[b] - f[a]) / (q[b] - q[a]);
    let f_left = cross(left - 1, left);
    let f_right = cross(right, right + 1);
    let fwhm = f_right - f_left;
    if f_left - f0 < 0.5 * fwhm || f1 - f_right < 0.5 * fwhm {
        return Err(Error::WindowTooNarrow);
    }

    let center = parabolic_vertex(
        (f[imax - 1], q[imax - 1]),
        (f[imax], q[imax]),
        (f[imax + 1], q[imax + 1]),
    );
    Ok(Peak {
        center_hz: center,
        fwhm_hz: fwhm,
        height: qmax,
    })
}

/// Abscissa of the vertex of the parabola through three points (any spacing).
fn parabolic_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    // work relative to the middle point to keep the arithmetic well scaled
    let (xa, xc) = (a.0 - b.0, c.0 - b.0);
    let (ya, yc) = (a.1 - b.1, c.1 - b.1);
    let denom = xa * yc - xc * ya;
    if denom == 0.0 {
        return b.0;
    }
    let offset = 0.5 * (xa * xa * yc - xc * xc * ya) / denom;
    if offset.abs() > xa.abs().max(xc.abs()) {
        b.0
    } else {
        b.0 + offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{linspace, TraceKind};
    use num_complex::Complex64;

    fn lorentzian_trace(center: f64, fwhm: f64, span: f64, n: usize) -> ComplexTrace {
        let freqs = linspace(center - span, center + span, n);
        let values = freqs
            .iter()
            .map(|&x| {
                let d = 2.0 * (x - center) / fwhm;
                Complex64::new(1.0 / (1.0 + d * d), 0.0)
            })
            .collect();
        ComplexTrace::new(freqs, values, TraceKind::PowerNormalized).unwrap()
    }

    #[test]
    fn analytic_lorentzian_width() {
        // 1 MHz wide, 50 points per linewidth, ±40 linewidths
        let t = lorentzian_trace(7.0e9, 1.0e6, 40.0e6, 4001);
        let peak = extract_fwhm(&t, (7.0e9 - 40.0e6, 7.0e9 + 40.0e6)).unwrap();
        // the baseline through the wings removes L(40 Γ) ≈ 1.6e-4 of the peak
        assert!((peak.fwhm_hz / 1.0e6 - 1.0).abs() < 1e-3, "{}", peak.fwhm_hz);
        assert!((peak.center_hz - 7.0e9).abs() < 1e3);
    }

    #[test]
    fn flat_trace_has_no_peak() {
        let freqs = linspace(1.0, 2.0, 50);
        let t = ComplexTrace::new(freqs, vec![Complex64::new(0.5, 0.0); 50], TraceKind::PowerNormalized).unwrap();
        assert_eq!(extract_fwhm(&t, (1.0, 2.0)), Err(Error::NoPeak));
    }

    #[test]
    fn two_peaks_are_ambiguous() {
        let freqs = linspace(0.0, 100.0, 1001);
        let values = freqs
            .iter()
            .map(|&x| {
                let a = 1.0 / (1.0 + ((x - 30.0) / 2.0).powi(2));
                let b = 0.9 / (1.0 + ((x - 70.0) / 2.0).powi(2));
                Complex64::new(a + b, 0.0)
            })
            .collect();
        let t = ComplexTrace::new(freqs, values, TraceKind::S21).unwrap();
        assert_eq!(extract_fwhm(&t, (0.0, 100.0)), Err(Error::MultiplePeaks));
        assert!(extract_fwhm(&t, (0.0, 50.0)).is_ok());
    }

    #[test]
    fn narrow_window_rejected() {
        let t = lorentzian_trace(0.0, 10.0, 100.0, 2001);
        assert_eq!(extract_fwhm(&t, (-6.0, 6.0)), Err(Error::WindowTooNarrow));
        assert!(extract_fwhm(&t, (-60.0, 60.0)).is_ok());
    }

    #[test]
    fn window_outside_trace_rejected() {
        let t = lorentzian_trace(0.0, 10.0, 100.0, 201);
        assert!(matches!(extract_fwhm(&t, (-200.0, 0.0)), Err(Error::InvalidInput(_))));
        assert!(matches!(extract_fwhm(&t, (5.0, 5.0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn vertex_of_offset_parabola() {
        let y = |x: f64| -(x - 0.3) * (x - 0.3);
        let v = parabolic_vertex((-1.0, y(-1.0)), (0.0, y(0.0)), (2.0, y(2.0)));
        assert!((v - 0.3).abs() < 1e-12);
    }
}
