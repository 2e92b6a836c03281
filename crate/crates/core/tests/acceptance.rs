//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p reentrant --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reentrant::design::{find_target_detuning, run_sweep, SweepSpec, SweptField, Targets};
use reentrant::electromech::{
    coupling_for_gamma_e, effective_lc, multi_mode_omit, omit_grid, transparency_windows, CoupledMode,
    MechanicalMode, PumpConfig,
};
use reentrant::lineshape::{extract_fwhm, fit_trace, mean_and_std, monte_carlo_fits, sigma_for_snr, FitConfig};
use reentrant::presets::{design_point, four_kelvin, millikelvin, refined_grid, Hat};
use reentrant::trace::linspace;
use reentrant::units::{to_angular, to_hz, KHZ, MHZ};
use reentrant::{
    dressed_modes, eq1_effective_rates, rates_at_detuning, resolved_sideband, s11, s21,
    with_effective_detuning, Exec, ParamName, SystemParams,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Narrow LC feature width in |S21|² against the effective-rate linewidth.
fn lc_width_tracks_effective_rate() -> Outcome {
    let kappa_cav_tot = 100.0 * MHZ;
    let mut errors = Vec::new();
    for ratio in [3.0, 6.0, 12.0] {
        let p = four_kelvin(ratio * kappa_cav_tot).map_err(fail)?;
        let expected = to_hz(eq1_effective_rates(&p).map_err(fail)?.kappa_lc_tot);
        let center = to_hz(dressed_modes(&p).map_err(fail)?.omega_lc);
        let grid = linspace(center - 10.0 * expected, center + 10.0 * expected, 20001);
        let trace = s21(&p, &grid).map_err(fail)?;
        let peak = extract_fwhm(&trace, (grid[0], grid[grid.len() - 1])).map_err(fail)?;
        errors.push((ratio, (peak.fwhm_hz - expected).abs() / expected));
    }
    let detail = errors
        .iter()
        .map(|(r, e)| format!("Δ/κ={r}: {:.2}%", 100.0 * e))
        .collect::<Vec<_>>()
        .join(", ");
    let within = errors.iter().all(|(_, e)| *e <= 0.10);
    let decreasing = errors.windows(2).all(|w| w[1].1 < w[0].1);
    check(within && decreasing, format!("{detail} (≤10%, decreasing)"))
}

fn target_detuning() -> Outcome {
    let base = design_point(600.0 * MHZ).map_err(fail)?;
    let delta = find_target_detuning(&base, to_angular(1.5 * MHZ)).map_err(fail)?;
    let back = to_hz(rates_at_detuning(&base, delta).kappa_eff_1);
    let rel = (to_hz(delta) - 600.0 * MHZ).abs() / (600.0 * MHZ);
    let round_trip = (back - 1.5 * MHZ).abs() / (1.5 * MHZ);
    check(
        rel <= 0.10 && round_trip <= 1e-9,
        format!("Δ_eff = {:.1} MHz (600 ± 10%), κ_eff,1 round trip {round_trip:.1e}", to_hz(delta) / MHZ),
    )
}

fn dissipation_fraction() -> Outcome {
    let spec = SweepSpec {
        base_params: Hat::Posts270.params(),
        swept_field: SweptField::DeltaEff,
        values: linspace(200.0 * MHZ, 1400.0 * MHZ, 241),
        targets: Targets::default(),
    };
    let result = run_sweep(&spec).map_err(fail)?;
    let in_band: Vec<f64> = result
        .rows
        .iter()
        .filter(|r| r.in_target_band)
        .filter_map(|r| r.rates.map(|x| x.dissipation_fraction))
        .collect();
    if in_band.is_empty() {
        return Err("no sweep row falls in the 1.5-2.0 MHz band".into());
    }
    let worst = in_band.iter().copied().fold(0.0, f64::max);
    let mk = eq1_effective_rates(&millikelvin()).map_err(fail)?.dissipation_fraction;
    check(
        worst <= 0.35 && (mk - 0.17).abs() <= 1e-12,
        format!(
            "{} in-band rows, max fraction {worst:.3} (≤ 0.30 ± 0.05); millikelvin {mk:.15}",
            in_band.len()
        ),
    )
}

fn tunability() -> Outcome {
    let k: Vec<f64> = Hat::ALL
        .iter()
        .map(|h| eq1_effective_rates(&h.params()).map(|r| to_hz(r.kappa_eff_1)))
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    let max = k.iter().copied().fold(f64::MIN, f64::max);
    let min = k.iter().copied().fold(f64::MAX, f64::min);
    check(
        max / min >= 10.0,
        format!("κ_eff,1 spans {:.3}-{:.3} MHz, factor {:.1} (≥ 10)", min / MHZ, max / MHZ, max / min),
    )
}

fn omit_window() -> Outcome {
    let p = millikelvin();
    let lc = effective_lc(&p, 0.0, 0.0).map_err(fail)?;
    let mode = MechanicalMode::from_hz(0.66 * MHZ, 10.0);
    let coupling = coupling_for_gamma_e(to_angular(0.9 * KHZ), lc.kappa_tot).map_err(fail)?;
    let pump = PumpConfig {
        omega_pump: lc.omega - mode.omega_m,
        coupling,
        lc_shift: 0.0,
        lc_extra_loss: 0.0,
    };
    let modes = [CoupledMode { mode, coupling }];
    let grid = omit_grid(&p, &modes, &pump, 401, 801).map_err(fail)?;
    let spectrum = multi_mode_omit(&p, &modes, &pump, &grid).map_err(fail)?;
    let w = transparency_windows(&spectrum, &p, &modes, &pump).map_err(fail)?[0]
        .ok_or("no transparency window found")?;
    let target = to_hz(pump.omega_pump + mode.omega_m);
    let i = grid.partition_point(|&f| f < target).clamp(1, grid.len() - 1);
    let step = grid[i] - grid[i - 1];
    let width_err = (w.fwhm_hz - 910.0).abs() / 910.0;
    let offset = w.peak_hz - target;
    check(
        width_err <= 0.05 && offset.abs() <= step,
        format!(
            "FWHM {:.1} Hz ({:+.2}% of 910 Hz), peak offset {offset:+.1} Hz (grid step {step:.1} Hz)",
            w.fwhm_hz,
            100.0 * (w.fwhm_hz - 910.0) / 910.0
        ),
    )
}

const FREE: [ParamName; 5] = [
    ParamName::OmegaCav,
    ParamName::OmegaLc,
    ParamName::G,
    ParamName::KappaLcBare,
    ParamName::KappaCav1,
];

fn random_truth(rng: &mut ChaCha8Rng) -> Option<SystemParams> {
    let base = SystemParams::from_hz(
        7.5e9,
        rng.random_range(6.5e9..7.5e9),
        rng.random_range(60e6..130e6),
        rng.random_range(1e6..5e6),
        rng.random_range(1e6..5e6),
        rng.random_range(0.3e6..0.7e6),
        rng.random_range(45e6..70e6),
    );
    with_effective_detuning(&base, to_angular(rng.random_range(250e6..900e6))).ok()
}

fn fit_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut draws = 0;
    while draws < 50 {
        let Some(truth) = random_truth(&mut rng) else { continue };
        draws += 1;
        let mut guess = truth;
        for name in FREE {
            let factor = if rng.random_bool(0.5) { 1.1 } else { 0.9 };
            guess.set(name, truth.get(name) * factor);
        }
        let outcome = refined_grid(&truth, 1500, 600)
            .and_then(|grid| s21(&truth, &grid))
            .and_then(|trace| fit_trace(&trace, &FitConfig::new(guess, &FREE)));
        match outcome {
            Ok(fit) if fit.converged => {
                for name in FREE {
                    worst = worst.max((fit.params.get(name) - truth.get(name)).abs() / truth.get(name));
                }
            }
            _ => failures += 1,
        }
    }
    let noiseless = format!("{draws} noiseless draws: worst rel error {worst:.1e}, {failures} failed");

    let truth = Hat::Posts270.params();
    let grid = refined_grid(&truth, 1500, 600).map_err(fail)?;
    let clean = s21(&truth, &grid).map_err(fail)?;
    let sigma = sigma_for_snr(&clean, None, 100.0).map_err(fail)?;
    let seeds: Vec<u64> = (0..100).collect();
    let fits = monte_carlo_fits(&clean, sigma, &FitConfig::new(truth, &FREE), &seeds, Exec::default()).map_err(fail)?;
    let g: Vec<f64> = fits.iter().map(|f| to_hz(f.params.g)).collect();
    let (mean, std) = mean_and_std(&g);
    let elapsed = start.elapsed().as_secs_f64();
    check(
        failures == 0 && worst <= 1e-6 && std / mean <= 0.05 && elapsed < 60.0,
        format!(
            "{noiseless}; SNR 100 x{}: g = {:.3} ± {:.3} MHz, σ_g/g = {:.2}% (≤ 5%); {elapsed:.1} s (< 60 s)",
            fits.len(),
            mean / MHZ,
            std / MHZ,
            100.0 * std / mean
        ),
    )
}

fn passivity_reciprocity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::MIN;
    let mut asymmetric = 0;
    let mut sets = 0;
    while sets < 1000 {
        let p = SystemParams::from_hz(
            rng.random_range(5e9..9e9),
            rng.random_range(5e9..9e9),
            rng.random_range(0.0..200e6),
            rng.random_range(0.0..200e6),
            rng.random_range(0.0..50e6),
            rng.random_range(0.0..5e6),
            rng.random_range(0.0..150e6),
        );
        if p.validate().is_err() {
            continue;
        }
        sets += 1;
        let mut swapped = p;
        swapped.kappa_cav_1 = p.kappa_cav_2;
        swapped.kappa_cav_2 = p.kappa_cav_1;
        let grid = linspace(4.5e9, 9.5e9, 400);
        let t = s21(&p, &grid).map_err(fail)?;
        let r1 = s11(&p, &grid).map_err(fail)?;
        let t_sw = s21(&swapped, &grid).map_err(fail)?;
        let r2 = s11(&swapped, &grid).map_err(fail)?;
        for i in 0..grid.len() {
            let out = t.values[i].norm_sqr();
            worst = worst.max(r1.values[i].norm_sqr() + out - 1.0);
            worst = worst.max(r2.values[i].norm_sqr() + t_sw.values[i].norm_sqr() - 1.0);
        }
        if t.values != t_sw.values {
            asymmetric += 1;
        }
    }
    check(
        worst <= 1e-9 && asymmetric == 0,
        format!("{sets} sets: max |S11|²+|S21|²-1 = {worst:.1e} (≤ 1e-9), {asymmetric} port-swap mismatches"),
    )
}

fn sideband_bookkeeping() -> Outcome {
    let v = resolved_sideband(
        to_angular(2.0 * MHZ),
        to_angular(1.5 * MHZ),
        reentrant::model::DEFAULT_SIDEBAND_THRESHOLD,
    )
    .map_err(fail)?;
    check(
        (v.ratio - 1.0 / 3.0).abs() <= 1e-12 && v.resolved,
        format!("ratio {:.12}, resolved = {}", v.ratio, v.resolved),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("effective-rate linewidth vs full model", lc_width_tracks_effective_rate),
        ("target detuning", target_detuning),
        ("dissipation fraction", dissipation_fraction),
        ("order-of-magnitude tunability", tunability),
        ("OMIT window", omit_window),
        ("fit recovery", fit_recovery),
        ("passivity and reciprocity", passivity_reciprocity),
        ("resolved-sideband bookkeeping", sideband_bookkeeping),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
