use std::path::PathBuf;

use reentrant::design::{run_sweep, SweepRow, SweepSpec};
use reentrant::electromech::{
    coupling_for_gamma_e, effective_lc, lower_sideband_pump, multi_mode_omit, omit_grid, transparency_windows,
    CoupledMode, MechanicalMode, PumpConfig, TransparencyWindow,
};
use reentrant::lineshape::{
    add_complex_noise, fit_trace, mean_and_std, monte_carlo_fits, multi_trace_fit_with, sigma_for_snr,
    to_power_trace, FitConfig, FitResult, SharedEstimate, DEFAULT_CONSISTENCY_SIGMA,
};
use reentrant::presets::refined_grid;
use reentrant::trace::{linspace, merge_grids, validate_grid};
use reentrant::units::{to_angular, to_hz};
use reentrant::{
    dressed_modes, eq1_effective_rates, s11, s21, Error, Exec, ParamName, SystemParams,
    SystemParamsHz, Warning,
};
use reentrant::model::DerivedRatesHz;
use serde::Serialize;

use crate::config::{param_names, preset_systems, GridBlock, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{read_trace_file, with_suffix, write_atomic, write_json, write_trace_file};

/// Everything a subcommand needs after flags and config are merged.
pub struct Run {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub preset: Option<String>,
    pub inputs: Vec<PathBuf>,
}

impl Run {
    fn output(&self, from_config: Option<&PathBuf>, default: &str) -> PathBuf {
        match (&self.out, from_config) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => self.config.resolve(p),
            (None, None) => PathBuf::from(default),
        }
    }

    fn systems(&self) -> CliResult<Vec<(Option<String>, SystemParams)>> {
        let block = self.config.system.unwrap_or_default();
        match &self.preset {
            Some(name) => preset_systems(name)?
                .into_iter()
                .map(|(label, p)| Ok((Some(label), block.apply(Some(p))?)))
                .collect(),
            None if self.config.system.is_some() => Ok(vec![(None, block.apply(None)?)]),
            None => Err(CliError::Config("no [system] block and no preset".into())),
        }
    }

    fn single_system(&self) -> CliResult<SystemParams> {
        let mut all = self.systems()?;
        if all.len() != 1 {
            return Err(CliError::Config("this command takes a single system, not a preset batch".into()));
        }
        Ok(all.remove(0).1)
    }
}

fn grid_for(block: Option<&GridBlock>, p: &SystemParams) -> CliResult<Vec<f64>> {
    let Some(g) = block else {
        return Ok(refined_grid(p, 2001, 801)?);
    };
    if g.points < 2 {
        return Err(Error::InvalidInput(format!("frequency grid needs at least 2 points, got {}", g.points)).into());
    }
    let grid = match (g.start_hz, g.stop_hz) {
        (Some(a), Some(b)) => {
            let mut parts = vec![linspace(a, b, g.points)];
            if let Some(n) = g.fine_points {
                let d = dressed_modes(p)?;
                let width = to_hz(d.kappa_lc.max(eq1_effective_rates(p)?.kappa_lc_tot));
                let lc = to_hz(d.omega_lc);
                parts.push(linspace(lc - 10.0 * width, lc + 10.0 * width, n));
            }
            merge_grids(&parts)
        }
        (None, None) => refined_grid(p, g.points, g.fine_points.unwrap_or(801))?,
        _ => return Err(CliError::Config("[grid] needs both `start_hz` and `stop_hz`, or neither".into())),
    };
    validate_grid(&grid)?;
    Ok(grid)
}

pub fn simulate(run: &Run) -> CliResult<()> {
    let block = run.config.simulate.clone().unwrap_or_default();
    if block.kinds.is_empty() {
        return Err(CliError::Config("[simulate] kinds is empty".into()));
    }
    let out = run.output(block.output.as_ref(), "trace.csv");
    let systems = run.systems()?;
    let batch = systems.len() > 1;
    let mut seed = run.seed;
    for (label, params) in &systems {
        let grid = grid_for(run.config.grid.as_ref(), params)?;
        for kind in &block.kinds {
            let clean = match kind.as_str() {
                "s21" | "power" => s21(params, &grid)?,
                "s11" => s11(params, &grid)?,
                other => return Err(CliError::Config(format!("[simulate] unknown kind `{other}`"))),
            };
            let noisy = match block.noise_snr {
                Some(snr) => add_complex_noise(&clean, sigma_for_snr(&clean, None, snr)?, seed)?,
                None => clean,
            };
            seed = seed.wrapping_add(1);
            let trace = if kind == "power" { to_power_trace(&noisy)? } else { noisy };
            let mut path = out.clone();
            if batch {
                path = with_suffix(&path, label.as_deref().unwrap_or("system"));
            }
            if block.kinds.len() > 1 {
                path = with_suffix(&path, kind);
            }
            write_trace_file(&path, &trace)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FitEntry<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(flatten)]
    fit: &'a FitResult,
    params_hz: SystemParamsHz,
    derived: Option<DerivedRatesHz>,
    warnings: Vec<Warning>,
}

impl<'a> FitEntry<'a> {
    fn new(fit: &'a FitResult, trace: Option<String>, seed: Option<u64>) -> Self {
        let rates = eq1_effective_rates(&fit.params).ok();
        let mut warnings = fit.params.warnings();
        if let Some(r) = &rates {
            warnings.extend(r.warnings());
        }
        Self {
            trace,
            seed,
            fit,
            params_hz: fit.params.into(),
            derived: rates.map(|r| r.in_hz()),
            warnings,
        }
    }
}

#[derive(Serialize)]
struct Spread {
    name: ParamName,
    mean_hz: f64,
    std_hz: f64,
}

#[derive(Serialize)]
struct MonteCarloReport<'a> {
    trace: String,
    runs: usize,
    snr: f64,
    sigma: f64,
    results: Vec<FitEntry<'a>>,
    summary: Vec<Spread>,
}

#[derive(Serialize)]
struct FitReport<'a> {
    fits: Vec<FitEntry<'a>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    shared: Vec<SharedEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    monte_carlo: Vec<MonteCarloReport<'a>>,
}

pub fn fit(run: &Run) -> CliResult<()> {
    let block = run.config.fit.clone().unwrap_or_default();
    let paths: Vec<(String, PathBuf)> = if run.inputs.is_empty() {
        block
            .traces
            .iter()
            .map(|p| (p.display().to_string(), run.config.resolve(p)))
            .collect()
    } else {
        run.inputs.iter().map(|p| (p.display().to_string(), p.clone())).collect()
    };
    if paths.is_empty() {
        return Err(CliError::Config("no trace files given".into()));
    }
    let guess = block
        .initial_guess
        .unwrap_or_default()
        .apply(Some(run.single_system()?))?;
    let mut config = FitConfig::new(guess, &param_names(&block.free, "[fit] free")?);
    if let Some(n) = block.max_iterations {
        config.max_iterations = n;
    }
    if let Some(t) = block.tolerance {
        config.tolerance = t;
    }
    if let Some(a) = block.auto_init {
        config.auto_init = a;
    }
    for (name, [lo, hi]) in &block.bounds {
        let key: ParamName = name
            .parse()
            .map_err(|_| CliError::Config(format!("[fit.bounds] unknown parameter `{name}`")))?;
        config.bounds.insert(key, (to_angular(*lo), to_angular(*hi)));
    }
    config.validate()?;
    let shared = param_names(&block.shared, "[fit] shared")?;

    let traces = paths
        .iter()
        .map(|(_, p)| read_trace_file(p))
        .collect::<CliResult<Vec<_>>>()?;

    let exec = Exec::default();
    let mut shared_out = Vec::new();
    let fits: Vec<FitResult> = if traces.len() >= 2 && !shared.is_empty() {
        let sigma = block.consistency_sigma.unwrap_or(DEFAULT_CONSISTENCY_SIGMA);
        let multi = multi_trace_fit_with(&traces, &shared, &config, sigma, exec)?;
        shared_out = multi.shared;
        multi.fits
    } else {
        exec.map(&traces, |t| fit_trace(t, &config))
            .into_iter()
            .collect::<reentrant::Result<_>>()?
    };

    // (trace label, runs, snr, sigma, seeds, fits)
    type McBatch = (String, usize, f64, f64, Vec<u64>, Vec<FitResult>);
    let mut mc_fits: Vec<McBatch> = Vec::new();
    if let Some(mc) = block.monte_carlo {
        if mc.runs < 2 {
            return Err(CliError::Config("[fit.monte_carlo] runs must be at least 2".into()));
        }
        for ((label, _), trace) in paths.iter().zip(&traces) {
            if trace.kind == reentrant::TraceKind::PowerNormalized {
                return Err(CliError::Config(format!("{label}: Monte Carlo needs a complex trace")));
            }
            let sigma = sigma_for_snr(trace, None, mc.snr)?;
            let seeds: Vec<u64> = (0..mc.runs as u64).map(|i| run.seed.wrapping_add(i)).collect();
            let results = monte_carlo_fits(trace, sigma, &config, &seeds, exec)?;
            mc_fits.push((label.clone(), mc.runs, mc.snr, sigma, seeds, results));
        }
    }

    let report = FitReport {
        fits: fits
            .iter()
            .zip(&paths)
            .map(|(f, (label, _))| FitEntry::new(f, Some(label.clone()), None))
            .collect(),
        shared: shared_out,
        monte_carlo: mc_fits
            .iter()
            .map(|(label, runs, snr, sigma, seeds, results)| MonteCarloReport {
                trace: label.clone(),
                runs: *runs,
                snr: *snr,
                sigma: *sigma,
                results: results
                    .iter()
                    .zip(seeds)
                    .map(|(f, &s)| FitEntry::new(f, None, Some(s)))
                    .collect(),
                summary: config
                    .free_params
                    .iter()
                    .map(|&name| {
                        let xs: Vec<f64> = results.iter().map(|f| to_hz(f.params.get(name))).collect();
                        let (mean_hz, std_hz) = mean_and_std(&xs);
                        Spread { name, mean_hz, std_hz }
                    })
                    .collect(),
            })
            .collect(),
    };
    let out = run.output(block.output.as_ref(), "fit.json");
    write_json(&out, &report)?;

    let failed = fits
        .iter()
        .chain(mc_fits.iter().flat_map(|m| &m.5))
        .filter(|f| !f.converged)
        .count();
    if failed > 0 {
        return Err(CliError::NotConverged(format!(
            "{failed} fit(s) did not converge; report written to {}",
            out.display()
        )));
    }
    Ok(())
}

const SWEEP_COLUMNS: [&str; 19] = [
    "value_hz",
    "valid",
    "delta_eff_hz",
    "kappa_cav_tot_hz",
    "kappa_eff_1_hz",
    "kappa_eff_2_hz",
    "kappa_eff_loss_hz",
    "kappa_lc_bare_hz",
    "kappa_lc_loss_hz",
    "kappa_lc_tot_hz",
    "dissipation_fraction",
    "dispersive_valid",
    "g_hz",
    "in_target_band",
    "sideband_ratio",
    "sideband_resolved",
    "dissipation_ok",
    "warning",
    "error",
];

fn sweep_line(row: &SweepRow) -> String {
    let mut cells = vec![row.value_hz.to_string(), row.valid().to_string()];
    match row.rates.map(|r| (r.in_hz(), r.warnings())) {
        Some((r, w)) => {
            cells.extend(
                [
                    r.delta_eff_hz,
                    r.kappa_cav_tot_hz,
                    r.kappa_eff_1_hz,
                    r.kappa_eff_2_hz,
                    r.kappa_eff_loss_hz,
                    r.kappa_lc_bare_hz,
                    r.kappa_lc_loss_hz,
                    r.kappa_lc_tot_hz,
                    r.dissipation_fraction,
                ]
                .map(|v| v.to_string()),
            );
            cells.push(r.dispersive_valid.to_string());
            cells.push(r.g_hz.to_string());
            cells.push(row.in_target_band.to_string());
            cells.push(row.sideband_ratio.to_string());
            cells.push(row.sideband_resolved.to_string());
            cells.push(row.dissipation_ok.to_string());
            cells.push(if w.is_empty() { String::new() } else { "non_dispersive".into() });
            cells.push(String::new());
        }
        None => {
            cells.extend(std::iter::repeat_n(String::new(), 11));
            cells.extend(["false", "", "false", "false"].map(String::from));
            cells.push(String::new());
            cells.push(row.error.as_deref().unwrap_or("").replace([',', '\n'], ";"));
        }
    }
    cells.join(",")
}

pub fn sweep(run: &Run) -> CliResult<()> {
    let block = run
        .config
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("missing [sweep] block".into()))?;
    let spec = SweepSpec {
        base_params: run.single_system()?,
        swept_field: block.swept_field()?,
        values: block.values()?,
        targets: block.targets.targets(),
    };
    let result = run_sweep(&spec)?;
    let k: Vec<f64> = result
        .rows
        .iter()
        .filter_map(|r| r.rates.map(|r| r.kappa_eff_1))
        .collect();
    if let (Some(max), Some(min)) = (k.iter().copied().reduce(f64::max), k.iter().copied().reduce(f64::min)) {
        log::info!("kappa_eff_1 spans a factor {:.3} over the sweep", max / min);
    }
    let out = run.output(block.output.as_ref(), "sweep.csv");
    write_atomic(&out, |w| {
        writeln!(w, "# swept = {}", result.field)?;
        writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
        for row in &result.rows {
            writeln!(w, "{}", sweep_line(row))?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct WindowEntry {
    mode: usize,
    found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_m_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fwhm_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_fwhm_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_e_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'static str>,
}

impl WindowEntry {
    fn new(mode: usize, w: Option<TransparencyWindow>) -> Self {
        Self {
            mode,
            found: w.is_some(),
            peak_hz: w.map(|w| w.peak_hz),
            omega_m_hz: w.map(|w| w.omega_m_hz),
            fwhm_hz: w.map(|w| w.fwhm_hz),
            expected_fwhm_hz: w.map(|w| w.expected_fwhm_hz),
            gamma_e_hz: w.map(|w| w.gamma_e_hz),
            message: w.is_none().then_some("no window found"),
        }
    }
}

#[derive(Serialize)]
struct OmitReport {
    pump_hz: f64,
    lc_hz: f64,
    kappa_lc_tot_hz: f64,
    windows: Vec<WindowEntry>,
    warnings: Vec<Warning>,
}

pub fn omit(run: &Run) -> CliResult<()> {
    let block = run
        .config
        .omit
        .clone()
        .ok_or_else(|| CliError::Config("missing [omit] block".into()))?;
    if block.mode.is_empty() {
        return Err(CliError::Config("[omit] needs at least one [[omit.mode]]".into()));
    }
    let params = run.single_system()?;
    let shift = to_angular(block.lc_shift_hz);
    let extra = to_angular(block.lc_extra_loss_hz);
    let lc = effective_lc(&params, shift, extra)?;
    let modes = block
        .mode
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let coupling = match (m.g_em_hz, m.gamma_e_hz) {
                (Some(g), None) => to_angular(g),
                (None, Some(ge)) => coupling_for_gamma_e(to_angular(ge), lc.kappa_tot)?,
                _ => {
                    return Err(CliError::Config(format!(
                        "[[omit.mode]] #{i}: give exactly one of `g_em_hz` or `gamma_e_hz`"
                    )))
                }
            };
            Ok(CoupledMode {
                mode: MechanicalMode::from_hz(m.omega_m_hz, m.gamma_m_hz),
                coupling,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    modes.iter().try_for_each(|m| m.mode.validate())?;
    let omega_pump = match block.pump_hz {
        Some(f) => to_angular(f),
        None => lower_sideband_pump(&params, shift, extra, modes[0].mode.omega_m)?,
    };
    let pump = PumpConfig {
        omega_pump,
        coupling: modes[0].coupling,
        lc_shift: shift,
        lc_extra_loss: extra,
    };
    let grid = match &run.config.grid {
        Some(g) => grid_for(Some(g), &params)?,
        None => omit_grid(&params, &modes, &pump, block.coarse_points, block.fine_points)?,
    };
    let spectrum = multi_mode_omit(&params, &modes, &pump, &grid)?;
    let windows = transparency_windows(&spectrum, &params, &modes, &pump)?;

    let out = run.output(block.output.as_ref(), "omit.csv");
    let report_path = match &block.report {
        Some(p) if run.out.is_none() => run.config.resolve(p),
        _ => out.with_extension("json"),
    };
    if report_path == out {
        return Err(CliError::Config(format!(
            "trace and report would both be written to {}",
            out.display()
        )));
    }
    let report = OmitReport {
        pump_hz: to_hz(omega_pump),
        lc_hz: to_hz(lc.omega),
        kappa_lc_tot_hz: to_hz(lc.kappa_tot),
        windows: windows
            .into_iter()
            .enumerate()
            .map(|(mode, w)| WindowEntry::new(mode, w))
            .collect(),
        warnings: spectrum.warnings.clone(),
    };
    write_trace_file(&out, &spectrum.trace)?;
    write_json(&report_path, &report)
}
