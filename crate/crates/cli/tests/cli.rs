use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn reentrant(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reentrant"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const ROUND_TRIP: &str = r#"
preset = "270um"

[simulate]
kinds = ["s21"]
output = "sim.csv"

[fit]
traces = ["sim.csv"]
output = "fit.json"

[fit.initial_guess]
omega_cav_hz = 8.1e9
omega_lc_hz = 6.3e9
kappa_cav_1_hz = 85e6
kappa_lc_bare_hz = 0.53e6
g_hz = 51e6
"#;

#[test]
fn simulate_then_fit_recovers_parameters() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", ROUND_TRIP);
    let sim = reentrant(dir.path(), &["simulate", "--config", "run.toml"]);
    assert_eq!(code(&sim), 0, "{}", stderr(&sim));
    let fit = reentrant(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(code(&fit), 0, "{}", stderr(&fit));

    let report = json(&dir.path().join("fit.json"));
    let entry = &report["fits"][0];
    assert_eq!(entry["converged"], true);
    let truth = [
        ("omega_cav_hz", 7.404455058867e9),
        ("omega_lc_hz", 7.0e9),
        ("kappa_cav_1_hz", 95e6),
        ("kappa_lc_bare_hz", 0.48e6),
        ("g_hz", 57e6),
    ];
    for (key, want) in truth {
        let got = entry["params_hz"][key].as_f64().unwrap();
        assert!(((got - want) / want).abs() < 1e-6, "{key}: {got} vs {want}");
    }
    let derived = &entry["derived"];
    assert!((derived["delta_eff_hz"].as_f64().unwrap() - 420e6).abs() < 420.0);
    for key in ["omega_cav", "omega_lc", "kappa_cav_1", "kappa_lc_bare", "g"] {
        assert!(entry["uncertainties_hz"][key].is_number(), "missing {key}");
    }
}

#[test]
fn four_hat_batch_writes_four_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = reentrant(dir.path(), &["simulate", "--preset", "all", "--out", "hats.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["hats_238um.csv", "hats_270um.csv", "hats_300um.csv", "hats_316um.csv"]);
}

#[test]
fn zero_point_grid_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", "preset = \"270um\"\n[grid]\nstart_hz = 6.9e9\nstop_hz = 7.1e9\npoints = 0\n");
    let out = reentrant(dir.path(), &["simulate", "--config", "run.toml"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("at least 2 points"));
}

#[test]
fn invalid_parameter_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", "preset = \"270um\"\n[system]\nkappa_cav_2_hz = -1.0\n");
    let out = reentrant(dir.path(), &["simulate", "--config", "run.toml"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("kappa_cav_2"), "{}", stderr(&out));
}

#[test]
fn missing_and_malformed_traces_exit_differently() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "freq_hz,re,im\n7e9,0.1,0.2\n7.1e9,oops,0.2\n");
    let missing = reentrant(dir.path(), &["fit", "--preset", "270um", "nope.csv"]);
    let malformed = reentrant(dir.path(), &["fit", "--preset", "270um", "bad.csv"]);
    assert_eq!(code(&missing), 3, "{}", stderr(&missing));
    assert_eq!(code(&malformed), 4, "{}", stderr(&malformed));
    assert!(stderr(&malformed).contains("line 3"), "{}", stderr(&malformed));
    let no_config = reentrant(dir.path(), &["fit", "--config", "absent.toml"]);
    assert_eq!(code(&no_config), 3);
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", &ROUND_TRIP.replace("[fit]\n", "[fit]\nmax_iterations = 1\n"));
    assert_eq!(code(&reentrant(dir.path(), &["simulate", "--config", "run.toml"])), 0);
    let out = reentrant(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    assert_eq!(json(&dir.path().join("fit.json"))["fits"][0]["converged"], false);
}

#[test]
fn monte_carlo_batch_emits_per_seed_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{ROUND_TRIP}\n[fit.monte_carlo]\nruns = 4\nsnr = 100.0\n"
    );
    write(dir.path(), "run.toml", &cfg);
    assert_eq!(code(&reentrant(dir.path(), &["simulate", "--config", "run.toml"])), 0);
    let out = reentrant(dir.path(), &["fit", "--config", "run.toml", "--seed", "11"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mc = &json(&dir.path().join("fit.json"))["monte_carlo"][0];
    let seeds: Vec<u64> = mc["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, [11, 12, 13, 14]);
    let g = mc["summary"].as_array().unwrap().iter().find(|s| s["name"] == "g").unwrap();
    assert!((g["mean_hz"].as_f64().unwrap() - 57e6).abs() < 1e6);
    assert!(g["std_hz"].as_f64().unwrap() > 0.0);
}

#[test]
fn multi_trace_fit_reports_shared_estimate() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&reentrant(dir.path(), &["simulate", "--preset", "270um", "--out", "a.csv"])), 0);
    assert_eq!(code(&reentrant(dir.path(), &["simulate", "--preset", "300um", "--out", "b.csv"])), 0);
    write(dir.path(), "fit.toml", "preset = \"270um\"\n[fit]\nshared = [\"g\"]\n");
    let out = reentrant(dir.path(), &["fit", "--config", "fit.toml", "--out", "multi.json", "a.csv", "b.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&dir.path().join("multi.json"));
    assert_eq!(report["fits"].as_array().unwrap().len(), 2);
    let g = &report["shared"][0];
    assert_eq!(g["name"], "g");
    assert!((g["mean_hz"].as_f64().unwrap() / 57e6 - 1.0).abs() < 1e-6);
}

#[test]
fn sweep_table_has_design_row_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "sweep.toml",
        "preset = \"design\"\n[sweep]\nfield = \"delta_eff\"\nvalues_hz = [2e8, 6e8, 1.4e9, 1e4]\n",
    );
    let out = reentrant(dir.path(), &["sweep", "--config", "sweep.toml", "--out", "s.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == header.len()));
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let keff: f64 = rows[1][col("kappa_eff_1_hz")].parse().unwrap();
    assert!((keff / 1.5e6 - 1.0).abs() < 0.05, "{keff}");
    assert_eq!(rows[3][col("valid")], "false");
    assert!(!rows[3][col("error")].is_empty());
    for key in [
        "kappa_lc_loss_hz",
        "kappa_lc_tot_hz",
        "dissipation_fraction",
        "in_target_band",
        "sideband_resolved",
        "dissipation_ok",
    ] {
        col(key);
    }
}

#[test]
fn empty_sweep_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sweep.toml", "preset = \"270um\"\n[sweep]\nfield = \"delta_eff\"\nvalues_hz = []\n");
    let out = reentrant(dir.path(), &["sweep", "--config", "sweep.toml"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

const OMIT: &str = r#"
preset = "millikelvin"
[omit]
output = "omit.csv"
[[omit.mode]]
omega_m_hz = 0.66e6
gamma_m_hz = 10.0
gamma_e_hz = 900.0
"#;

#[test]
fn omit_reports_the_window() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "omit.toml", OMIT);
    let out = reentrant(dir.path(), &["omit", "--config", "omit.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&dir.path().join("omit.json"));
    let w = &report["windows"][0];
    assert_eq!(w["found"], true);
    assert!((w["fwhm_hz"].as_f64().unwrap() / 910.0 - 1.0).abs() < 0.05);
    assert!((w["omega_m_hz"].as_f64().unwrap() - 0.66e6).abs() < 50.0);
    assert!(dir.path().join("omit.csv").exists());
}

#[test]
fn omit_without_coupling_finds_no_window() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "omit.toml", &OMIT.replace("gamma_e_hz = 900.0", "g_em_hz = 0.0"));
    let out = reentrant(dir.path(), &["omit", "--config", "omit.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let w = &json(&dir.path().join("omit.json"))["windows"][0];
    assert_eq!(w["found"], false);
    assert_eq!(w["message"], "no window found");
}

#[test]
fn omit_two_modes_give_two_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{OMIT}\n[[omit.mode]]\nomega_m_hz = 0.75e6\ngamma_m_hz = 10.0\ngamma_e_hz = 600.0\n");
    write(dir.path(), "omit.toml", &cfg);
    let out = reentrant(dir.path(), &["omit", "--config", "omit.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let windows = json(&dir.path().join("omit.json"))["windows"].as_array().unwrap().clone();
    assert_eq!(windows.len(), 2);
    assert!(windows.iter().all(|w| w["found"] == true));
    let m1 = windows[1]["omega_m_hz"].as_f64().unwrap();
    assert!((m1 - 0.75e6).abs() < 50.0, "{m1}");
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "preset = \"316um\"\nseed = 5\n[simulate]\nkinds = [\"s21\", \"s11\"]\nnoise_snr = 50.0\n";
    write(dir.path(), "run.toml", cfg);
    for name in ["one.csv", "two.csv"] {
        assert_eq!(code(&reentrant(dir.path(), &["simulate", "--config", "run.toml", "--out", name])), 0);
    }
    for kind in ["s21", "s11"] {
        let a = std::fs::read(dir.path().join(format!("one_{kind}.csv"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("two_{kind}.csv"))).unwrap();
        assert_eq!(a, b);
    }
    assert_eq!(code(&reentrant(dir.path(), &["simulate", "--config", "run.toml", "--out", "three.csv", "--seed", "6"])), 0);
    assert_ne!(
        std::fs::read(dir.path().join("one_s21.csv")).unwrap(),
        std::fs::read(dir.path().join("three_s21.csv")).unwrap()
    );
}
