use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use serde_json::Value;
use tempfile::TempDir;

fn herdsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herdsim"))
        .args(args)
        .env_remove("HERDSIM_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = herdsim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, "n_agents = 2000\nt_max = 2500\n").unwrap();
    path
}

/// Deterministic fixture generator.
struct Lcg(u64);

impl Lcg {
    fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    fn normal(&mut self) -> f64 {
        let (u, v) = (self.uniform(), self.uniform());
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}

fn date(day: i64) -> String {
    let epoch = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    (epoch + chrono::Days::new(day as u64)).to_string()
}

fn index_fixture(dir: &Path) -> PathBuf {
    let mut rng = Lcg(11);
    let mut text = String::from("date,close,volume\n");
    let mut close: f64 = 100.0;
    for day in 0..800 {
        let r = 0.01 * rng.normal();
        close *= r.exp();
        let volume = 1000.0 * (1.0 + 20.0 * r.abs()) * (1.0 + 0.2 * rng.uniform());
        let _ = writeln!(text, "{},{close:.6},{volume:.2}", date(day));
    }
    let path = dir.join("index.csv");
    fs::write(&path, text).unwrap();
    path
}

fn panel_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut rng = Lcg(12);
    let tickers: Vec<String> = (0..15).map(|i| format!("T{i:02}")).collect();
    let mut text = format!("date,{}\n", tickers.join(","));
    for day in 0..300 {
        let market = rng.normal();
        let sector: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let row: Vec<String> = (0..15)
            .map(|i| format!("{:.6}", 0.01 * (0.5 * market + 0.7 * sector[i / 3] + rng.normal())))
            .collect();
        let _ = writeln!(text, "{},{}", date(day), row.join(","));
    }
    let panel = dir.join("panel.csv");
    fs::write(&panel, text).unwrap();
    let mut map = String::from("ticker,sector_id\n");
    for (i, t) in tickers.iter().enumerate() {
        let _ = writeln!(map, "{t},{}", i / 3 + 1);
    }
    let sectors = dir.join("sectors.csv");
    fs::write(&sectors, map).unwrap();
    (panel, sectors)
}

/// Search volumes, trading volumes that rise in high-search weeks, and weekly market returns.
fn search_fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let mut rng = Lcg(13);
    let (mut search, mut trading) = (
        String::from("week_start,ticker,volume\n"),
        String::from("week_start,ticker,volume\n"),
    );
    let mut market = String::from("date,return\n");
    for week in 0..120 {
        let d = date(7 * week);
        let _ = writeln!(market, "{d},{:.6}", 0.02 * rng.normal());
        for t in ["AAA", "BBB", "CCC"] {
            let high = rng.uniform() < 0.4;
            let g = if high { 80.0 } else { 20.0 } + 5.0 * rng.uniform();
            let v = if high { 1.5 } else { 1.0 } * (1000.0 + 100.0 * rng.uniform());
            let _ = writeln!(search, "{d},{t},{g:.3}");
            let _ = writeln!(trading, "{d},{t},{v:.3}");
        }
    }
    let paths = (dir.join("search.csv"), dir.join("volumes.csv"), dir.join("market.csv"));
    fs::write(&paths.0, search).unwrap();
    fs::write(&paths.1, trading).unwrap();
    fs::write(&paths.2, market).unwrap();
    paths
}

#[test]
fn fixture_dates_are_iso() {
    assert_eq!(date(0), "2000-01-01");
    assert_eq!(date(59), "2000-02-29");
    assert_eq!(date(366), "2001-01-01");
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        ok(&["simulate", "a", "--config", p(&cfg), "--seed", "7", "--out", p(out)]);
    }
    assert_eq!(fs::read(a.join("returns.csv")).unwrap(), fs::read(b.join("returns.csv")).unwrap());
    let (ma, mb) = (json(a.join("manifest.json")), json(b.join("manifest.json")));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["seed"], 7);
}

#[test]
fn rerun_into_same_directory_is_idempotent() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("run");
    let args = ["simulate", "b", "--config", p(&cfg), "--seed", "3", "--out", p(&out)];
    ok(&args);
    let first = json(out.join("manifest.json"));
    ok(&args);
    let second = json(out.join("manifest.json"));
    assert_eq!(first["outputs"], second["outputs"]);
    let manifests = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name() == "manifest.json")
        .count();
    assert_eq!(manifests, 1);
}

#[test]
fn full_length_run_emits_recorded_days() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sp.toml");
    fs::write(&cfg, "alpha = 1.01\ndelta_R = 3\nt_max = 20000\n").unwrap();
    let out = tmp.path().join("run");
    ok(&["simulate", "a", "--config", p(&cfg), "--out", p(&out)]);
    let text = fs::read_to_string(out.join("returns.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 20_000 - 150);
    assert!(text.starts_with("day,R\n150,"));
}

#[test]
fn invalid_sector_comovement_names_the_sector() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[multi_level]\nh_market = 0.42\n").unwrap();
    let out = herdsim(&["simulate", "c", "--config", p(&cfg), "--out", p(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sector 2") && err.contains("h_sector"), "{err}");
}

#[test]
fn missing_input_exits_with_two_and_names_path() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nowhere.csv");
    let out = herdsim(&["calibrate", "asymmetry", "--index", p(&missing), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));
}

#[test]
fn degenerate_series_exits_with_one_and_names_estimator() {
    let tmp = TempDir::new().unwrap();
    let flat = tmp.path().join("flat.csv");
    let mut text = String::from("day,return\n");
    for d in 0..1000 {
        let _ = writeln!(text, "{d},0.5");
    }
    fs::write(&flat, text).unwrap();
    let out = herdsim(&["analyze", "lcurve", "--in", p(&flat), "--out", p(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("normalize"));
}

#[test]
fn analyze_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let run = tmp.path().join("run");
    ok(&["simulate", "a", "--config", p(&cfg), "--out", p(&run)]);
    let returns = run.join("returns.csv");

    let l = tmp.path().join("l");
    ok(&["analyze", "lcurve", "--in", p(&returns), "--max-lag", "40", "--out", p(&l)]);
    let curve = fs::read_to_string(l.join("lcurve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 41);
    assert!(curve.starts_with("lag,value\n1,"));
    assert!(l.join("lcurve_fit.json").exists());

    let s = tmp.path().join("s");
    ok(&["analyze", "stats", "--in", p(&returns), "--format", "json", "--out", p(&s)]);
    let stats = json(s.join("stats.json"));
    assert!(stats["hurst"].is_f64() && stats["tail_exponent"].is_f64());
    assert_eq!(json(s.join("autocorrelation.json"))["values"].as_array().unwrap().len(), 50);
}

#[test]
fn ensemble_lcurve_carries_standard_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let run = tmp.path().join("ens");
    ok(&["simulate", "a", "--config", p(&cfg), "--ensemble", "3", "--out", p(&run)]);
    let inputs: Vec<PathBuf> = (0..3).map(|s| run.join(format!("seed_{s}/returns.csv"))).collect();
    let l = tmp.path().join("l");
    let mut args = vec!["analyze", "lcurve", "--in"];
    args.extend(inputs.iter().map(|x| p(x)));
    args.extend(["--max-lag", "10", "--out", p(&l)]);
    ok(&args);
    let text = fs::read_to_string(l.join("lcurve.csv")).unwrap();
    assert!(text.starts_with("lag,value,std_error\n"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn ensemble_is_independent_of_jobs_and_seed_sorted() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let (one, two) = (tmp.path().join("j1"), tmp.path().join("j2"));
    ok(&["simulate", "a", "--config", p(&cfg), "--seed", "5", "--ensemble", "4", "--jobs", "1", "--out", p(&one)]);
    ok(&["simulate", "a", "--config", p(&cfg), "--seed", "5", "--ensemble", "4", "--jobs", "2", "--out", p(&two)]);
    let summary = fs::read_to_string(one.join("ensemble.csv")).unwrap();
    assert_eq!(summary, fs::read_to_string(two.join("ensemble.csv")).unwrap());
    let seeds: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["5", "6", "7", "8"]);
    for s in 5..9 {
        assert!(one.join(format!("seed_{s}/manifest.json")).exists());
    }
}

#[test]
fn spectrum_of_multi_level_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let run = tmp.path().join("c");
    ok(&["simulate", "c", "--config", p(&cfg), "--out", p(&run)]);
    let sp = tmp.path().join("sp");
    ok(&[
        "analyze", "spectrum",
        "--panel", p(&run.join("returns_panel.csv")),
        "--sectors", p(&run.join("sectors.csv")),
        "--out", p(&sp),
    ]);
    let report = json(sp.join("spectrum.json"));
    assert_eq!(report["eigenvalues"].as_array().unwrap().len(), 50);
    assert_eq!(report["leading_modes"].as_array().unwrap().len(), 3);
    let vectors = fs::read_to_string(sp.join("eigenvectors.csv")).unwrap();
    assert!(vectors.starts_with("ticker,u_lambda0,u_lambda1,u_lambda2\n"));
    assert_eq!(vectors.lines().count(), 51);
}

#[test]
fn calibrate_asymmetry_report() {
    let tmp = TempDir::new().unwrap();
    let index = index_fixture(tmp.path());
    let out = tmp.path().join("cal");
    ok(&["calibrate", "asymmetry", "--index", p(&index), "--out", p(&out)]);
    let report = json(out.join("calibration.json"));
    let (alpha, beta) = (report["alpha"].as_f64().unwrap(), report["beta"].as_f64().unwrap());
    assert!((alpha + beta - 2.0).abs() < 1e-15);
    assert!(report["delta_r"].is_f64() && report["delta_R"].is_i64());
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("alpha"));
    let manifest = json(out.join("manifest.json"));
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 1);
}

#[test]
fn calibrate_comovement_report() {
    let tmp = TempDir::new().unwrap();
    let (panel, sectors) = panel_fixture(tmp.path());
    let out = tmp.path().join("cal");
    ok(&["calibrate", "comovement", "--panel", p(&panel), "--sectors", p(&sectors), "--out", p(&out)]);
    let report = json(out.join("calibration.json"));
    let h_m = report["H_M"].as_f64().unwrap();
    let h_j: Vec<f64> = report["H_j"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(h_j.len(), 5);
    assert!(h_j.iter().all(|h| *h > h_m), "{h_m} {h_j:?}");
}

#[test]
fn calibrate_infoforce_report() {
    let tmp = TempDir::new().unwrap();
    let (search, volumes, market) = search_fixture(tmp.path());
    let out = tmp.path().join("cal");
    ok(&[
        "calibrate", "infoforce",
        "--search", p(&search),
        "--volumes", p(&volumes),
        "--market", p(&market),
        "--tau", "26",
        "--out", p(&out),
    ]);
    let report = json(out.join("calibration.json"));
    assert_eq!(report["tau"], 26.0);
    assert!(report["delta_F"].is_f64() && report["a"].is_f64());
    let estimate = json(out.join("estimate.json"));
    let mean = estimate["asymmetry"]["overall_mean"].as_f64().unwrap();
    assert!((mean - 0.5).abs() < 0.1, "{mean}");
    let forces = fs::read_to_string(out.join("forces.csv")).unwrap();
    assert!(forces.starts_with("ticker,week_start,force\nAAA,2000-01-01,"));
}

#[test]
fn calibration_feeds_simulation() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let cal = tmp.path().join("cal.json");
    fs::write(&cal, r#"{"alpha": 1.05, "delta_R": -2}"#).unwrap();
    let out = tmp.path().join("run");
    ok(&["simulate", "a", "--config", p(&cfg), "--calibration", p(&cal), "--out", p(&out)]);
    let used = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(used.contains("alpha = 1.05") && used.contains("delta_R = -2"), "{used}");
}

#[test]
fn pipeline_chains_steps_with_one_manifest_per_directory() {
    let tmp = TempDir::new().unwrap();
    small_config(tmp.path());
    index_fixture(tmp.path());
    let file = tmp.path().join("pipe.toml");
    fs::write(
        &file,
        "[calibrate.asymmetry]\nindex = \"index.csv\"\n\n\
         [simulate]\nmodel = \"a\"\nconfig = \"small.toml\"\nensemble = 2\n\n\
         [analyze]\nkinds = [\"stats\", \"lcurve\"]\nmax_lag = 20\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    ok(&["pipeline", p(&file), "--out", p(&out)]);
    for dir in [
        "", "calibrate-asymmetry", "simulate", "simulate/seed_0", "simulate/seed_1",
        "analyze-stats", "analyze-lcurve",
    ] {
        let d = out.join(dir);
        assert!(d.join("manifest.json").exists(), "no manifest in {}", d.display());
    }
    let report = json(out.join("calibration.json"));
    let used = fs::read_to_string(out.join("simulate/config.toml")).unwrap();
    assert!(used.contains(&format!("alpha = {}", report["alpha"])), "{used}");
    assert_eq!(json(out.join("analyze-lcurve/lcurve_fit.json"))["members"], 2);
}

#[test]
fn default_output_root_comes_from_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let root = tmp.path().join("root");
    let status = Command::new(env!("CARGO_BIN_EXE_herdsim"))
        .args(["simulate", "d", "--config", p(&cfg), "--seed", "2"])
        .env("HERDSIM_OUT_ROOT", &root)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(root.join("simulate-d-seed2/returns.csv").exists());
}

#[test]
fn help_documents_flags_and_schemas() {
    let top = String::from_utf8(ok(&["--help"]).stdout).unwrap();
    assert!(top.contains("HERDSIM_OUT_ROOT") && top.contains("week_start,ticker,volume"));
    let sim = String::from_utf8(ok(&["simulate", "--help"]).stdout).unwrap();
    for flag in ["--seed", "--config", "--out", "--ensemble", "--jobs"] {
        assert!(sim.contains(flag), "{flag}");
    }
    let stats = String::from_utf8(ok(&["analyze", "stats", "--help"]).stdout).unwrap();
    for flag in ["--max-lag", "--tail-fraction", "--format"] {
        assert!(stats.contains(flag), "{flag}");
    }
}
