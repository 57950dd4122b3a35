use std::collections::BTreeMap;
use std::path::Path;

use herdsim_core::ingest::{write_returns_panel, write_sector_map};
use herdsim_core::sim::{ensemble_seeds, run, run_ensemble, ModelConfig, ModelKind};
use herdsim_core::{CalibrationReport, Error, Result, SimOutput};

use crate::cli::SimulateArgs;
use crate::output::{io_error, sha256_hex, OutDir};

/// Everything needed to reproduce a simulation, independent of how it was requested.
pub struct SimulateRequest<'a> {
    pub model: ModelKind,
    pub config: Option<&'a Path>,
    pub calibration: Option<&'a Path>,
    /// Applied after the file-based calibration, e.g. by a pipeline.
    pub report: Option<&'a CalibrationReport>,
    pub seed: Option<u64>,
    pub ensemble: Option<usize>,
    pub jobs: usize,
}

impl<'a> From<&'a SimulateArgs> for SimulateRequest<'a> {
    fn from(a: &'a SimulateArgs) -> Self {
        SimulateRequest {
            model: a.model,
            config: a.config.as_deref(),
            calibration: a.calibration.as_deref(),
            report: None,
            seed: a.seed,
            ensemble: a.ensemble,
            jobs: a.jobs,
        }
    }
}

pub fn build_config(req: &SimulateRequest) -> Result<ModelConfig> {
    let mut cfg = match req.config {
        Some(p) => ModelConfig::load(p)?,
        None => ModelConfig::default(),
    };
    cfg.model = req.model;
    if let Some(p) = req.calibration {
        let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
        cfg.apply_calibration(&CalibrationReport::from_json(&text)?);
    }
    if let Some(r) = req.report {
        cfg.apply_calibration(r);
    }
    if let Some(seed) = req.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_run(dir: &mut OutDir, cfg: &ModelConfig, out: &SimOutput) -> Result<()> {
    let canonical = cfg.to_toml_string()?;
    dir.config(&canonical, Some(cfg.seed));
    dir.write_text("config.toml", &canonical)?;
    dir.write_with("returns.csv", |w| out.write_returns_csv(w))?;
    dir.write_with("diagnostics.csv", |w| out.write_diagnostics_csv(w))?;
    if let Some(stocks) = &out.stocks {
        let panel = out.panel()?;
        dir.write_with("returns_panel.csv", |w| write_returns_panel(&panel, w))?;
        let map: BTreeMap<String, _> = stocks
            .tickers
            .iter()
            .cloned()
            .zip(stocks.sectors.iter().copied())
            .collect();
        dir.write_with("sectors.csv", |w| write_sector_map(&map, w))?;
    }
    Ok(())
}

fn add_inputs(dir: &mut OutDir, req: &SimulateRequest) {
    for p in [req.config, req.calibration].into_iter().flatten() {
        dir.input(p);
    }
}

/// Runs one simulation or an ensemble and returns the directories holding
/// each member's `returns.csv`, in seed order.
pub fn simulate(req: &SimulateRequest, out: &Path) -> Result<Vec<std::path::PathBuf>> {
    let cfg = build_config(req)?;
    match req.ensemble {
        None => {
            let result = run(&cfg)?;
            let mut dir = OutDir::create(out)?;
            add_inputs(&mut dir, req);
            write_run(&mut dir, &cfg, &result)?;
            dir.finish()?;
            println!("{} {}: {} days -> {}", cfg.model, cfg.seed, result.len(), out.display());
            Ok(vec![out.to_path_buf()])
        }
        Some(0) => Err(Error::Config {
            field: "ensemble".into(),
            reason: "must be at least 1".into(),
        }),
        Some(k) => {
            let seeds = ensemble_seeds(cfg.seed, k);
            let results = run_ensemble(&cfg, &seeds, req.jobs)?;
            let mut member_dirs = Vec::with_capacity(k);
            let mut summary = String::from("seed,days,returns_sha256\n");
            for (seed, result) in seeds.iter().zip(&results) {
                let name = format!("seed_{seed}");
                let member_cfg = ModelConfig {
                    seed: *seed,
                    ..cfg.clone()
                };
                let mut dir = OutDir::create(out.join(&name))?;
                add_inputs(&mut dir, req);
                write_run(&mut dir, &member_cfg, result)?;
                let manifest = dir.finish()?;
                summary.push_str(&format!("{seed},{},{}\n", result.len(), manifest.outputs["returns.csv"]));
                member_dirs.push(out.join(name));
            }
            let mut top = OutDir::create(out)?;
            add_inputs(&mut top, req);
            let canonical = cfg.to_toml_string()?;
            top.config(&canonical, Some(cfg.seed));
            top.write_text("config.toml", &canonical)?;
            top.write_text("ensemble.csv", &summary)?;
            top.finish()?;
            println!(
                "{} ensemble of {k} (seeds {}..={}), digest {} -> {}",
                cfg.model,
                seeds[0],
                seeds[k - 1],
                &sha256_hex(summary.as_bytes())[..12],
                out.display()
            );
            Ok(member_dirs)
        }
    }
}
