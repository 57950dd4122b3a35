//! Calibrate, simulate and analyze in one command.
//!
//! ```toml
//! [calibrate.asymmetry]
//! index = "data/sp500.csv"
//!
//! [simulate]
//! model = "a"
//! config = "configs/model_a_sp500.toml"
//! ensemble = 20
//!
//! [analyze]
//! kinds = ["stats", "lcurve"]
//! max_lag = 40
//! ```
//!
//! Each step writes to its own subdirectory of the output directory. The
//! merged calibration report is applied to the simulation config, and every
//! analysis runs over all simulated members in seed order.

use std::path::{Path, PathBuf};

use herdsim_core::ingest::DEFAULT_TAU_WEEKS;
use herdsim_core::sim::{ModelKind, DEFAULT_K};
use herdsim_core::stats::DEFAULT_TAIL_FRACTION;
use herdsim_core::{CalibrationReport, Error, Result};
use serde::Deserialize;

use crate::analyze::{self, SeriesRequest, LCURVE_MAX_LAG, STATS_MAX_LAG};
use crate::calibrate;
use crate::cli::{AsymmetryArgs, ComovementArgs, Format, InfoforceArgs, SpectrumArgs};
use crate::output::{io_error, OutDir};
use crate::simulate::{simulate, SimulateRequest};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFile {
    #[serde(default)]
    pub calibrate: CalibrateSteps,
    pub simulate: Option<SimulateStep>,
    pub analyze: Option<AnalyzeStep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSteps {
    pub asymmetry: Option<AsymmetryStep>,
    pub comovement: Option<ComovementStep>,
    pub infoforce: Option<InfoforceStep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymmetryStep {
    pub index: PathBuf,
    #[serde(default = "default_horizon")]
    pub max_horizon: usize,
    #[serde(default = "default_k")]
    pub k: f64,
}

fn default_horizon() -> usize {
    150
}

fn default_k() -> f64 {
    DEFAULT_K
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComovementStep {
    pub panel: PathBuf,
    pub sectors: PathBuf,
    #[serde(default)]
    pub forward_fill: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoforceStep {
    pub search: PathBuf,
    pub volumes: PathBuf,
    pub market: Option<PathBuf>,
    pub tau: Option<usize>,
    pub tau_curve: Option<PathBuf>,
    pub min_weeks: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateStep {
    pub model: String,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ensemble: Option<usize>,
    #[serde(default)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyzeKind {
    Stats,
    Lcurve,
    Spectrum,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeStep {
    pub kinds: Vec<AnalyzeKind>,
    pub max_lag: Option<usize>,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    #[serde(default)]
    pub json: bool,
    #[serde(default = "default_leading")]
    pub leading: usize,
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_FRACTION
}

fn default_leading() -> usize {
    3
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load(path: &Path) -> Result<PipelineFile> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

pub fn run_pipeline(file: &Path, out: &Path) -> Result<()> {
    let plan = load(file)?;
    let base = file.parent().unwrap_or(Path::new("."));
    let format = match &plan.analyze {
        Some(a) if a.json => Format::Json,
        _ => Format::Csv,
    };

    let mut report = CalibrationReport::default();
    if let Some(s) = &plan.calibrate.asymmetry {
        let args = AsymmetryArgs {
            index: resolve(base, &s.index),
            max_horizon: s.max_horizon,
            k: s.k,
            out: None,
        };
        report.merge(&calibrate::asymmetry(&args, &out.join("calibrate-asymmetry"))?);
    }
    if let Some(s) = &plan.calibrate.comovement {
        let args = ComovementArgs {
            panel: resolve(base, &s.panel),
            sectors: resolve(base, &s.sectors),
            forward_fill: s.forward_fill,
            out: None,
        };
        report.merge(&calibrate::comovement_cmd(&args, &out.join("calibrate-comovement"))?);
    }
    if let Some(s) = &plan.calibrate.infoforce {
        let args = InfoforceArgs {
            search: resolve(base, &s.search),
            volumes: resolve(base, &s.volumes),
            market: s.market.as_ref().map(|p| resolve(base, p)),
            tau: s.tau,
            tau_curve: s.tau_curve.as_ref().map(|p| resolve(base, p)),
            min_weeks: s.min_weeks.unwrap_or(2 * DEFAULT_TAU_WEEKS),
            out: None,
        };
        report.merge(&calibrate::infoforce(&args, &out.join("calibrate-infoforce"))?);
    }

    let mut members = Vec::new();
    let mut model = None;
    if let Some(s) = &plan.simulate {
        let kind: ModelKind = s.model.parse()?;
        let config = s.config.as_ref().map(|p| resolve(base, p));
        let req = SimulateRequest {
            model: kind,
            config: config.as_deref(),
            calibration: None,
            report: Some(&report),
            seed: s.seed,
            ensemble: s.ensemble,
            jobs: s.jobs,
        };
        members = simulate(&req, &out.join("simulate"))?;
        model = Some(kind);
    }

    if let Some(a) = &plan.analyze {
        if members.is_empty() {
            return Err(Error::Validation("analyze step needs a simulate step".into()));
        }
        let returns: Vec<PathBuf> = members.iter().map(|d| d.join("returns.csv")).collect();
        for kind in &a.kinds {
            match kind {
                AnalyzeKind::Stats => analyze::stats(
                    &SeriesRequest {
                        inputs: returns.clone(),
                        max_lag: a.max_lag.unwrap_or(STATS_MAX_LAG),
                        tail_fraction: a.tail_fraction,
                        format,
                    },
                    &out.join("analyze-stats"),
                )?,
                AnalyzeKind::Lcurve => analyze::lcurve(
                    &SeriesRequest {
                        inputs: returns.clone(),
                        max_lag: a.max_lag.unwrap_or(LCURVE_MAX_LAG),
                        tail_fraction: a.tail_fraction,
                        format,
                    },
                    &out.join("analyze-lcurve"),
                )?,
                AnalyzeKind::Spectrum => {
                    if model != Some(ModelKind::C) {
                        return Err(Error::Validation(
                            "spectrum analysis needs the multi-stock model (model = \"c\")".into(),
                        ));
                    }
                    let single = members.len() == 1;
                    for dir in &members {
                        let args = SpectrumArgs {
                            panel: dir.join("returns_panel.csv"),
                            sectors: dir.join("sectors.csv"),
                            leading: a.leading,
                            forward_fill: false,
                            format,
                            out: None,
                        };
                        let target = if single {
                            out.join("analyze-spectrum")
                        } else {
                            out.join("analyze-spectrum").join(dir.file_name().expect("member dir"))
                        };
                        analyze::spectrum(&args, &target)?;
                    }
                }
            }
        }
    }

    let mut top = OutDir::create(out)?;
    top.input(file);
    top.write_json("calibration.json", &report)?;
    top.finish()?;
    Ok(())
}
