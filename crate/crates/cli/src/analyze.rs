use std::path::{Path, PathBuf};

use herdsim_core::ingest::{load_return_series, load_returns_panel, PanelLoadOptions};
use herdsim_core::spectral::{cross_correlation, eigen_decompose, write_eigenvectors_csv, SpectrumReport};
use herdsim_core::stats::{
    autocorrelation_abs, ensemble_mean, excess_kurtosis, fit_exponential, fit_power_law,
    hurst_exponent, normalize, return_volatility_correlation, tail_exponent, CorrelationCurve,
    FitResult, NormalizedReturns,
};
use herdsim_core::{Error, Result};
use serde::Serialize;

use crate::cli::{Format, SeriesArgs, SpectrumArgs};
use crate::output::OutDir;

pub const STATS_MAX_LAG: usize = 50;
pub const LCURVE_MAX_LAG: usize = 40;

/// Series analysis options shared by the CLI and pipelines.
pub struct SeriesRequest {
    pub inputs: Vec<PathBuf>,
    pub max_lag: usize,
    pub tail_fraction: f64,
    pub format: Format,
}

impl SeriesRequest {
    pub fn from_args(a: &SeriesArgs, default_lag: usize) -> Self {
        SeriesRequest {
            inputs: a.inputs.clone(),
            max_lag: a.max_lag.unwrap_or(default_lag),
            tail_fraction: a.tail_fraction,
            format: a.format,
        }
    }
}

fn load_normalized(inputs: &[PathBuf]) -> Result<Vec<NormalizedReturns>> {
    inputs
        .iter()
        .map(|p| normalize(&load_return_series(p)?.returns))
        .collect()
}

#[derive(Serialize)]
struct CurveTable<'a> {
    lags: &'a [usize],
    values: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<&'a [f64]>,
    members: usize,
}

fn write_curve(
    dir: &mut OutDir,
    stem: &str,
    curve: &CorrelationCurve,
    std_error: Option<&[f64]>,
    members: usize,
    format: Format,
) -> Result<()> {
    match format {
        Format::Json => dir.write_json(
            &format!("{stem}.json"),
            &CurveTable {
                lags: &curve.lags,
                values: &curve.values,
                std_error,
                members,
            },
        ),
        Format::Csv => {
            let mut text = String::from(if std_error.is_some() { "lag,value,std_error\n" } else { "lag,value\n" });
            for (i, (l, v)) in curve.lags.iter().zip(&curve.values).enumerate() {
                match std_error {
                    Some(se) => text.push_str(&format!("{l},{v:?},{:?}\n", se[i])),
                    None => text.push_str(&format!("{l},{v:?}\n")),
                }
            }
            dir.write_text(&format!("{stem}.csv"), &text)
        }
    }
}

/// A fit outcome that records why a fit was impossible instead of failing the command.
#[derive(Serialize)]
struct FitOutcome {
    #[serde(flatten)]
    fit: Option<FitResult>,
    error: Option<String>,
}

impl From<Result<FitResult>> for FitOutcome {
    fn from(r: Result<FitResult>) -> Self {
        match r {
            Ok(fit) => FitOutcome {
                fit: Some(fit),
                error: None,
            },
            Err(e) => FitOutcome {
                fit: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Pointwise ensemble mean when more than one curve is given.
fn combine(curves: Vec<CorrelationCurve>) -> Result<(CorrelationCurve, Option<Vec<f64>>)> {
    if curves.len() == 1 {
        return Ok((curves.into_iter().next().expect("one curve"), None));
    }
    let e = ensemble_mean(&curves)?;
    Ok((e.mean, Some(e.std_error)))
}

#[derive(Serialize)]
struct MemberStats {
    input: String,
    len: usize,
    hurst: f64,
    tail_exponent: f64,
    excess_kurtosis: f64,
}

#[derive(Serialize)]
struct StatsReport {
    members: Vec<MemberStats>,
    /// Mean of the per-series DFA exponents of |r|.
    hurst: f64,
    /// Hill exponent of the pooled normalized returns.
    tail_exponent: f64,
    tail_fraction: f64,
    excess_kurtosis: f64,
    max_lag: usize,
    autocorrelation_power_law: FitOutcome,
}

pub fn stats(req: &SeriesRequest, out: &Path) -> Result<()> {
    let series = load_normalized(&req.inputs)?;
    let mut members = Vec::with_capacity(series.len());
    let mut curves = Vec::with_capacity(series.len());
    for (path, s) in req.inputs.iter().zip(&series) {
        let abs: Vec<f64> = s.values.iter().map(|x| x.abs()).collect();
        members.push(MemberStats {
            input: path.display().to_string(),
            len: s.len(),
            hurst: hurst_exponent(&abs)?,
            tail_exponent: tail_exponent(&s.values, req.tail_fraction)?,
            excess_kurtosis: excess_kurtosis(&s.values)?,
        });
        curves.push(autocorrelation_abs(s, req.max_lag)?);
    }
    let pooled: Vec<f64> = series.iter().flat_map(|s| s.values.iter().copied()).collect();
    let (curve, se) = combine(curves)?;
    let report = StatsReport {
        hurst: members.iter().map(|m| m.hurst).sum::<f64>() / members.len() as f64,
        tail_exponent: tail_exponent(&pooled, req.tail_fraction)?,
        tail_fraction: req.tail_fraction,
        excess_kurtosis: excess_kurtosis(&pooled)?,
        max_lag: req.max_lag,
        autocorrelation_power_law: fit_power_law(&curve).into(),
        members,
    };
    let mut dir = OutDir::create(out)?;
    for p in &req.inputs {
        dir.input(p);
    }
    write_curve(&mut dir, "autocorrelation", &curve, se.as_deref(), series.len(), req.format)?;
    dir.write_json("stats.json", &report)?;
    dir.finish()?;
    println!(
        "hurst {:.3}  tail exponent {:.3}  excess kurtosis {:.2}  ({} series) -> {}",
        report.hurst,
        report.tail_exponent,
        report.excess_kurtosis,
        series.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct LcurveFit {
    max_lag: usize,
    members: usize,
    exponential: FitOutcome,
}

pub fn lcurve(req: &SeriesRequest, out: &Path) -> Result<()> {
    let series = load_normalized(&req.inputs)?;
    let curves = series
        .iter()
        .map(|s| return_volatility_correlation(s, req.max_lag))
        .collect::<Result<Vec<_>>>()?;
    let (curve, se) = combine(curves)?;
    let fit = LcurveFit {
        max_lag: req.max_lag,
        members: series.len(),
        exponential: fit_exponential(&curve).into(),
    };
    let mut dir = OutDir::create(out)?;
    for p in &req.inputs {
        dir.input(p);
    }
    write_curve(&mut dir, "lcurve", &curve, se.as_deref(), series.len(), req.format)?;
    dir.write_json("lcurve_fit.json", &fit)?;
    dir.finish()?;
    println!(
        "L(1) {:+.4}  L({}) {:+.4}  ({} series) -> {}",
        curve.values[0],
        req.max_lag,
        curve.values[curve.values.len() - 1],
        series.len(),
        out.display()
    );
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs, out: &Path) -> Result<()> {
    if args.leading == 0 {
        return Err(Error::Config {
            field: "leading".into(),
            reason: "must be at least 1".into(),
        });
    }
    let panel = load_returns_panel(
        &args.panel,
        &args.sectors,
        PanelLoadOptions {
            forward_fill: args.forward_fill,
        },
    )?;
    let matrix = cross_correlation(&panel)?;
    let system = eigen_decompose(&matrix)?;
    let report = SpectrumReport::build(&matrix, &system, args.leading)?;
    let mut dir = OutDir::create(out)?;
    dir.input(&args.panel).input(&args.sectors);
    dir.write_json("spectrum.json", &report)?;
    dir.write_with("eigenvectors.csv", |w| write_eigenvectors_csv(&matrix, &system, args.leading, w))?;
    if args.format == Format::Csv {
        let mut text = String::from("rank,eigenvalue\n");
        for (i, v) in report.eigenvalues.iter().enumerate() {
            text.push_str(&format!("{i},{v:?}\n"));
        }
        dir.write_text("eigenvalues.csv", &text)?;
    }
    dir.finish()?;
    let top: Vec<String> = report.eigenvalues.iter().take(3).map(|v| format!("{v:.3}")).collect();
    println!(
        "{} stocks, {} days; leading eigenvalues {}; MP upper edge {} -> {}",
        report.order,
        report.samples,
        top.join(", "),
        report.mp_upper.map_or("n/a".into(), |v| format!("{v:.3}")),
        out.display()
    );
    Ok(())
}
