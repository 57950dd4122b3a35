use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use herdsim_core::calibrate::{
    calibrate_asymmetry, comovement, correlating_time, info_force_asymmetry, info_forces,
    CorrelatingTime, CorrelatingTimeOptions, ForceAsymmetry, REFERENCE_SHIFTS,
};
use herdsim_core::ingest::{
    load_index_series, load_return_series, load_returns_panel, load_search_series, log_returns,
    PanelLoadOptions, SearchLoadOptions, TimeAxis, DEFAULT_TAU_WEEKS,
};
use herdsim_core::sim::{HorizonWeights, MAX_HORIZON, MIN_HORIZON};
use herdsim_core::stats::{CorrelationCurve, CurveKind};
use herdsim_core::{CalibrationReport, Error, Result};
use serde::Serialize;

use crate::cli::{AsymmetryArgs, ComovementArgs, InfoforceArgs};
use crate::output::{io_error, OutDir};

const REPORT: &str = "calibration.json";

fn finish(mut out: OutDir, report: &CalibrationReport, table: String) -> Result<()> {
    out.write_json(REPORT, report)?;
    out.write_text("report.txt", &table)?;
    out.finish()?;
    print!("{table}");
    Ok(())
}

pub fn asymmetry(args: &AsymmetryArgs, out: &Path) -> Result<CalibrationReport> {
    if !(MIN_HORIZON..=MAX_HORIZON).contains(&args.max_horizon) {
        return Err(Error::Config {
            field: "max_horizon".into(),
            reason: format!("must be in {MIN_HORIZON}..={MAX_HORIZON}"),
        });
    }
    let index = load_index_series(&args.index)?;
    let series = log_returns(&index);
    let weights = HorizonWeights::new(args.max_horizon);
    let est = calibrate_asymmetry(&series, &weights, args.k, &REFERENCE_SHIFTS)?;
    let report = CalibrationReport::from_asymmetry(&est, args.k, args.max_horizon);

    let mut dir = OutDir::create(out)?;
    dir.input(&args.index);
    dir.write_json("estimate.json", &est)?;
    let mut table = String::new();
    let _ = writeln!(table, "index         {}", args.index.display());
    let _ = writeln!(table, "days          {}", series.len());
    let _ = writeln!(table, "V+/V-         {:.4}", est.volume_ratio);
    let _ = writeln!(table, "alpha         {:.4}", est.alpha);
    let _ = writeln!(table, "beta          {:.4}", est.beta);
    let _ = writeln!(table, "delta_r       {:.4}", est.delta_r);
    let _ = writeln!(table, "delta_R       {}", est.delta_big_r);
    finish(dir, &report, table)?;
    Ok(report)
}

pub fn comovement_cmd(args: &ComovementArgs, out: &Path) -> Result<CalibrationReport> {
    let panel = load_returns_panel(
        &args.panel,
        &args.sectors,
        PanelLoadOptions {
            forward_fill: args.forward_fill,
        },
    )?;
    let est = comovement(&panel)?;
    let report = CalibrationReport::from_comovement(&est);

    let mut dir = OutDir::create(out)?;
    dir.input(&args.panel).input(&args.sectors);
    dir.write_json("estimate.json", &est)?;
    let mut table = String::new();
    let _ = writeln!(table, "panel         {} stocks x {} days", panel.n_tickers(), panel.n_dates());
    let _ = writeln!(table, "H_M           {:.4}", est.h_market);
    for (s, h) in est.sectors.iter().zip(&est.h_sector) {
        let _ = writeln!(table, "H_{s:<11} {h:.4}");
    }
    finish(dir, &report, table)?;
    Ok(report)
}

#[derive(Serialize)]
struct InfoforceEstimate {
    tau: usize,
    tau_source: &'static str,
    correlating_time: Option<CorrelatingTime>,
    weeks: usize,
    tickers: Vec<String>,
    windows: usize,
    skipped_zero_volume: usize,
    asymmetry: Option<ForceAsymmetry>,
}

/// Reads a `lag,value` curve as written by `analyze`.
fn read_curve(path: &Path) -> Result<CorrelationCurve> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let source = path.display().to_string();
    let (mut lags, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let parse_err = |message: String| Error::Parse {
            source_name: source.clone(),
            line,
            message,
        };
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        if rec.len() < 2 {
            return Err(parse_err("expected lag,value".into()));
        }
        lags.push(rec[0].trim().parse().map_err(|_| parse_err(format!("bad lag `{}`", &rec[0])))?);
        values.push(rec[1].trim().parse().map_err(|_| parse_err(format!("bad value `{}`", &rec[1])))?);
    }
    CorrelationCurve::new(lags, values, CurveKind::Other)
}

pub fn infoforce(args: &InfoforceArgs, out: &Path) -> Result<CalibrationReport> {
    let search = load_search_series(
        &args.search,
        SearchLoadOptions {
            align: true,
            min_weeks: args.min_weeks,
        },
    )?;
    let trading = load_search_series(
        &args.volumes,
        SearchLoadOptions {
            align: false,
            min_weeks: 0,
        },
    )?;
    let by_ticker: BTreeMap<&str, BTreeMap<NaiveDate, f64>> = trading
        .iter()
        .map(|s| (s.ticker.as_str(), s.weeks.iter().copied().zip(s.volume.iter().copied()).collect()))
        .collect();
    let mut volumes = Vec::with_capacity(search.len());
    for s in &search {
        let vols = by_ticker.get(s.ticker.as_str()).ok_or_else(|| {
            Error::Validation(format!("{}: no trading volumes for ticker {}", args.volumes.display(), s.ticker))
        })?;
        let aligned = s
            .weeks
            .iter()
            .map(|w| {
                vols.get(w).copied().ok_or_else(|| {
                    Error::Validation(format!("{}: ticker {} has no trading volume for week {w}", args.volumes.display(), s.ticker))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        volumes.push(aligned);
    }

    let (tau, tau_source, ct) = match (&args.tau_curve, args.tau) {
        (Some(path), _) => {
            let ct = correlating_time(&read_curve(path)?, &CorrelatingTimeOptions::default())?;
            (ct.tau, if ct.deviated { "curve" } else { "curve fallback" }, Some(ct))
        }
        (None, Some(t)) => (t, "flag", None),
        (None, None) => (DEFAULT_TAU_WEEKS, "default", None),
    };
    let forces = info_forces(&search, &volumes, tau)?;

    let weeks: Vec<NaiveDate> = search.first().map(|s| s.weeks.clone()).unwrap_or_default();
    let asymmetry = match &args.market {
        Some(path) => {
            let market = load_return_series(path)?;
            let TimeAxis::Dates(dates) = &market.time else {
                return Err(Error::Validation(format!("{}: market returns need ISO dates", path.display())));
            };
            let lookup: BTreeMap<NaiveDate, f64> = dates.iter().copied().zip(market.returns.iter().copied()).collect();
            let aligned = weeks
                .iter()
                .map(|w| {
                    lookup.get(w).copied().ok_or_else(|| {
                        Error::Validation(format!("{}: no market return for week {w}", path.display()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Some(info_force_asymmetry(&forces, &aligned)?)
        }
        None => None,
    };
    let report = CalibrationReport::from_info_force(tau, asymmetry.as_ref());

    let mut dir = OutDir::create(out)?;
    dir.input(&args.search).input(&args.volumes);
    if let Some(p) = &args.market {
        dir.input(p);
    }
    if let Some(p) = &args.tau_curve {
        dir.input(p);
    }
    dir.write_with("forces.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        c.write_record(["ticker", "week_start", "force"]).map_err(ser)?;
        for f in &forces {
            for (&t, v) in f.starts.iter().zip(&f.forces) {
                c.write_record([f.ticker.clone(), weeks[t].to_string(), format!("{v:?}")]).map_err(ser)?;
            }
        }
        c.flush().map_err(|e| Error::Serialization(e.to_string()))
    })?;
    dir.write_with("states.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        c.write_record(["week_start", "ticker", "state"]).map_err(ser)?;
        for f in &forces {
            for (week, s) in weeks.iter().zip(&f.states) {
                c.write_record([week.to_string(), f.ticker.clone(), s.to_string()]).map_err(ser)?;
            }
        }
        c.flush().map_err(|e| Error::Serialization(e.to_string()))
    })?;
    let estimate = InfoforceEstimate {
        tau,
        tau_source,
        correlating_time: ct,
        weeks: weeks.len(),
        tickers: forces.iter().map(|f| f.ticker.clone()).collect(),
        windows: forces.iter().map(|f| f.forces.len()).sum(),
        skipped_zero_volume: forces.iter().map(|f| f.skipped_zero_volume.len()).sum(),
        asymmetry,
    };
    dir.write_json("estimate.json", &estimate)?;

    let mut table = String::new();
    let _ = writeln!(table, "tickers       {}", estimate.tickers.len());
    let _ = writeln!(table, "weeks         {}", estimate.weeks);
    let _ = writeln!(table, "tau           {tau} ({tau_source})");
    let _ = writeln!(table, "windows       {}", estimate.windows);
    if let Some(a) = &estimate.asymmetry {
        let _ = writeln!(table, "F_bull        {:.4}", a.bull_mean);
        let _ = writeln!(table, "F_bear        {:.4}", a.bear_mean);
        let _ = writeln!(table, "delta_F       {:.4}", a.delta_f);
        let _ = writeln!(table, "a             {:.4}", a.a);
    }
    finish(dir, &report, table)?;
    Ok(report)
}
