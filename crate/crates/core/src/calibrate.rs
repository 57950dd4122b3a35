//! Parameter estimation from market and search-volume data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ReturnSeries, ReturnsPanel, SearchSeries, SectorId};
use crate::sim::horizon::{weighted_return, HorizonWeights};
use crate::stats::{fit_linear_through_origin, fit_power_law, normalize, CorrelationCurve, FitModel};

/// Reference `(delta_r, delta_R)` pairs for six indices: S&P 500, Shanghai,
/// Nikkei 225, FTSE 100, Hang Seng, DAX.
pub const REFERENCE_SHIFTS: [(f64, i64); 6] = [
    (0.067, 3),
    (-0.043, -2),
    (0.039, 2),
    (0.028, 2),
    (0.032, 2),
    (0.013, 1),
];

/// Least-squares slope through the origin of `delta_R` on `delta_r` over [`REFERENCE_SHIFTS`].
pub const REFERENCE_SLOPE: f64 = 50.630337535583564;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryEstimate {
    pub alpha: f64,
    pub beta: f64,
    pub delta_r: f64,
    #[serde(rename = "delta_R")]
    pub delta_big_r: i64,
    pub volume_ratio: f64,
}

/// `alpha = 2 rho / (1 + rho)` from the bull/bear volume ratio `rho`, with `beta = 2 - alpha`.
pub fn alpha_from_ratio(ratio: f64) -> (f64, f64) {
    let alpha = 2.0 * ratio / (1.0 + ratio);
    (alpha, 2.0 - alpha)
}

/// Bull/bear trading-volume ratio and the implied `(alpha, beta)`.
///
/// Day `t + 1` counts as bull when the weighted return `R'(t)` of the
/// preceding returns is positive and bear when it is negative. Only days with
/// a full `M`-day history are classified.
pub fn trading_asymmetry(
    series: &ReturnSeries,
    weights: &HorizonWeights,
    k: f64,
) -> Result<(f64, f64, f64)> {
    let volume = series.volume.as_ref().ok_or_else(|| {
        Error::insufficient("trading_asymmetry", "series carries no volumes")
    })?;
    let m = weights.max_horizon();
    let r = &series.returns;
    let (mut up, mut n_up, mut down, mut n_down) = (0.0, 0usize, 0.0, 0usize);
    for t in m.saturating_sub(1)..r.len().saturating_sub(1) {
        let rp = weighted_return(&r[..=t], weights, k);
        if rp > 0.0 {
            up += volume[t + 1];
            n_up += 1;
        } else if rp < 0.0 {
            down += volume[t + 1];
            n_down += 1;
        }
    }
    if n_up == 0 || n_down == 0 {
        return Err(Error::insufficient(
            "trading_asymmetry",
            format!("need bull and bear days (found {n_up} bull, {n_down} bear)"),
        ));
    }
    let v_down = down / n_down as f64;
    if !(v_down > 0.0) {
        return Err(Error::degenerate("trading_asymmetry", "bear-day mean volume is zero"));
    }
    let ratio = (up / n_up as f64) / v_down;
    let (alpha, beta) = alpha_from_ratio(ratio);
    Ok((ratio, alpha, beta))
}

/// `delta_r = (d_bear - d_bull) / 2`, with `d_bull` and `d_bear` the
/// volume-weighted mean `|r|` over rising and falling days.
pub fn herding_shift(returns: &[f64], volumes: &[f64]) -> Result<f64> {
    if returns.len() != volumes.len() {
        return Err(Error::Validation(format!(
            "{} returns but {} volumes",
            returns.len(),
            volumes.len()
        )));
    }
    let (mut wu, mut vu, mut wd, mut vd) = (0.0, 0.0, 0.0, 0.0);
    for (&r, &v) in returns.iter().zip(volumes) {
        if r > 0.0 {
            wu += v * r;
            vu += v;
        } else if r < 0.0 {
            wd += v * -r;
            vd += v;
        }
    }
    if !(vu > 0.0 && vd > 0.0) {
        return Err(Error::insufficient(
            "herding_shift",
            "need volume on both rising and falling days",
        ));
    }
    Ok(0.5 * (wd / vd - wu / vu))
}

/// Least-squares slope through the origin of `delta_R` on `delta_r`.
pub fn table_slope(table: &[(f64, i64)]) -> Result<f64> {
    let x: Vec<f64> = table.iter().map(|p| p.0).collect();
    let y: Vec<f64> = table.iter().map(|p| p.1 as f64).collect();
    match fit_linear_through_origin(&x, &y)?.model {
        FitModel::LinearThroughOrigin { slope } => Ok(slope),
        _ => unreachable!("linear fit returns a linear model"),
    }
}

/// Integer herding shift `round(slope * delta_r)`, ties away from zero.
pub fn map_delta_r_to_delta_big_r(delta_r: f64, table: &[(f64, i64)]) -> Result<i64> {
    Ok((table_slope(table)? * delta_r).round() as i64)
}

/// Full asymmetry calibration of an index: returns are normalized before
/// the herding shift is measured.
pub fn calibrate_asymmetry(
    series: &ReturnSeries,
    weights: &HorizonWeights,
    k: f64,
    table: &[(f64, i64)],
) -> Result<AsymmetryEstimate> {
    let (volume_ratio, alpha, beta) = trading_asymmetry(series, weights, k)?;
    let volume = series.volume.as_ref().expect("checked by trading_asymmetry");
    let normalized = normalize(&series.returns)?;
    let delta_r = herding_shift(&normalized.values, volume)?;
    Ok(AsymmetryEstimate {
        alpha,
        beta,
        delta_r,
        delta_big_r: map_delta_r_to_delta_big_r(delta_r, table)?,
        volume_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComovementEstimate {
    #[serde(rename = "H_M")]
    pub h_market: f64,
    /// Sector ids in ascending order, aligned with `h_sector`.
    pub sectors: Vec<SectorId>,
    #[serde(rename = "H_j")]
    pub h_sector: Vec<f64>,
}

/// `<zeta> * <v_d - v_n>` over a set of normalized columns.
fn comovement_degree(columns: &[&[f64]], days: usize) -> f64 {
    let n_s = columns.len() as f64;
    let (mut zeta, mut amp) = (0.0, 0.0);
    for t in 0..days {
        let (mut vp, mut vm, mut np, mut nm) = (0.0, 0.0, 0usize, 0usize);
        for col in columns {
            let r = col[t];
            if r > 0.0 {
                vp += r * r;
                np += 1;
            } else if r < 0.0 {
                vm += r * r;
                nm += 1;
            }
        }
        let n_d = if vp > vm {
            np
        } else if vm > vp {
            nm
        } else {
            np.max(nm)
        };
        zeta += n_d as f64 / n_s;
        amp += (vp - vm).abs() / n_s;
    }
    (zeta / days as f64) * (amp / days as f64)
}

/// Market-wide and per-sector co-movement degrees of a returns panel.
/// Each column is normalized first.
pub fn comovement(panel: &ReturnsPanel) -> Result<ComovementEstimate> {
    let mut normalized = Vec::with_capacity(panel.n_tickers());
    for (ticker, col) in panel.tickers.iter().zip(&panel.columns) {
        let n = normalize(col).map_err(|_| {
            Error::degenerate("comovement", format!("ticker {ticker} has constant returns"))
        })?;
        normalized.push(n.values);
    }
    let days = panel.n_dates();
    let all: Vec<&[f64]> = normalized.iter().map(Vec::as_slice).collect();
    let h_market = comovement_degree(&all, days);
    let sectors: Vec<SectorId> = panel.distinct_sectors().into_iter().collect();
    let mut h_sector = Vec::with_capacity(sectors.len());
    for &s in &sectors {
        let cols: Vec<&[f64]> = panel
            .sectors
            .iter()
            .zip(&normalized)
            .filter(|(id, _)| **id == s)
            .map(|(_, c)| c.as_slice())
            .collect();
        if cols.len() < 2 {
            return Err(Error::insufficient(
                "comovement",
                format!("sector {s} has fewer than 2 stocks"),
            ));
        }
        h_sector.push(comovement_degree(&cols, days));
    }
    Ok(ComovementEstimate {
        h_market,
        sectors,
        h_sector,
    })
}

/// Binary information states: 1 where the search volume exceeds its mean.
pub fn info_states(search: &SearchSeries) -> Vec<u8> {
    states_above_mean(&search.volume)
}

pub(crate) fn states_above_mean(g: &[f64]) -> Vec<u8> {
    if g.is_empty() {
        return Vec::new();
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|&x| u8::from(x > mean)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoForceSeries {
    pub ticker: String,
    pub states: Vec<u8>,
    /// Window start (week index) of each force.
    pub starts: Vec<usize>,
    pub forces: Vec<f64>,
    pub tau: usize,
    /// Window starts dropped because the state-0 mean volume was zero.
    pub skipped_zero_volume: Vec<usize>,
}

/// `F(t) = V1(t) / V0(t) - 1`, where `V1` and `V0` average the trading
/// volume over the weeks `t..t+tau` in state 1 and state 0.
/// Windows lacking either state are left out.
pub fn info_driving_force(
    ticker: &str,
    states: &[u8],
    volumes: &[f64],
    tau: usize,
) -> Result<InfoForceSeries> {
    if states.len() != volumes.len() {
        return Err(Error::Validation(format!(
            "{ticker}: {} states but {} volumes",
            states.len(),
            volumes.len()
        )));
    }
    if tau == 0 {
        return Err(Error::config("tau", "must be at least 1"));
    }
    let mut out = InfoForceSeries {
        ticker: ticker.to_string(),
        states: states.to_vec(),
        starts: Vec::new(),
        forces: Vec::new(),
        tau,
        skipped_zero_volume: Vec::new(),
    };
    if states.len() < tau {
        return Ok(out);
    }
    for t in 0..=states.len() - tau {
        let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
        for (&s, &v) in states[t..t + tau].iter().zip(&volumes[t..t + tau]) {
            if s == 1 {
                s1 += v;
                n1 += 1;
            } else {
                s0 += v;
                n0 += 1;
            }
        }
        if n1 == 0 || n0 == 0 {
            continue;
        }
        let v0 = s0 / n0 as f64;
        if v0 == 0.0 {
            out.skipped_zero_volume.push(t);
            continue;
        }
        out.starts.push(t);
        out.forces.push((s1 / n1 as f64) / v0 - 1.0);
    }
    Ok(out)
}

/// Forces for many tickers, computed in parallel and returned sorted by ticker.
/// `volumes` pairs with `search` by position.
pub fn info_forces(search: &[SearchSeries], volumes: &[Vec<f64>], tau: usize) -> Result<Vec<InfoForceSeries>> {
    if search.len() != volumes.len() {
        return Err(Error::Validation(format!(
            "{} search series but {} volume series",
            search.len(),
            volumes.len()
        )));
    }
    let mut all: Vec<InfoForceSeries> = search
        .par_iter()
        .zip(volumes.par_iter())
        .map(|(s, v)| info_driving_force(&s.ticker, &info_states(s), v, tau))
        .collect::<Result<_>>()?;
    all.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceAsymmetry {
    pub bull_mean: f64,
    pub bear_mean: f64,
    pub overall_mean: f64,
    pub delta_f: f64,
    /// Asymmetric force coefficient `delta_f / 2`.
    pub a: f64,
}

/// `(F_bear - F_bull) / <F>`. A window is bull or bear by the sign of the
/// cumulative market return over its weeks; windows with zero net return
/// only enter the overall mean.
pub fn info_force_asymmetry(forces: &[InfoForceSeries], market_returns: &[f64]) -> Result<ForceAsymmetry> {
    let (mut bull, mut nb, mut bear, mut ns, mut all, mut na) = (0.0, 0usize, 0.0, 0usize, 0.0, 0usize);
    for series in forces {
        for (&t, &f) in series.starts.iter().zip(&series.forces) {
            let end = t + series.tau;
            if end > market_returns.len() {
                return Err(Error::Validation(format!(
                    "{}: window at week {t} runs past the {} market returns",
                    series.ticker,
                    market_returns.len()
                )));
            }
            let net: f64 = market_returns[t..end].iter().sum();
            all += f;
            na += 1;
            if net > 0.0 {
                bull += f;
                nb += 1;
            } else if net < 0.0 {
                bear += f;
                ns += 1;
            }
        }
    }
    if nb == 0 || ns == 0 {
        return Err(Error::insufficient(
            "info_force_asymmetry",
            format!("need bull and bear windows (found {nb} bull, {ns} bear)"),
        ));
    }
    let overall_mean = all / na as f64;
    if overall_mean == 0.0 {
        return Err(Error::degenerate("info_force_asymmetry", "mean force is zero"));
    }
    let (bull_mean, bear_mean) = (bull / nb as f64, bear / ns as f64);
    let delta_f = (bear_mean - bull_mean) / overall_mean;
    Ok(ForceAsymmetry {
        bull_mean,
        bear_mean,
        overall_mean,
        delta_f,
        a: delta_f / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatingTimeOptions {
    /// Lags `1..=fit_lags` used for the power-law fit.
    pub fit_lags: usize,
    /// Relative deviation from the fit that counts as a departure.
    pub threshold: f64,
    /// Consecutive departing lags required.
    pub persistence: usize,
    pub fallback: usize,
}

impl Default for CorrelatingTimeOptions {
    fn default() -> Self {
        CorrelatingTimeOptions {
            fit_lags: 10,
            threshold: 0.5,
            persistence: 3,
            fallback: crate::ingest::DEFAULT_TAU_WEEKS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatingTime {
    pub tau: usize,
    /// False when no departure was found and `tau` is the fallback.
    pub deviated: bool,
    pub amplitude: f64,
    pub exponent: f64,
}

/// First lag from which the curve stays away from its early power law.
pub fn correlating_time(curve: &CorrelationCurve, opts: &CorrelatingTimeOptions) -> Result<CorrelatingTime> {
    const MIN_LAGS: usize = 30;
    if curve.lags.len() < MIN_LAGS {
        return Err(Error::insufficient(
            "correlating_time",
            format!("need at least {MIN_LAGS} lags, got {}", curve.lags.len()),
        ));
    }
    let early = curve.restrict(1, opts.fit_lags);
    let (amplitude, exponent) = match fit_power_law(&early)?.model {
        FitModel::PowerLaw { amplitude, exponent } => (amplitude, exponent),
        _ => unreachable!("power-law fit returns a power law"),
    };
    let mut run = 0;
    for (&lag, &v) in curve.lags.iter().zip(&curve.values) {
        let fit = amplitude * (lag as f64).powf(exponent);
        if ((v - fit) / fit).abs() > opts.threshold {
            run += 1;
            if run == opts.persistence {
                return Ok(CorrelatingTime {
                    tau: lag + 1 - opts.persistence,
                    deviated: true,
                    amplitude,
                    exponent,
                });
            }
        } else {
            run = 0;
        }
    }
    Ok(CorrelatingTime {
        tau: opts.fallback,
        deviated: false,
        amplitude,
        exponent,
    })
}

/// Calibrated values in the key layout accepted as a simulation-config fragment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(rename = "delta_R", skip_serializing_if = "Option::is_none")]
    pub delta_big_r: Option<i64>,
    #[serde(rename = "H_M", skip_serializing_if = "Option::is_none")]
    pub h_market: Option<f64>,
    #[serde(rename = "H_j", skip_serializing_if = "Option::is_none")]
    pub h_sector: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(rename = "delta_F", skip_serializing_if = "Option::is_none")]
    pub delta_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Weighted-return coefficient used to classify bull and bear days.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub max_horizon: Option<usize>,
}

impl CalibrationReport {
    pub fn from_asymmetry(est: &AsymmetryEstimate, k: f64, max_horizon: usize) -> Self {
        CalibrationReport {
            alpha: Some(est.alpha),
            beta: Some(est.beta),
            delta_r: Some(est.delta_r),
            delta_big_r: Some(est.delta_big_r),
            k: Some(k),
            max_horizon: Some(max_horizon),
            ..Default::default()
        }
    }

    pub fn from_comovement(est: &ComovementEstimate) -> Self {
        CalibrationReport {
            h_market: Some(est.h_market),
            h_sector: Some(est.h_sector.clone()),
            ..Default::default()
        }
    }

    pub fn from_info_force(tau: usize, asym: Option<&ForceAsymmetry>) -> Self {
        CalibrationReport {
            tau: Some(tau as f64),
            delta_f: asym.map(|a| a.delta_f),
            a: asym.map(|a| a.a),
            ..Default::default()
        }
    }

    /// Fills every unset field from `other`.
    pub fn merge(&mut self, other: &CalibrationReport) {
        macro_rules! fill {
            ($($f:ident),*) => { $( if self.$f.is_none() { self.$f = other.$f.clone(); } )* };
        }
        fill!(alpha, beta, delta_r, delta_big_r, h_market, h_sector, tau, delta_f, a, k, max_horizon);
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }
}
