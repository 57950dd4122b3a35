//! Time-series diagnostics: normalization, volatility autocorrelation A(t),
//! return-volatility correlation L(t), DFA Hurst exponent, Hill tail exponent
//! and simple curve fits.
//!
//! All time averages over `t'` use only pairs with full overlap: for lag `t`
//! and a series of length `T`, the average runs over `t' = 0..T-t`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Returns shifted to zero mean and scaled to unit population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedReturns {
    pub values: Vec<f64>,
    pub mean_removed: f64,
    pub sigma: f64,
}

impl NormalizedReturns {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `r(t) = (R(t) - <R>) / sigma` with the population standard deviation.
pub fn normalize(returns: &[f64]) -> Result<NormalizedReturns> {
    if returns.len() < 2 {
        return Err(Error::insufficient("normalize", "need at least 2 values"));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::degenerate("normalize", "zero variance"));
    }
    let values = returns.iter().map(|r| (r - mean) / sigma).collect();
    Ok(NormalizedReturns {
        values,
        mean_removed: mean,
        sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// A(t)
    Autocorrelation,
    /// L(t)
    ReturnVolatility,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
}

impl CorrelationCurve {
    pub fn new(lags: Vec<usize>, values: Vec<f64>, kind: CurveKind) -> Result<Self> {
        if lags.len() != values.len() {
            return Err(Error::Validation("lags and values differ in length".into()));
        }
        if lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("lags must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("curve values must be finite".into()));
        }
        Ok(CorrelationCurve { lags, values, kind })
    }

    /// Points with `lo <= lag <= hi`.
    pub fn restrict(&self, lo: usize, hi: usize) -> CorrelationCurve {
        let (lags, values) = self
            .lags
            .iter()
            .zip(&self.values)
            .filter(|(l, _)| (lo..=hi).contains(*l))
            .map(|(l, v)| (*l, *v))
            .unzip();
        CorrelationCurve {
            lags,
            values,
            kind: self.kind,
        }
    }

    pub fn value_at(&self, lag: usize) -> Option<f64> {
        self.lags
            .iter()
            .position(|&l| l == lag)
            .map(|i| self.values[i])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(["lag", "value"]).map_err(ser)?;
        for (l, v) in self.lags.iter().zip(&self.values) {
            w.write_record([l.to_string(), format!("{v:?}")]).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn check_max_lag(estimator: &'static str, len: usize, max_lag: usize) -> Result<()> {
    if max_lag == 0 || max_lag >= len / 4 {
        return Err(Error::insufficient(
            estimator,
            format!("max_lag {max_lag} must be in 1..{} for length {len}", len / 4),
        ));
    }
    Ok(())
}

/// `[<x(t')x(t'+t)> - <x>^2] / (<x^2> - <x>^2)` for `t = 1..=max_lag`.
///
/// `<x>` and the denominator use the whole series; the lagged product uses
/// the `T - t` overlapping pairs.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<CorrelationCurve> {
    check_max_lag("autocorrelation", x.len(), max_lag)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let a0 = mean_sq - mean * mean;
    if !(a0 > 0.0) {
        return Err(Error::degenerate("autocorrelation", "A0 = 0"));
    }
    let values = (1..=max_lag)
        .map(|lag| {
            let m = x.len() - lag;
            let prod = x[..m]
                .iter()
                .zip(&x[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / m as f64;
            (prod - mean * mean) / a0
        })
        .collect();
    Ok(CorrelationCurve {
        lags: (1..=max_lag).collect(),
        values,
        kind: CurveKind::Autocorrelation,
    })
}

/// Volatility autocorrelation A(t), computed on `|r|`.
pub fn autocorrelation_abs(series: &NormalizedReturns, max_lag: usize) -> Result<CorrelationCurve> {
    let abs: Vec<f64> = series.values.iter().map(|r| r.abs()).collect();
    autocorrelation(&abs, max_lag)
}

/// `L(t) = <r(t') |r(t'+t)|^2> / <|r|^2>^2` for `t = 1..=max_lag`.
pub fn return_volatility_correlation(
    series: &NormalizedReturns,
    max_lag: usize,
) -> Result<CorrelationCurve> {
    let r = &series.values;
    check_max_lag("return_volatility_correlation", r.len(), max_lag)?;
    let mean_sq = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
    let z = mean_sq * mean_sq;
    if !(z > 0.0) {
        return Err(Error::degenerate("return_volatility_correlation", "Z = 0"));
    }
    let values = (1..=max_lag)
        .map(|lag| {
            let m = r.len() - lag;
            r[..m]
                .iter()
                .zip(&r[lag..])
                .map(|(a, b)| a * b * b)
                .sum::<f64>()
                / m as f64
                / z
        })
        .collect();
    Ok(CorrelationCurve {
        lags: (1..=max_lag).collect(),
        values,
        kind: CurveKind::ReturnVolatility,
    })
}

pub const HURST_MIN_LEN: usize = 512;
const DFA_MIN_WINDOW: usize = 16;
const HURST_CAP: f64 = 1.5;

/// DFA-1 scaling exponent.
///
/// The profile `Y(i) = sum_{j<=i} (x_j - <x>)` is cut into non-overlapping
/// windows of size `s`, each window is detrended by a least-squares line, and
/// `F(s)` is the root mean square residual. Window sizes are log-spaced over
/// `16..=len/8`; the exponent is the least-squares slope of `ln F` on `ln s`.
/// Slopes above 1.5 are reported as 1.5.
pub fn hurst_exponent(values: &[f64]) -> Result<f64> {
    dfa(values).map(|d| d.exponent.min(HURST_CAP))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DfaResult {
    pub exponent: f64,
    pub window_sizes: Vec<usize>,
    pub fluctuations: Vec<f64>,
}

pub fn dfa(values: &[f64]) -> Result<DfaResult> {
    if values.len() < HURST_MIN_LEN {
        return Err(Error::insufficient(
            "hurst_exponent",
            format!("need at least {HURST_MIN_LEN} values, got {}", values.len()),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|v| (v - mean).abs() == 0.0) {
        return Err(Error::degenerate("hurst_exponent", "constant input"));
    }
    let mut profile = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for v in values {
        acc += v - mean;
        profile.push(acc);
    }

    let max_window = values.len() / 8;
    let mut sizes = Vec::new();
    let mut s = DFA_MIN_WINDOW as f64;
    while s.round() as usize <= max_window {
        let w = s.round() as usize;
        if sizes.last() != Some(&w) {
            sizes.push(w);
        }
        s *= 2f64.powf(0.25);
    }

    let mut fluct = Vec::with_capacity(sizes.len());
    for &w in &sizes {
        let segments = profile.len() / w;
        let mut total = 0.0;
        for seg in profile.chunks_exact(w).take(segments) {
            total += detrended_sq_sum(seg);
        }
        let f = (total / (segments * w) as f64).sqrt();
        if !(f > 0.0) {
            return Err(Error::degenerate(
                "hurst_exponent",
                format!("zero fluctuation at window {w}"),
            ));
        }
        fluct.push(f);
    }
    let xs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = fluct.iter().map(|f| f.ln()).collect();
    let (slope, _) = linear_regression(&xs, &ys);
    Ok(DfaResult {
        exponent: slope,
        window_sizes: sizes,
        fluctuations: fluct,
    })
}

/// Residual sum of squares of `y` against its least-squares line over `0..len`.
fn detrended_sq_sum(y: &[f64]) -> f64 {
    let m = y.len() as f64;
    let x_mean = (m - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (v - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    y.iter()
        .enumerate()
        .map(|(i, v)| {
            let e = v - y_mean - slope * (i as f64 - x_mean);
            e * e
        })
        .sum()
}

/// Ordinary least squares `y = slope*x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - xm) * (b - ym);
        sxx += (a - xm) * (a - xm);
    }
    let slope = sxy / sxx;
    (slope, ym - slope * xm)
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.05;
const MIN_TAIL_POINTS: usize = 100;

/// Hill estimate of the cumulative-distribution tail exponent of `|x|`, using
/// the largest `tail_fraction` of the sample.
pub fn tail_exponent(values: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 0.2) {
        return Err(Error::Validation(format!(
            "tail_fraction must be in (0, 0.2], got {tail_fraction}"
        )));
    }
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let k = (tail_fraction * abs.len() as f64).floor() as usize;
    if k < MIN_TAIL_POINTS || k >= abs.len() {
        return Err(Error::insufficient(
            "tail_exponent",
            format!("{k} tail points, need at least {MIN_TAIL_POINTS}"),
        ));
    }
    let threshold = abs[k];
    if !(threshold > 0.0) {
        return Err(Error::degenerate("tail_exponent", "tail threshold is zero"));
    }
    let log_sum: f64 = abs[..k].iter().map(|x| (x / threshold).ln()).sum();
    if !(log_sum > 0.0) {
        return Err(Error::degenerate(
            "tail_exponent",
            "tail values all equal the threshold",
        ));
    }
    Ok(k as f64 / log_sum)
}

/// Excess kurtosis `m4 / m2^2 - 3` (zero for a Gaussian).
pub fn excess_kurtosis(values: &[f64]) -> Result<f64> {
    if values.len() < 4 {
        return Err(Error::insufficient("excess_kurtosis", "need at least 4 values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(Error::degenerate("excess_kurtosis", "zero variance"));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitModel {
    /// `amplitude * exp(-t / tau)`
    Exponential { amplitude: f64, tau: f64 },
    /// `amplitude * t^exponent`
    PowerLaw { amplitude: f64, exponent: f64 },
    LinearThroughOrigin { slope: f64 },
}

impl FitModel {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            FitModel::Exponential { amplitude, tau } => amplitude * (-t / tau).exp(),
            FitModel::PowerLaw {
                amplitude,
                exponent,
            } => amplitude * t.powf(exponent),
            FitModel::LinearThroughOrigin { slope } => slope * t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(flatten)]
    pub model: FitModel,
    pub residual_rms: f64,
}

fn residual_rms(model: &FitModel, xs: &[f64], ys: &[f64]) -> f64 {
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (model.eval(*x) - y).powi(2))
        .sum();
    (ss / xs.len() as f64).sqrt()
}

/// Fits `c * exp(-t/tau)` by least squares on `ln|value|`; `c` keeps the
/// common sign of the curve.
pub fn fit_exponential(curve: &CorrelationCurve) -> Result<FitResult> {
    if curve.lags.len() < 2 {
        return Err(Error::FitDomain("need at least 2 points".into()));
    }
    let sign = curve.values[0].signum();
    if curve.values.iter().any(|v| *v == 0.0 || v.signum() != sign) {
        return Err(Error::FitDomain(
            "curve changes sign or touches zero inside the fitted range".into(),
        ));
    }
    let xs: Vec<f64> = curve.lags.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = curve.values.iter().map(|v| v.abs().ln()).collect();
    let (slope, intercept) = linear_regression(&xs, &ys);
    if !(slope < 0.0) {
        return Err(Error::FitDomain(format!(
            "curve does not decay (log slope {slope})"
        )));
    }
    let model = FitModel::Exponential {
        amplitude: sign * intercept.exp(),
        tau: -1.0 / slope,
    };
    Ok(FitResult {
        residual_rms: residual_rms(&model, &xs, &curve.values),
        model,
    })
}

/// Fits `a * t^b` by least squares in log-log space; all values must be positive.
pub fn fit_power_law(curve: &CorrelationCurve) -> Result<FitResult> {
    if curve.lags.len() < 2 {
        return Err(Error::FitDomain("need at least 2 points".into()));
    }
    if curve.values.iter().any(|v| !(*v > 0.0)) || curve.lags.contains(&0) {
        return Err(Error::FitDomain(
            "power-law fit needs positive lags and values".into(),
        ));
    }
    let xs: Vec<f64> = curve.lags.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = curve.values.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = linear_regression(&xs, &ys);
    let model = FitModel::PowerLaw {
        amplitude: intercept.exp(),
        exponent: slope,
    };
    let raw_x: Vec<f64> = curve.lags.iter().map(|&l| l as f64).collect();
    Ok(FitResult {
        residual_rms: residual_rms(&model, &raw_x, &curve.values),
        model,
    })
}

/// Least-squares slope of `y = slope * x`.
pub fn fit_linear_through_origin(x: &[f64], y: &[f64]) -> Result<FitResult> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || x.len() != y.len() || !(sxx > 0.0) {
        return Err(Error::FitDomain(
            "need paired, not all-zero abscissae".into(),
        ));
    }
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let model = FitModel::LinearThroughOrigin { slope };
    Ok(FitResult {
        residual_rms: residual_rms(&model, x, y),
        model,
    })
}

/// Pointwise mean and standard error (sample sd / sqrt(K)) of curves sharing a lag grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleCurve {
    pub mean: CorrelationCurve,
    pub std_error: Vec<f64>,
    pub members: usize,
}

pub fn ensemble_mean(curves: &[CorrelationCurve]) -> Result<EnsembleCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::insufficient("ensemble_mean", "no curves"))?;
    if curves.iter().any(|c| c.lags != first.lags) {
        return Err(Error::Validation("ensemble curves use different lags".into()));
    }
    let k = curves.len() as f64;
    let mut mean = vec![0.0; first.lags.len()];
    for c in curves {
        for (m, v) in mean.iter_mut().zip(&c.values) {
            *m += v / k;
        }
    }
    let std_error = (0..mean.len())
        .map(|i| {
            if curves.len() < 2 {
                return f64::NAN;
            }
            let ss: f64 = curves.iter().map(|c| (c.values[i] - mean[i]).powi(2)).sum();
            (ss / (k - 1.0)).sqrt() / k.sqrt()
        })
        .collect();
    Ok(EnsembleCurve {
        mean: CorrelationCurve {
            lags: first.lags.clone(),
            values: mean,
            kind: first.kind,
        },
        std_error,
        members: curves.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn direct_l(r: &[f64], lag: usize) -> f64 {
        let t = r.len();
        let mut num = 0.0;
        for i in 0..t - lag {
            num += r[i] * r[i + lag].abs().powi(2);
        }
        num /= (t - lag) as f64;
        let mut z = 0.0;
        for v in r {
            z += v.abs().powi(2);
        }
        z /= t as f64;
        num / (z * z)
    }

    fn direct_a(r: &[f64], lag: usize) -> f64 {
        let t = r.len();
        let mut m = 0.0;
        let mut m2 = 0.0;
        for v in r {
            m += v.abs();
            m2 += v * v;
        }
        m /= t as f64;
        m2 /= t as f64;
        let mut p = 0.0;
        for i in 0..t - lag {
            p += r[i].abs() * r[i + lag].abs();
        }
        p /= (t - lag) as f64;
        (p - m * m) / (m2 - m * m)
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(n.values, vec![1.0, -1.0, 1.0, -1.0]);
        assert!(matches!(
            normalize(&[5.0, 5.0, 5.0]),
            Err(Error::Degenerate { .. })
        ));
        let n = normalize(&[0.0, 2.0, 4.0]).unwrap();
        assert!((n.sigma - 1.632993161855452).abs() < 1e-12);
        assert!((n.values[0] + 1.224744871391589).abs() < 1e-12);
        assert_eq!(n.values[1], 0.0);
        assert!((n.values[2] - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn autocorrelation_of_white_noise_vanishes() {
        let r = normalize(&gaussian(100_000, 1)).unwrap();
        let a = autocorrelation_abs(&r, 50).unwrap();
        assert!(a.values.iter().all(|v| v.abs() < 0.02), "{:?}", a.values);
    }

    #[test]
    fn autocorrelation_period_two() {
        // |r| alternates 0.5, 1.5 with random signs.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<f64> = (0..1000)
            .map(|i| {
                let mag = if i % 2 == 0 { 0.5 } else { 1.5 };
                if rng.random::<bool>() { mag } else { -mag }
            })
            .collect();
        let r = normalize(&raw).unwrap();
        let a = autocorrelation_abs(&r, 5).unwrap();
        assert!((a.values[0] - direct_a(&r.values, 1)).abs() < 1e-12);
        assert!((a.values[1] - direct_a(&r.values, 2)).abs() < 1e-12);
        assert!((a.values[0] + 1.0).abs() < 0.01, "{}", a.values[0]);
        assert!((a.values[1] - 1.0).abs() < 0.01, "{}", a.values[1]);
    }

    #[test]
    fn leverage_of_symmetric_noise_vanishes() {
        let r = normalize(&gaussian(100_000, 2)).unwrap();
        let l = return_volatility_correlation(&r, 15).unwrap();
        assert!(l.values.iter().all(|v| v.abs() < 0.05));
    }

    #[test]
    fn leverage_hand_series() {
        // The 6-point hand series repeated four times, so that lag 1 < len/4.
        // Lag-1 products r(t')*r(t'+1)^2: 4 per block (1*4 - 2*1 + 1*4 + 2*1 - 1*4),
        // plus -2 * 1 at each of the 3 block joins: 16 - 6 = 10 over 23 pairs.
        // <r^2> = 2.5, so Z = 6.25.
        let block = [1.0, -2.0, 1.0, 2.0, -1.0, -2.0];
        let r = NormalizedReturns {
            values: block.repeat(4),
            mean_removed: 0.0,
            sigma: 1.0,
        };
        let expected = (10.0 / 23.0) / 6.25;
        let l = return_volatility_correlation(&r, 1).unwrap();
        assert!((l.values[0] - expected).abs() < 1e-15);
        assert!((direct_l(&r.values, 1) - expected).abs() < 1e-15);

        let short = NormalizedReturns {
            values: block.to_vec(),
            ..r
        };
        assert!(matches!(
            return_volatility_correlation(&short, 1),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn kernels_match_direct_summation() {
        let raw = gaussian(1000, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let skewed: Vec<f64> = raw
            .iter()
            .map(|v| v * (1.0 + 0.5 * rng.random::<f64>()))
            .collect();
        let r = normalize(&skewed).unwrap();
        let a = autocorrelation_abs(&r, 200).unwrap();
        let l = return_volatility_correlation(&r, 200).unwrap();
        for lag in 1..=200 {
            assert!((a.values[lag - 1] - direct_a(&r.values, lag)).abs() < 1e-12);
            assert!((l.values[lag - 1] - direct_l(&r.values, lag)).abs() < 1e-12);
        }
    }

    #[test]
    fn hurst_of_white_noise_is_half() {
        let h = hurst_exponent(&gaussian(20_000, 4)).unwrap();
        assert!((h - 0.5).abs() < 0.05, "{h}");
    }

    #[test]
    fn hurst_of_integrated_noise_is_large() {
        let mut acc = 0.0;
        let walk: Vec<f64> = gaussian(20_000, 5)
            .into_iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let h = hurst_exponent(&walk).unwrap();
        assert!(h > 1.0, "{h}");
        assert!(h <= 1.5);
    }

    #[test]
    fn hurst_rejects_constant_and_short() {
        assert!(matches!(
            hurst_exponent(&[2.0; 1024]),
            Err(Error::Degenerate { .. })
        ));
        assert!(matches!(
            hurst_exponent(&[1.0; 100]),
            Err(Error::InsufficientData { .. })
        ));
    }

    fn pareto(n: usize, alpha: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                (1.0 - u).powf(-1.0 / alpha)
            })
            .collect()
    }

    #[test]
    fn hill_recovers_pareto_exponent() {
        let x = pareto(100_000, 3.0, 6);
        let a = tail_exponent(&x, 0.05).unwrap();
        assert!((a - 3.0).abs() < 0.15, "{a}");
    }

    #[test]
    fn hill_drifts_up_on_light_tails() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..100_000)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let at_1 = tail_exponent(&x, 0.01).unwrap();
        let at_10 = tail_exponent(&x, 0.10).unwrap();
        assert!(at_1 > at_10, "{at_1} vs {at_10}");
    }

    #[test]
    fn hill_needs_enough_tail_points() {
        assert!(matches!(
            tail_exponent(&pareto(1000, 3.0, 1), 0.05),
            Err(Error::InsufficientData { .. })
        ));
        assert!(tail_exponent(&pareto(1000, 3.0, 1), 0.5).is_err());
    }

    fn exact_curve(c: f64, tau: f64) -> CorrelationCurve {
        let lags: Vec<usize> = (1..=15).collect();
        let values = lags.iter().map(|&t| c * (-(t as f64) / tau).exp()).collect();
        CorrelationCurve::new(lags, values, CurveKind::ReturnVolatility).unwrap()
    }

    #[test]
    fn exponential_fit_of_exact_model() {
        let fit = fit_exponential(&exact_curve(-0.2, 5.0)).unwrap();
        match fit.model {
            FitModel::Exponential { amplitude, tau } => {
                assert!((amplitude + 0.2).abs() < 1e-9);
                assert!((tau - 5.0).abs() < 1e-9);
            }
            m => panic!("{m:?}"),
        }
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn exponential_fit_of_noise_has_larger_residual() {
        let exact = fit_exponential(&exact_curve(0.2, 5.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lags: Vec<usize> = (1..=15).collect();
        let values = lags.iter().map(|_| 0.05 + 0.1 * rng.random::<f64>()).collect();
        let noise = CorrelationCurve::new(lags, values, CurveKind::Other).unwrap();
        let fit = fit_exponential(&noise);
        if let Ok(fit) = fit {
            assert!(fit.residual_rms > exact.residual_rms);
        }
    }

    #[test]
    fn exponential_fit_rejects_sign_change() {
        let c = CorrelationCurve::new(vec![1, 2, 3], vec![0.1, -0.1, 0.05], CurveKind::Other).unwrap();
        assert!(matches!(fit_exponential(&c), Err(Error::FitDomain(_))));
    }

    #[test]
    fn fit_result_json_shape() {
        let fit = fit_exponential(&exact_curve(-0.2, 5.0)).unwrap();
        let json = serde_json::to_value(fit).unwrap();
        assert_eq!(json["model"], "exponential");
        assert!(json["tau"].is_number());
        assert!(json["residual_rms"].is_number());
    }

    proptest! {
        #[test]
        fn normalize_invariants_and_idempotence(raw in prop::collection::vec(-1e3f64..1e3, 8..200)) {
            prop_assume!(normalize(&raw).is_ok());
            let n = normalize(&raw).unwrap();
            let len = n.len() as f64;
            let mean = n.values.iter().sum::<f64>() / len;
            let sd = (n.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len).sqrt();
            prop_assume!(n.sigma > 1e-6);
            prop_assert!(mean.abs() < 1e-10);
            prop_assert!((sd - 1.0).abs() < 1e-10);
            let again = normalize(&n.values).unwrap();
            for (a, b) in again.values.iter().zip(&n.values) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn sign_flip_properties(seed in 0u64..1000) {
            let raw = gaussian(400, seed);
            let r = normalize(&raw).unwrap();
            let neg = NormalizedReturns {
                values: r.values.iter().map(|v| -v).collect(),
                ..r.clone()
            };
            let l = return_volatility_correlation(&r, 20).unwrap();
            let ln = return_volatility_correlation(&neg, 20).unwrap();
            let a = autocorrelation_abs(&r, 20).unwrap();
            let an = autocorrelation_abs(&neg, 20).unwrap();
            for i in 0..20 {
                prop_assert!((l.values[i] + ln.values[i]).abs() < 1e-12);
                prop_assert!((a.values[i] - an.values[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn hill_is_scale_invariant(seed in 0u64..200, scale in 0.01f64..100.0) {
            let x = pareto(4000, 2.5, seed);
            let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let a = tail_exponent(&x, 0.05).unwrap();
            let b = tail_exponent(&scaled, 0.05).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a);
        }
    }
}
