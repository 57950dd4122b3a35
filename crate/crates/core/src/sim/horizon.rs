use serde::{Deserialize, Serialize};

use super::config::HORIZON_EXPONENT;

/// Fractions `gamma_i ∝ i^-1.12` of agents with an `i`-day investment
/// horizon, `i = 1..=M`, normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonWeights {
    gamma: Vec<f64>,
    /// `tail[j] = sum_{i > j} gamma_i`: the total weight that day `t - j`
    /// receives in the weighted return.
    tail: Vec<f64>,
}

impl HorizonWeights {
    pub fn new(max_horizon: usize) -> Self {
        assert!(max_horizon >= 1, "horizon must be at least one day");
        let raw: Vec<f64> = (1..=max_horizon)
            .map(|i| (i as f64).powf(-HORIZON_EXPONENT))
            .collect();
        let total: f64 = raw.iter().sum();
        let gamma: Vec<f64> = raw.iter().map(|g| g / total).collect();
        let mut tail = vec![0.0; max_horizon];
        let mut acc = 0.0;
        for j in (0..max_horizon).rev() {
            acc += gamma[j];
            tail[j] = acc;
        }
        HorizonWeights { gamma, tail }
    }

    pub fn max_horizon(&self) -> usize {
        self.gamma.len()
    }

    /// `gamma[i - 1]` is the weight of horizon `i`.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// `R'(t) = k * sum_{i=1..M} gamma_i * sum_{j=0..i-1} R(t-j)`, where the last
/// element of `history` is `R(t)`. Missing history counts as zero.
pub fn weighted_return(history: &[f64], weights: &HorizonWeights, k: f64) -> f64 {
    let acc: f64 = history
        .iter()
        .rev()
        .zip(&weights.tail)
        .map(|(r, w)| r * w)
        .sum();
    k * acc
}

/// Integer-return variant of [`weighted_return`] used by the model drivers.
pub(crate) fn weighted_return_i64(history: &[i64], weights: &HorizonWeights, k: f64) -> f64 {
    let acc: f64 = history
        .iter()
        .rev()
        .zip(&weights.tail)
        .map(|(r, w)| *r as f64 * w)
        .sum();
    k * acc
}

/// `xi(t) = sum_i gamma_i v_i(t) / v_M(t)` where `v_i` is the mean of the last
/// `i` volatilities. Returns 1 when the background volatility `v_M` is zero.
pub fn volatility_perspective(volatility: &[f64], weights: &HorizonWeights) -> f64 {
    let m = weights.max_horizon();
    let recent = volatility.iter().rev().take(m);
    let mut sum = 0.0;
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut v_m = 0.0;
    for (i, v) in recent.enumerate() {
        sum += v;
        count = i + 1;
        let v_i = sum / count as f64;
        acc += weights.gamma[i] * v_i;
        v_m = v_i;
    }
    // With fewer than M days of history, v_i for longer horizons equals the
    // mean over everything seen.
    for i in count..m {
        acc += weights.gamma[i] * v_m;
    }
    if v_m == 0.0 {
        1.0
    } else {
        acc / v_m
    }
}
