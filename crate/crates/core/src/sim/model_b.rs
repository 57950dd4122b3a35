//! Asymmetric trading preference in volatile and stable markets.
//!
//! Buying and selling probabilities split around `p` according to the
//! agents' integrated view of recent volatility `xi(t)`:
//! `P_buy = p [c xi + (1 - c)]` and `P_sell = 2p - P_buy`. Herding and the
//! overall trading probability follow model A with the configured
//! `(alpha, delta_R)`.

use super::config::{ModelConfig, ModelKind};
use super::model_a::run_feedback;
use super::output::SimOutput;
use crate::error::Result;

/// `(P_buy, P_sell)` for a volatility perspective `xi`, with `P_buy` clamped to `[0, 2p]`.
pub fn preference_split(xi: f64, p: f64, c: f64) -> (f64, f64) {
    let buy = (p * (c * xi + (1.0 - c))).clamp(0.0, 2.0 * p);
    (buy, 2.0 * p - buy)
}

pub fn run_model_b(config: &ModelConfig) -> Result<SimOutput> {
    let mut cfg = config.clone();
    cfg.model = ModelKind::B;
    run_feedback(&cfg)
}
