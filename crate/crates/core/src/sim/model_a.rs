//! Asymmetric trading and herding (single stock).
//!
//! Each day the weighted return `R'` of the previous day sets:
//! - the trading probability, `2p*alpha` in bull markets (`R' > 0`), `2p` when
//!   flat and `2p*beta` in bear markets, with `beta = 2 - alpha`;
//! - the average cluster size `n_A = |R' - delta_R|`, clamped into `[1, N]`.
//!
//! Agents are partitioned into `round(N / n_A)` clusters and each cluster
//! buys or sells with probability `P_trade / 2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cluster::{clamp_size, cluster_count, clustered_return, independent_return};
use super::config::{ModelConfig, ModelKind};
use super::horizon::{volatility_perspective, weighted_return_i64, HorizonWeights};
use super::model_b::preference_split;
use super::output::{Diagnostics, SimOutput};
use crate::error::Result;

/// `P_trade(t+1)` as a function of `R'(t)`.
pub fn trading_probability(weighted_return: f64, p: f64, alpha: f64) -> f64 {
    let factor = if weighted_return > 0.0 {
        alpha
    } else if weighted_return < 0.0 {
        2.0 - alpha
    } else {
        1.0
    };
    (2.0 * p * factor).clamp(0.0, 1.0)
}

/// Average cluster size `|R' - delta_R|`, clamped into `[1, N]`.
pub fn herding_cluster_size(weighted_return: f64, delta_r: i64, n_agents: usize) -> f64 {
    clamp_size((weighted_return - delta_r as f64).abs(), n_agents)
}

pub fn run_model_a(config: &ModelConfig) -> Result<SimOutput> {
    let mut cfg = config.clone();
    cfg.model = ModelKind::A;
    run_feedback(&cfg)
}

/// Shared day loop of the single-stock models A and B.
pub(crate) fn run_feedback(cfg: &ModelConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let with_preference = cfg.model == ModelKind::B;
    let n = cfg.n_agents;
    let weights = HorizonWeights::new(cfg.max_horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut history: Vec<i64> = Vec::with_capacity(cfg.t_max);
    let mut volatility: Vec<f64> = Vec::with_capacity(cfg.t_max);
    for _ in 0..cfg.warmup {
        let r = independent_return(n, cfg.p, cfg.p, &mut rng);
        history.push(r);
        volatility.push(r.unsigned_abs() as f64);
    }

    let mut diagnostics = if with_preference {
        Diagnostics::with_names(&["weighted_return", "p_trade", "herding_degree", "xi", "p_buy", "p_sell"])
    } else {
        Diagnostics::with_names(&["weighted_return", "p_trade", "herding_degree"])
    };
    let mut occupancy = Vec::new();
    let days = cfg.t_max - cfg.warmup;
    let mut returns = Vec::with_capacity(days);
    for _ in 0..days {
        let rp = weighted_return_i64(&history, &weights, cfg.k);
        let p_trade = trading_probability(rp, cfg.p, cfg.alpha);
        let size = herding_cluster_size(rp, cfg.delta_r, n);
        let clusters = cluster_count(n, size);

        let (p_buy, p_sell, xi) = if with_preference {
            let xi = volatility_perspective(&volatility, &weights);
            let (b, s) = preference_split(xi, cfg.p, cfg.c);
            // Rescale the (buy, sell) split to the asymmetric trading probability.
            let scale = p_trade / (2.0 * cfg.p);
            (b * scale, s * scale, xi)
        } else {
            (p_trade / 2.0, p_trade / 2.0, 1.0)
        };

        let r = clustered_return(n, clusters, p_buy, p_sell, &mut rng, &mut occupancy);
        history.push(r);
        volatility.push(r.unsigned_abs() as f64);
        returns.push(r);
        let degree = size / n as f64;
        if with_preference {
            diagnostics.push(&[rp, p_trade, degree, xi, p_buy, p_sell]);
        } else {
            diagnostics.push(&[rp, p_trade, degree]);
        }
    }

    Ok(SimOutput {
        model: cfg.model,
        seed: cfg.seed,
        n_agents: n,
        first_day: cfg.warmup,
        returns,
        stocks: None,
        diagnostics,
    })
}
