//! Single-stock model driven by information forces.
//!
//! The market information state `S` flips with probability `1/tau` per step.
//! A fraction `f` of agents share the state `S`, the rest hold `1 - S`.
//! Agents in state 1 feel the force `F = y (1 - a sgn R')`, where `y` is one
//! exponential draw per step, so forces are stronger after falling prices.
//! They trade with probability `(1 + F) P0` and herd into clusters of average size `tau * sum(F) / N`. Agents in
//! state 0 trade independently with probability `P0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::cluster::{clamp_size, cluster_count, clustered_return, independent_return};
use super::config::{InformationParams, ModelConfig, ModelKind};
use super::horizon::{weighted_return_i64, HorizonWeights};
use super::output::{Diagnostics, SimOutput};
use crate::error::{Error, Result};

/// Long-run mean force per agent. Agents spend half the time in state 1 on
/// average whatever `f` is, so the mean is `E[y] / 2 = 1 / (2 b1)`.
pub fn mean_force(info: &InformationParams) -> f64 {
    0.5 / info.b1
}

/// Base trading probability `P0 = 2p / (1 + mean force)`.
pub fn base_probability(p: f64, info: &InformationParams) -> f64 {
    2.0 * p / (1.0 + mean_force(info))
}

/// `y (1 - a sgn R')`. Flat weighted returns leave `y` unchanged.
pub fn information_force(y: f64, weighted_return: f64, a: f64) -> f64 {
    let sign = if weighted_return > 0.0 {
        1.0
    } else if weighted_return < 0.0 {
        -1.0
    } else {
        0.0
    };
    y * (1.0 - a * sign)
}

/// Number of agents sharing the market state.
pub fn dominant_agents(n_agents: usize, f: f64) -> usize {
    ((f * n_agents as f64).round() as usize).min(n_agents)
}

pub fn run_model_d(config: &ModelConfig) -> Result<SimOutput> {
    let mut cfg = config.clone();
    cfg.model = ModelKind::D;
    cfg.validate()?;
    let info = &cfg.information;
    let n = cfg.n_agents;
    let weights = HorizonWeights::new(cfg.max_horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let exp = Exp::new(info.b1).map_err(|e| Error::config("b1", e.to_string()))?;
    let p0 = base_probability(cfg.p, info);
    let flip = 1.0 / info.tau;
    let n_dom = dominant_agents(n, info.f);

    let mut history: Vec<i64> = Vec::with_capacity(cfg.t_max);
    for _ in 0..cfg.warmup {
        history.push(independent_return(n, cfg.p, cfg.p, &mut rng));
    }

    let mut state: bool = rng.random();
    let days = cfg.t_max - cfg.warmup;
    let mut returns = Vec::with_capacity(days);
    let mut diagnostics =
        Diagnostics::with_names(&["state", "force", "p_informed", "cluster_size", "weighted_return"]);
    let mut occupancy = Vec::new();
    for _ in 0..days {
        if rng.random::<f64>() < flip {
            state = !state;
        }
        let informed = if state { n_dom } else { n - n_dom };
        let rp = weighted_return_i64(&history, &weights, cfg.k);
        let y = exp.sample(&mut rng);
        let force = information_force(y, rp, info.a);
        let p_informed = ((1.0 + force) * p0).clamp(0.0, 1.0);

        let size = clamp_size(info.tau * informed as f64 * force / n as f64, informed);
        let herd = if informed > 0 {
            let clusters = cluster_count(informed, size);
            clustered_return(
                informed,
                clusters,
                p_informed / 2.0,
                p_informed / 2.0,
                &mut rng,
                &mut occupancy,
            )
        } else {
            0
        };
        let rest = independent_return(n - informed, p0 / 2.0, p0 / 2.0, &mut rng);
        let r = herd + rest;
        history.push(r);
        returns.push(r);
        diagnostics.push(&[f64::from(u8::from(state)), force, p_informed, size, rp]);
    }

    Ok(SimOutput {
        model: ModelKind::D,
        seed: cfg.seed,
        n_agents: n,
        first_day: cfg.warmup,
        returns,
        stocks: None,
        diagnostics,
    })
}
