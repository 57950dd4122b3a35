//! Agent-based market simulation.

pub mod cluster;
pub mod config;
pub mod horizon;
pub mod model_a;
pub mod model_b;
pub mod model_c;
pub mod model_d;
pub mod output;

use rayon::prelude::*;

pub use cluster::{cluster_count, cluster_decide, partition_clusters, ClusterDecisions, ClusterPartition, Decision};
pub use config::{
    InformationParams, ModelConfig, ModelKind, MultiLevelParams, DEFAULT_K, DEFAULT_P,
    HORIZON_EXPONENT, MAX_HORIZON, MIN_HORIZON,
};
pub use horizon::{volatility_perspective, weighted_return, HorizonWeights};
pub use model_a::run_model_a;
pub use model_b::run_model_b;
pub use model_c::{run_model_c, GroupHierarchy};
pub use model_d::run_model_d;
pub use output::{Diagnostics, SimOutput, StockReturns};

use crate::error::{Error, Result};

/// Runs the model selected by `config.model`.
pub fn run(config: &ModelConfig) -> Result<SimOutput> {
    match config.model {
        ModelKind::A => run_model_a(config),
        ModelKind::B => run_model_b(config),
        ModelKind::C => run_model_c(config),
        ModelKind::D => run_model_d(config),
    }
}

/// Runs one simulation per seed on `jobs` worker threads (0 = all cores).
/// Results come back in seed order regardless of scheduling.
pub fn run_ensemble(config: &ModelConfig, seeds: &[u64], jobs: usize) -> Result<Vec<SimOutput>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = ModelConfig {
                    seed,
                    ..config.clone()
                };
                run(&cfg)
            })
            .collect()
    })
}

/// `count` consecutive seeds starting at `base`.
pub fn ensemble_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}
