//! Random partition of agents into decision clusters and joint decision sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    /// `assignment[i]` is the cluster of agent `i`.
    pub assignment: Vec<u32>,
    pub clusters: usize,
}

impl ClusterPartition {
    /// Every agent in its own cluster.
    pub fn singletons(n_agents: usize) -> Self {
        ClusterPartition {
            assignment: (0..n_agents as u32).collect(),
            clusters: n_agents,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.assignment.len()
    }

    pub fn occupancy(&self) -> Vec<usize> {
        let mut occ = vec![0; self.clusters];
        for &c in &self.assignment {
            occ[c as usize] += 1;
        }
        occ
    }
}

/// `max(1, round(n_agents / avg_size))` with `avg_size` clamped into `[1, n_agents]`.
pub fn cluster_count(n_agents: usize, avg_size: f64) -> usize {
    if n_agents == 0 {
        return 0;
    }
    let size = clamp_size(avg_size, n_agents);
    ((n_agents as f64 / size).round() as usize).clamp(1, n_agents)
}

pub(crate) fn clamp_size(size: f64, n_agents: usize) -> f64 {
    if size.is_nan() {
        return 1.0;
    }
    size.clamp(1.0, n_agents.max(1) as f64)
}

/// Assigns each agent independently and uniformly to one of
/// [`cluster_count`] clusters.
pub fn partition_clusters<R: Rng + ?Sized>(
    n_agents: usize,
    avg_size: f64,
    rng: &mut R,
) -> ClusterPartition {
    let clusters = cluster_count(n_agents, avg_size).max(1);
    let assignment = (0..n_agents)
        .map(|_| rng.random_range(0..clusters as u32))
        .collect();
    ClusterPartition {
        assignment,
        clusters,
    }
}

/// Trading decision: +1 buy, -1 sell, 0 hold.
pub type Decision = i8;

#[inline]
pub(crate) fn draw_decision<R: Rng + ?Sized>(p_buy: f64, p_sell: f64, rng: &mut R) -> Decision {
    let u: f64 = rng.random();
    if u < p_buy {
        1
    } else if u < p_buy + p_sell {
        -1
    } else {
        0
    }
}

pub(crate) fn check_probabilities(p_buy: f64, p_sell: f64) -> Result<()> {
    if !(p_buy >= 0.0 && p_sell >= 0.0 && p_buy + p_sell <= 1.0 + 1e-12) {
        return Err(Error::config(
            "probabilities",
            format!("need p_buy, p_sell >= 0 and p_buy + p_sell <= 1 (got {p_buy}, {p_sell})"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterDecisions {
    pub per_agent: Vec<Decision>,
    /// `R = sum_i phi_i`.
    pub aggregate: i64,
}

/// One decision per cluster (buy with `p_buy`, sell with `p_sell`, else hold),
/// adopted by every member agent.
pub fn cluster_decide<R: Rng + ?Sized>(
    partition: &ClusterPartition,
    p_buy: f64,
    p_sell: f64,
    rng: &mut R,
) -> Result<ClusterDecisions> {
    check_probabilities(p_buy, p_sell)?;
    let decisions: Vec<Decision> = (0..partition.clusters)
        .map(|_| draw_decision(p_buy, p_sell, rng))
        .collect();
    let per_agent: Vec<Decision> = partition
        .assignment
        .iter()
        .map(|&c| decisions[c as usize])
        .collect();
    let aggregate = per_agent.iter().map(|&d| d as i64).sum();
    Ok(ClusterDecisions {
        per_agent,
        aggregate,
    })
}

/// Aggregate return of `n_agents` agents partitioned into `clusters` clusters.
///
/// Consumes the random stream exactly like [`partition_clusters`] followed by
/// [`cluster_decide`], without materializing per-agent decisions.
pub(crate) fn clustered_return<R: Rng + ?Sized>(
    n_agents: usize,
    clusters: usize,
    p_buy: f64,
    p_sell: f64,
    rng: &mut R,
    occupancy: &mut Vec<u32>,
) -> i64 {
    occupancy.clear();
    occupancy.resize(clusters, 0);
    for _ in 0..n_agents {
        occupancy[rng.random_range(0..clusters as u32) as usize] += 1;
    }
    occupancy
        .iter()
        .map(|&occ| draw_decision(p_buy, p_sell, rng) as i64 * occ as i64)
        .sum()
}

/// Aggregate return of agents deciding independently.
pub fn independent_return<R: Rng + ?Sized>(
    n_agents: usize,
    p_buy: f64,
    p_sell: f64,
    rng: &mut R,
) -> i64 {
    (0..n_agents)
        .map(|_| draw_decision(p_buy, p_sell, rng) as i64)
        .sum()
}

/// Picks `count` distinct values from `0..n` while they last, then draws
/// uniformly with replacement. Used where groups "tend not to" join the same target.
pub(crate) fn spread_targets<R: Rng + ?Sized>(
    count: usize,
    n: usize,
    rng: &mut R,
    scratch: &mut Vec<u32>,
    out: &mut Vec<u32>,
) {
    out.clear();
    let distinct = count.min(n);
    if distinct * 4 >= n {
        scratch.clear();
        scratch.extend(0..n as u32);
        for i in 0..distinct {
            let j = rng.random_range(i..n);
            scratch.swap(i, j);
            out.push(scratch[i]);
        }
    } else {
        // Few draws from a large range: rejection sampling avoids an O(n) shuffle.
        while out.len() < distinct {
            let c = rng.random_range(0..n as u32);
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    for _ in distinct..count {
        out.push(rng.random_range(0..n as u32));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn count_extremes() {
        assert_eq!(cluster_count(100, 1.0), 100);
        assert_eq!(cluster_count(100, 100.0), 1);
        assert_eq!(cluster_count(100, 0.2), 100);
        assert_eq!(cluster_count(100, 1e9), 1);
        assert_eq!(cluster_count(10_000, 25.0), 400);
    }

    #[test]
    fn partition_covers_every_agent_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = partition_clusters(1000, 7.0, &mut rng);
        assert_eq!(p.assignment.len(), 1000);
        assert!(p.assignment.iter().all(|&c| (c as usize) < p.clusters));
        assert_eq!(p.occupancy().iter().sum::<usize>(), 1000);
        let single = partition_clusters(50, 50.0, &mut rng);
        assert_eq!(single.clusters, 1);
        assert!(single.assignment.iter().all(|&c| c == 0));
    }

    #[test]
    fn mean_occupancy_matches_target() {
        // Occupancy of a fixed cluster is Binomial(N, 1/K).
        let mut samples = Vec::new();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = partition_clusters(10_000, 25.0, &mut rng);
            assert_eq!(p.clusters, 400);
            samples.extend(p.occupancy()[..10].iter().map(|&o| o as f64));
        }
        let m = samples.iter().sum::<f64>() / samples.len() as f64;
        assert!((m - 25.0).abs() < 1.0, "{m}");
        let v = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        assert!((v / (25.0 * (1.0 - 1.0 / 400.0)) - 1.0).abs() < 0.15, "{v}");
    }

    #[test]
    fn decide_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = partition_clusters(200, 3.0, &mut rng);
        for _ in 0..20 {
            assert_eq!(cluster_decide(&p, 0.0, 0.0, &mut rng).unwrap().aggregate, 0);
        }
        let one = partition_clusters(500, 500.0, &mut rng);
        let d = cluster_decide(&one, 1.0, 0.0, &mut rng).unwrap();
        assert_eq!(d.aggregate, 500);
        assert!(d.per_agent.iter().all(|&x| x == 1));
        assert!(cluster_decide(&one, 0.7, 0.7, &mut rng).is_err());
    }

    fn variance(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    }

    #[test]
    fn singleton_variance_is_binomial() {
        let n = 10_000;
        let p = 0.0154;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let part = ClusterPartition::singletons(n);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| cluster_decide(&part, p, p, &mut rng).unwrap().aggregate as f64)
            .collect();
        let binomial = n as f64 * 2.0 * p;
        let v = variance(&draws);
        assert!((v / binomial - 1.0).abs() < 0.05, "{v} vs {binomial}");
    }

    #[test]
    fn uniform_unit_partition_doubles_variance() {
        // Occupancies are ~Poisson(1), so E[occ^2] = 2.
        let n = 10_000;
        let p = 0.0154;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut occ = Vec::new();
        let draws: Vec<f64> = (0..2000)
            .map(|_| clustered_return(n, n, p, p, &mut rng, &mut occ) as f64)
            .collect();
        let expected = 2.0 * n as f64 * 2.0 * p;
        let v = variance(&draws);
        assert!((v / expected - 1.0).abs() < 0.1, "{v} vs {expected}");
    }

    #[test]
    fn fast_path_matches_explicit_partition() {
        for seed in 0..20 {
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ChaCha8Rng::seed_from_u64(seed);
            let part = partition_clusters(3000, 4.5, &mut a);
            let explicit = cluster_decide(&part, 0.1, 0.2, &mut a).unwrap().aggregate;
            let mut occ = Vec::new();
            let fast = clustered_return(3000, part.clusters, 0.1, 0.2, &mut b, &mut occ);
            assert_eq!(explicit, fast);
        }
    }

    #[test]
    fn spread_targets_distinct_then_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut scratch, mut out) = (Vec::new(), Vec::new());
        spread_targets(5, 10, &mut rng, &mut scratch, &mut out);
        let mut s = out.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 5);
        spread_targets(25, 10, &mut rng, &mut scratch, &mut out);
        assert_eq!(out.len(), 25);
        let mut first: Vec<u32> = out[..10].to_vec();
        first.sort();
        assert_eq!(first, (0..10).collect::<Vec<u32>>());
        spread_targets(3, 1000, &mut rng, &mut scratch, &mut out);
        let mut s = out.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 3);
    }
}
