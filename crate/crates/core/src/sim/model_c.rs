//! Multi-level herding across stocks and sectors.
//!
//! Agents pick a stock once at setup. Every day they herd in three stages:
//! 1. Within stock `k`, agents join `round(N_k / |R'_k|)` I-groups.
//! 2. Within sector `j`, I-groups join `round(N_j^I / (n (H_j - H_M)))`
//!    S-groups, with I-groups of one stock spread over distinct S-groups
//!    while possible.
//! 3. S-groups of sector `j` join one of the first
//!    `round(N_j^S / (n H_M))` M-groups, spread the same way.
//!
//! Every M-group then buys or sells with probability `P_group` each and
//! all of its agents follow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cluster::{clamp_size, draw_decision, independent_return, spread_targets};
use super::config::{ModelConfig, ModelKind};
use super::horizon::{weighted_return_i64, HorizonWeights};
use super::output::{Diagnostics, SimOutput, StockReturns};
use crate::error::Result;
use crate::ingest::SectorId;

/// Sector (1-based) of each stock: contiguous blocks of near-equal size.
pub fn stock_sectors(n_stocks: usize, n_sectors: usize) -> Vec<SectorId> {
    (0..n_stocks)
        .map(|k| (k * n_sectors / n_stocks) as SectorId + 1)
        .collect()
}

/// `max(1, round(n_i / (n (H_j - H_M))))` S-groups for a sector holding
/// `n_i` I-groups, never more than `n_i`.
pub fn s_group_count(i_groups: usize, n_stocks: usize, h_sector: f64, h_market: f64) -> usize {
    let per_group = n_stocks as f64 * (h_sector - h_market);
    capped_count(i_groups as f64 / per_group, i_groups)
}

fn capped_count(raw: f64, members: usize) -> usize {
    if raw >= members as f64 {
        members.max(1)
    } else {
        (raw.round() as usize).max(1)
    }
}

/// M-group slots available to each sector: `max(1, round(N_j^S / (n H_M)))`,
/// never more than `N_j^S`. The market holds `max_j slots_j` M-groups in total.
pub fn m_group_slots(s_groups: &[usize], n_stocks: usize, h_market: f64) -> Vec<usize> {
    let per_group = n_stocks as f64 * h_market;
    s_groups
        .iter()
        .map(|&s| capped_count(s as f64 / per_group, s))
        .collect()
}

/// One day's group structure. Groups are numbered globally; each level maps
/// into the next, so every agent belongs to exactly one group per level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupHierarchy {
    /// Stock of each I-group.
    pub i_stock: Vec<u32>,
    /// Agents in each I-group.
    pub i_size: Vec<u32>,
    /// S-group of each I-group.
    pub i_to_s: Vec<u32>,
    /// Sector index (0-based) of each S-group.
    pub s_sector: Vec<u32>,
    /// M-group of each S-group.
    pub s_to_m: Vec<u32>,
    pub m_groups: usize,
}

impl GroupHierarchy {
    pub fn i_groups(&self) -> usize {
        self.i_size.len()
    }

    pub fn s_groups(&self) -> usize {
        self.s_sector.len()
    }

    /// M-group of every I-group.
    pub fn i_to_m(&self) -> impl Iterator<Item = u32> + '_ {
        self.i_to_s.iter().map(|&s| self.s_to_m[s as usize])
    }
}

/// Static layout plus scratch buffers for daily group formation.
pub(crate) struct MultiLevelMarket {
    pub n_stocks: usize,
    pub agents: Vec<usize>,
    pub h_market: f64,
    pub h_sector: Vec<f64>,
    stocks_in_sector: Vec<Vec<usize>>,
    scratch: Vec<u32>,
    targets: Vec<u32>,
}

impl MultiLevelMarket {
    pub fn new(
        n_stocks: usize,
        n_sectors: usize,
        agents: Vec<usize>,
        h_market: f64,
        h_sector: Vec<f64>,
    ) -> Self {
        let sector_of: Vec<usize> = stock_sectors(n_stocks, n_sectors)
            .into_iter()
            .map(|s| s as usize - 1)
            .collect();
        let mut stocks_in_sector = vec![Vec::new(); n_sectors];
        for (k, &j) in sector_of.iter().enumerate() {
            stocks_in_sector[j].push(k);
        }
        MultiLevelMarket {
            n_stocks,
            agents,
            h_market,
            h_sector,
            stocks_in_sector,
            scratch: Vec::new(),
            targets: Vec::new(),
        }
    }

    /// Builds the day's hierarchy from each stock's average I-group size.
    pub fn form_groups<R: Rng + ?Sized>(
        &mut self,
        i_group_size: &[f64],
        rng: &mut R,
        out: &mut GroupHierarchy,
    ) {
        out.i_stock.clear();
        out.i_size.clear();
        out.i_to_s.clear();
        out.s_sector.clear();
        out.s_to_m.clear();

        // Stage 1: agents of each stock join its I-groups uniformly.
        let mut stock_start = Vec::with_capacity(self.n_stocks + 1);
        for k in 0..self.n_stocks {
            stock_start.push(out.i_size.len());
            let n_k = self.agents[k];
            if n_k == 0 {
                continue;
            }
            let size = clamp_size(i_group_size[k], n_k);
            let groups = ((n_k as f64 / size).round() as usize).clamp(1, n_k);
            let base = out.i_size.len();
            out.i_size.resize(base + groups, 0);
            out.i_stock.resize(base + groups, k as u32);
            for _ in 0..n_k {
                out.i_size[base + rng.random_range(0..groups)] += 1;
            }
        }
        stock_start.push(out.i_size.len());
        out.i_to_s.resize(out.i_size.len(), 0);

        // Stage 2: I-groups join sector S-groups, one stock's I-groups spread apart.
        let n_sectors = self.stocks_in_sector.len();
        let mut sector_s = Vec::with_capacity(n_sectors);
        for j in 0..n_sectors {
            let i_count: usize = self.stocks_in_sector[j]
                .iter()
                .map(|&k| stock_start[k + 1] - stock_start[k])
                .sum();
            let s_base = out.s_sector.len();
            if i_count == 0 {
                sector_s.push(0);
                continue;
            }
            let s_count = s_group_count(i_count, self.n_stocks, self.h_sector[j], self.h_market);
            out.s_sector.resize(s_base + s_count, j as u32);
            sector_s.push(s_count);
            for &k in &self.stocks_in_sector[j] {
                let (lo, hi) = (stock_start[k], stock_start[k + 1]);
                spread_targets(hi - lo, s_count, rng, &mut self.scratch, &mut self.targets);
                for (slot, &t) in out.i_to_s[lo..hi].iter_mut().zip(&self.targets) {
                    *slot = (s_base + t as usize) as u32;
                }
            }
        }

        // Stage 3: S-groups join the first `slots_j` M-groups, one sector's S-groups spread apart.
        let slots = m_group_slots(&sector_s, self.n_stocks, self.h_market);
        out.m_groups = slots
            .iter()
            .zip(&sector_s)
            .filter(|(_, &s)| s > 0)
            .map(|(&m, _)| m)
            .max()
            .unwrap_or(1);
        for (j, &s_count) in sector_s.iter().enumerate() {
            if s_count == 0 {
                continue;
            }
            spread_targets(s_count, slots[j], rng, &mut self.scratch, &mut self.targets);
            out.s_to_m.extend_from_slice(&self.targets);
        }
        debug_assert_eq!(out.s_to_m.len(), out.s_sector.len());
    }
}

pub fn run_model_c(config: &ModelConfig) -> Result<SimOutput> {
    let mut cfg = config.clone();
    cfg.model = ModelKind::C;
    cfg.validate()?;
    let ml = &cfg.multi_level;
    let n = cfg.n_agents;
    let weights = HorizonWeights::new(cfg.max_horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut agents = vec![0usize; ml.n_stocks];
    for _ in 0..n {
        agents[rng.random_range(0..ml.n_stocks)] += 1;
    }
    let mut market = MultiLevelMarket::new(
        ml.n_stocks,
        ml.n_sectors,
        agents.clone(),
        ml.h_market,
        ml.h_sector.clone(),
    );

    let mut history: Vec<Vec<i64>> = vec![Vec::with_capacity(cfg.t_max); ml.n_stocks];
    for _ in 0..cfg.warmup {
        for (k, h) in history.iter_mut().enumerate() {
            h.push(independent_return(agents[k], cfg.p, cfg.p, &mut rng));
        }
    }

    let days = cfg.t_max - cfg.warmup;
    let mut returns = Vec::with_capacity(days);
    let mut diagnostics = Diagnostics::with_names(&["i_groups", "s_groups", "m_groups"]);
    let mut groups = GroupHierarchy::default();
    let mut sizes = vec![0.0; ml.n_stocks];
    let mut decisions: Vec<i64> = Vec::new();
    let mut stock_r = vec![0i64; ml.n_stocks];
    for _ in 0..days {
        for (k, h) in history.iter().enumerate() {
            sizes[k] = weighted_return_i64(h, &weights, cfg.k).abs();
        }
        market.form_groups(&sizes, &mut rng, &mut groups);

        decisions.clear();
        decisions.extend(
            (0..groups.m_groups).map(|_| draw_decision(ml.p_group, ml.p_group, &mut rng) as i64),
        );
        stock_r.iter_mut().for_each(|r| *r = 0);
        for ((&k, &size), m) in groups.i_stock.iter().zip(&groups.i_size).zip(groups.i_to_m()) {
            stock_r[k as usize] += size as i64 * decisions[m as usize];
        }
        for (h, &r) in history.iter_mut().zip(&stock_r) {
            h.push(r);
        }
        returns.push(stock_r.iter().sum());
        diagnostics.push(&[
            groups.i_groups() as f64,
            groups.s_groups() as f64,
            groups.m_groups as f64,
        ]);
    }

    let sectors = stock_sectors(ml.n_stocks, ml.n_sectors);
    let width = ml.n_stocks.to_string().len().max(2);
    let stocks = StockReturns {
        tickers: (1..=ml.n_stocks).map(|k| format!("S{k:0width$}")).collect(),
        sectors,
        columns: history.into_iter().map(|h| h[cfg.warmup..].to_vec()).collect(),
        agents,
    };
    Ok(SimOutput {
        model: ModelKind::C,
        seed: cfg.seed,
        n_agents: n,
        first_day: cfg.warmup,
        returns,
        stocks: Some(stocks),
        diagnostics,
    })
}
