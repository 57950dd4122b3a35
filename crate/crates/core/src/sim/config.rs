use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationReport;
use crate::error::{Error, Result};

pub const DEFAULT_P: f64 = 0.0154;
pub const DEFAULT_K: f64 = 0.1;
pub const HORIZON_EXPONENT: f64 = 1.12;
pub const MIN_HORIZON: usize = 50;
pub const MAX_HORIZON: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Asymmetric trading and herding.
    A,
    /// Asymmetric trading preference in volatile and stable markets.
    B,
    /// Multi-level herding over stocks and sectors.
    C,
    /// Information-driven trading probabilities.
    D,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::A => "a",
            ModelKind::B => "b",
            ModelKind::C => "c",
            ModelKind::D => "d",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(ModelKind::A),
            "b" => Ok(ModelKind::B),
            "c" => Ok(ModelKind::C),
            "d" => Ok(ModelKind::D),
            other => Err(Error::config("model", format!("unknown model `{other}`"))),
        }
    }
}

/// Parameters of the multi-level herding model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiLevelParams {
    pub n_stocks: usize,
    pub n_sectors: usize,
    /// Market co-movement degree H_M.
    pub h_market: f64,
    /// Sector co-movement degrees H_j, one per sector.
    pub h_sector: Vec<f64>,
    /// Buy (and sell) probability of each market-level group.
    pub p_group: f64,
}

impl Default for MultiLevelParams {
    /// NYSE values.
    fn default() -> Self {
        MultiLevelParams {
            n_stocks: 50,
            n_sectors: 5,
            h_market: 0.363,
            h_sector: vec![0.491, 0.414, 0.438, 0.431, 0.546],
            p_group: 0.363,
        }
    }
}

impl MultiLevelParams {
    pub fn hkse() -> Self {
        MultiLevelParams {
            h_market: 0.306,
            h_sector: vec![0.426, 0.406, 0.364, 0.361, 0.340],
            p_group: 0.317,
            ..Default::default()
        }
    }
}

/// Parameters of the information-driven model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InformationParams {
    /// Correlating time; the information state flips with probability 1/tau per step.
    pub tau: f64,
    /// Bull/bear asymmetry of the driving force.
    pub a: f64,
    /// Fraction of agents whose state follows the market state.
    pub f: f64,
    /// Rate of the exponential force distribution.
    pub b1: f64,
}

impl Default for InformationParams {
    fn default() -> Self {
        InformationParams {
            tau: 26.0,
            a: 0.2,
            f: 0.8,
            b1: 3.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    /// Number of agents N.
    pub n_agents: usize,
    /// Maximum investment horizon M, in days.
    pub max_horizon: usize,
    /// Daily one-sided trading probability of an agent.
    pub p: f64,
    /// Proportional coefficient of the weighted return. Herding degrees grow
    /// with `k |R'|`; values near 1 lock a 10^4-agent market into a few
    /// giant clusters, so the default is 0.1.
    pub k: f64,
    /// Bull-market trading factor; the bear factor is `2 - alpha`.
    pub alpha: f64,
    /// Herding shift applied to the weighted return.
    #[serde(rename = "delta_R")]
    pub delta_r: i64,
    /// Volatility-preference degree of model B.
    pub c: f64,
    pub seed: u64,
    /// Total simulated days, warmup included.
    pub t_max: usize,
    /// Leading days of independent trading that seed the return history.
    pub warmup: usize,
    pub multi_level: MultiLevelParams,
    pub information: InformationParams,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model: ModelKind::A,
            n_agents: 10_000,
            max_horizon: 150,
            p: DEFAULT_P,
            k: DEFAULT_K,
            alpha: 1.0,
            delta_r: 0,
            c: 0.0,
            seed: 0,
            t_max: 20_000,
            warmup: 150,
            multi_level: MultiLevelParams::default(),
            information: InformationParams::default(),
        }
    }
}

fn check(cond: bool, field: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(field, reason()))
    }
}

impl ModelConfig {
    pub fn beta(&self) -> f64 {
        2.0 - self.alpha
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Overrides parameters with every value present in a calibration report.
    pub fn apply_calibration(&mut self, report: &CalibrationReport) {
        if let Some(alpha) = report.alpha {
            self.alpha = alpha;
        }
        if let Some(dr) = report.delta_big_r {
            self.delta_r = dr;
        }
        if let Some(h) = report.h_market {
            self.multi_level.h_market = h;
        }
        if let Some(hj) = &report.h_sector {
            self.multi_level.h_sector = hj.clone();
            self.multi_level.n_sectors = hj.len();
        }
        if let Some(tau) = report.tau {
            self.information.tau = tau;
        }
        if let Some(a) = report.a {
            self.information.a = a;
        }
    }

    /// Checks every invariant that applies to the configured model.
    pub fn validate(&self) -> Result<()> {
        check(self.n_agents >= 1, "n_agents", || "must be at least 1".into())?;
        check(
            (MIN_HORIZON..=MAX_HORIZON).contains(&self.max_horizon),
            "max_horizon",
            || format!("must be in {MIN_HORIZON}..={MAX_HORIZON}, got {}", self.max_horizon),
        )?;
        check(self.p > 0.0 && self.p < 0.5, "p", || {
            format!("must be in (0, 0.5), got {}", self.p)
        })?;
        check(self.k.is_finite() && self.k > 0.0, "k", || {
            format!("must be positive, got {}", self.k)
        })?;
        check(self.alpha > 0.0 && self.alpha < 2.0, "alpha", || {
            format!("must be in (0, 2), got {}", self.alpha)
        })?;
        check(2.0 * self.p * self.alpha.max(self.beta()) <= 1.0, "alpha", || {
            "2 p max(alpha, beta) exceeds 1".into()
        })?;
        check(self.warmup >= self.max_horizon, "warmup", || {
            format!("must be at least max_horizon ({})", self.max_horizon)
        })?;
        check(self.t_max > self.warmup, "t_max", || {
            format!("must exceed warmup ({})", self.warmup)
        })?;
        match self.model {
            ModelKind::A => {}
            ModelKind::B => {
                check((0.0..=1.0).contains(&self.c), "c", || {
                    format!("must be in [0, 1], got {}", self.c)
                })?;
            }
            ModelKind::C => self.validate_multi_level()?,
            ModelKind::D => self.validate_information()?,
        }
        Ok(())
    }

    fn validate_multi_level(&self) -> Result<()> {
        let ml = &self.multi_level;
        check(ml.n_stocks >= 1, "multi_level.n_stocks", || "must be at least 1".into())?;
        check(
            ml.n_sectors >= 1 && ml.n_sectors <= ml.n_stocks,
            "multi_level.n_sectors",
            || format!("must be in 1..={}", ml.n_stocks),
        )?;
        check(
            ml.h_sector.len() == ml.n_sectors,
            "multi_level.h_sector",
            || format!("needs {} entries, got {}", ml.n_sectors, ml.h_sector.len()),
        )?;
        check(ml.h_market > 0.0, "multi_level.h_market", || {
            format!("must be positive, got {}", ml.h_market)
        })?;
        for (j, h) in ml.h_sector.iter().enumerate() {
            if !(*h > ml.h_market) {
                return Err(Error::config(
                    "multi_level.h_sector",
                    format!(
                        "sector {} has H_j = {h} <= H_M = {}",
                        j + 1,
                        ml.h_market
                    ),
                ));
            }
        }
        check(
            ml.p_group > 0.0 && ml.p_group <= 0.5,
            "multi_level.p_group",
            || format!("must be in (0, 0.5], got {}", ml.p_group),
        )
    }

    fn validate_information(&self) -> Result<()> {
        let inf = &self.information;
        check(inf.tau >= 1.0, "information.tau", || {
            format!("must be at least 1, got {}", inf.tau)
        })?;
        check((0.0..1.0).contains(&inf.a), "information.a", || {
            format!("must be in [0, 1), got {}", inf.a)
        })?;
        check(inf.f > 0.5 && inf.f <= 1.0, "information.f", || {
            format!("must be in (0.5, 1], got {}", inf.f)
        })?;
        check(inf.b1 > 0.0, "information.b1", || {
            format!("must be positive, got {}", inf.b1)
        })
    }
}
