//! Equal-time cross-correlation matrices, symmetric eigen-decomposition and
//! market/sector mode diagnostics.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ReturnsPanel, SectorId};
use crate::stats::normalize;

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Validates squareness and symmetry within 1e-12.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n || n == 0 {
            return Err(Error::Validation(format!(
                "expected {n}x{n} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::Validation(format!(
                        "matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(SymmetricMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SymmetricMatrix { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Correlation matrix of a labelled stock panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub matrix: SymmetricMatrix,
    pub tickers: Vec<String>,
    pub sectors: Vec<SectorId>,
    /// Number of time points the matrix was estimated from.
    pub samples: usize,
}

impl CorrelationMatrix {
    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }
}

/// `C_ij = <r_i r_j>` over time, with each column normalized to zero mean and
/// unit population variance.
pub fn cross_correlation(panel: &ReturnsPanel) -> Result<CorrelationMatrix> {
    let t = panel.n_dates();
    let normalized = panel
        .columns
        .iter()
        .zip(&panel.tickers)
        .map(|(col, ticker)| {
            normalize(col).map(|n| n.values).map_err(|_| {
                Error::degenerate("cross_correlation", format!("column {ticker} is constant"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = normalized.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let c = normalized[i]
                .iter()
                .zip(&normalized[j])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / t as f64;
            data[i * n + j] = c;
            data[j * n + i] = c;
        }
    }
    Ok(CorrelationMatrix {
        matrix: SymmetricMatrix { n, data },
        tickers: panel.tickers.clone(),
        sectors: panel.sectors.clone(),
        samples: t,
    })
}

/// Eigenvalues in descending order with matching unit eigenvectors. Each
/// eigenvector's first component of magnitude above 1e-12 is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `max |U diag(lambda) U^T - A|`.
    pub fn reconstruction_error(&self, a: &SymmetricMatrix) -> f64 {
        let n = self.order();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n)
                    .map(|k| self.vectors[k][i] * self.values[k] * self.vectors[k][j])
                    .sum();
                worst = worst.max((v - a.get(i, j)).abs());
            }
        }
        worst
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn symmetric_eigen(matrix: &SymmetricMatrix) -> Result<EigenSystem> {
    let n = matrix.n;
    let mut a = matrix.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = n < 2 || scale == 0.0;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweep += 1;
    }
    if !converged {
        return Err(Error::degenerate(
            "symmetric_eigen",
            format!("Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"),
        ));
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut vec: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
            if let Some(first) = vec.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    vec.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (a[k * n + k], vec)
        })
        .collect();
    pairs.sort_by(|x, y| {
        y.0.total_cmp(&x.0).then_with(|| {
            x.1.iter()
                .zip(&y.1)
                .map(|(a, b)| b.total_cmp(a))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(EigenSystem { values, vectors })
}

/// Eigen-decomposition of a correlation matrix.
pub fn eigen_decompose(matrix: &CorrelationMatrix) -> Result<EigenSystem> {
    let m = &matrix.matrix;
    // Re-validate in case the matrix was assembled by hand.
    SymmetricMatrix::new(m.n, m.data.clone())?;
    symmetric_eigen(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub eigenvalue: f64,
    /// `1 / (n * sum u_i^4)`: 1 for a uniform vector, `1/n` for a basis vector.
    pub participation_ratio: f64,
    /// Sum of squared components per sector.
    pub sector_mass: BTreeMap<SectorId, f64>,
    pub dominant_sector: SectorId,
}

impl Mode {
    /// Mass of the dominant sector divided by the largest other sector's mass.
    pub fn dominance_ratio(&self) -> f64 {
        let top = self.sector_mass[&self.dominant_sector];
        let runner_up = self
            .sector_mass
            .iter()
            .filter(|(s, _)| **s != self.dominant_sector)
            .map(|(_, m)| *m)
            .fold(0.0, f64::max);
        if runner_up == 0.0 {
            f64::INFINITY
        } else {
            top / runner_up
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub modes: Vec<Mode>,
}

/// Participation ratio and sector masses of every eigenvector. `sectors[i]`
/// is the sector of component `i`.
pub fn mode_report(system: &EigenSystem, sectors: &[SectorId]) -> Result<ModeReport> {
    let n = system.vectors.first().map_or(0, Vec::len);
    if sectors.len() != n {
        return Err(Error::Validation(format!(
            "sector map has {} entries for order {n}",
            sectors.len()
        )));
    }
    let modes = system
        .values
        .iter()
        .zip(&system.vectors)
        .map(|(&eigenvalue, u)| {
            let quartic: f64 = u.iter().map(|x| x.powi(4)).sum();
            let mut sector_mass: BTreeMap<SectorId, f64> = BTreeMap::new();
            for (x, s) in u.iter().zip(sectors) {
                *sector_mass.entry(*s).or_default() += x * x;
            }
            let dominant_sector = sector_mass
                .iter()
                .fold(None::<(SectorId, f64)>, |best, (s, m)| match best {
                    Some((_, bm)) if bm >= *m => best,
                    _ => Some((*s, *m)),
                })
                .map(|(s, _)| s)
                .unwrap_or_default();
            Mode {
                eigenvalue,
                participation_ratio: 1.0 / (n as f64 * quartic),
                sector_mass,
                dominant_sector,
            }
        })
        .collect();
    Ok(ModeReport { modes })
}

/// Edges `(1 -+ sqrt(n/T))^2` of the Marchenko-Pastur bulk for `n` independent
/// unit-variance series of length `T`.
pub fn marchenko_pastur_bounds(n: usize, t: usize) -> Result<(f64, f64)> {
    if n == 0 || t <= n {
        return Err(Error::UnsupportedRegime(format!(
            "Marchenko-Pastur bounds need T > n >= 1 (n = {n}, T = {t})"
        )));
    }
    let q = (n as f64 / t as f64).sqrt();
    Ok(((1.0 - q).powi(2), (1.0 + q).powi(2)))
}

/// Eigenvalues, Marchenko-Pastur edges and leading mode summary, as exported to JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub order: usize,
    pub samples: usize,
    pub eigenvalues: Vec<f64>,
    pub mp_lower: Option<f64>,
    pub mp_upper: Option<f64>,
    pub leading_modes: Vec<Mode>,
}

impl SpectrumReport {
    pub fn build(matrix: &CorrelationMatrix, system: &EigenSystem, leading: usize) -> Result<Self> {
        let report = mode_report(system, &matrix.sectors)?;
        let bounds = marchenko_pastur_bounds(matrix.order(), matrix.samples).ok();
        Ok(SpectrumReport {
            order: matrix.order(),
            samples: matrix.samples,
            eigenvalues: system.values.clone(),
            mp_lower: bounds.map(|b| b.0),
            mp_upper: bounds.map(|b| b.1),
            leading_modes: report.modes.into_iter().take(leading).collect(),
        })
    }
}

/// Writes `ticker,u_lambda0,...` for the `count` leading eigenvectors, rows
/// ordered by sector and then ticker.
pub fn write_eigenvectors_csv<W: Write>(
    matrix: &CorrelationMatrix,
    system: &EigenSystem,
    count: usize,
    writer: W,
) -> Result<()> {
    let count = count.min(system.order());
    let mut order: Vec<usize> = (0..matrix.order()).collect();
    order.sort_by(|&a, &b| {
        (matrix.sectors[a], &matrix.tickers[a]).cmp(&(matrix.sectors[b], &matrix.tickers[b]))
    });
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    let mut header = vec!["ticker".to_string()];
    header.extend((0..count).map(|k| format!("u_lambda{k}")));
    w.write_record(&header).map_err(ser)?;
    for i in order {
        let mut row = vec![matrix.tickers[i].clone()];
        row.extend((0..count).map(|k| format!("{:?}", system.vectors[k][i])));
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}
