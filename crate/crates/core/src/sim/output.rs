use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ModelKind;
use crate::error::{Error, Result};
use crate::ingest::{ReturnSeries, ReturnsPanel, SectorId, TimeAxis};

/// Per-stock returns of the multi-level model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StockReturns {
    pub tickers: Vec<String>,
    pub sectors: Vec<SectorId>,
    /// One column per stock, aligned with `SimOutput::returns`.
    pub columns: Vec<Vec<i64>>,
    /// Agents holding each stock.
    pub agents: Vec<usize>,
}

/// Named per-day diagnostic traces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Diagnostics {
    pub(crate) fn with_names(names: &[&str]) -> Self {
        Diagnostics {
            names: names.iter().map(|s| s.to_string()).collect(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    pub(crate) fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub model: ModelKind,
    pub seed: u64,
    pub n_agents: usize,
    /// Absolute day index of `returns[0]` (equal to the warmup length).
    pub first_day: usize,
    /// Aggregate return `R(t)` per recorded day.
    pub returns: Vec<i64>,
    pub stocks: Option<StockReturns>,
    pub diagnostics: Diagnostics,
}

impl SimOutput {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn returns_f64(&self) -> Vec<f64> {
        self.returns.iter().map(|&r| r as f64).collect()
    }

    fn days(&self) -> Vec<u64> {
        (0..self.returns.len())
            .map(|i| (self.first_day + i) as u64)
            .collect()
    }

    pub fn return_series(&self) -> ReturnSeries {
        ReturnSeries {
            time: TimeAxis::Steps(self.days()),
            returns: self.returns_f64(),
            volume: None,
        }
    }

    /// Per-stock returns as a panel (multi-level model only).
    pub fn panel(&self) -> Result<ReturnsPanel> {
        let stocks = self.stocks.as_ref().ok_or_else(|| {
            Error::Validation(format!("model {} has no per-stock returns", self.model))
        })?;
        ReturnsPanel::new(
            TimeAxis::Steps(self.days()),
            stocks.tickers.clone(),
            stocks.sectors.clone(),
            stocks
                .columns
                .iter()
                .map(|c| c.iter().map(|&r| r as f64).collect())
                .collect(),
        )
    }

    /// `day,R` plus one column per stock when present.
    pub fn write_returns_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        let mut header = vec!["day".to_string(), "R".to_string()];
        if let Some(s) = &self.stocks {
            header.extend(s.tickers.iter().cloned());
        }
        w.write_record(&header).map_err(ser)?;
        for (i, r) in self.returns.iter().enumerate() {
            let mut row = vec![(self.first_day + i).to_string(), r.to_string()];
            if let Some(s) = &self.stocks {
                row.extend(s.columns.iter().map(|c| c[i].to_string()));
            }
            w.write_record(&row).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn write_diagnostics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        let mut header = vec!["day".to_string()];
        header.extend(self.diagnostics.names.iter().cloned());
        w.write_record(&header).map_err(ser)?;
        let rows = self.diagnostics.columns.first().map_or(0, Vec::len);
        for i in 0..rows {
            let mut row = vec![(self.first_day + i).to_string()];
            row.extend(self.diagnostics.columns.iter().map(|c| format!("{:?}", c[i])));
            w.write_record(&row).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimOutput {
        let mut diagnostics = Diagnostics::with_names(&["x"]);
        diagnostics.push(&[0.5]);
        diagnostics.push(&[1.5]);
        SimOutput {
            model: ModelKind::C,
            seed: 1,
            n_agents: 10,
            first_day: 150,
            returns: vec![3, -1],
            stocks: Some(StockReturns {
                tickers: vec!["S01".into(), "S02".into()],
                sectors: vec![1, 2],
                columns: vec![vec![2, 0], vec![1, -1]],
                agents: vec![5, 5],
            }),
            diagnostics,
        }
    }

    #[test]
    fn returns_csv_layout() {
        let mut buf = Vec::new();
        sample().write_returns_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "day,R,S01,S02\n150,3,2,1\n151,-1,0,-1\n"
        );
    }

    #[test]
    fn diagnostics_csv_layout() {
        let mut buf = Vec::new();
        sample().write_diagnostics_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "day,x\n150,0.5\n151,1.5\n");
    }

    #[test]
    fn panel_uses_step_axis() {
        let p = sample().panel().unwrap();
        assert_eq!(p.time, TimeAxis::Steps(vec![150, 151]));
        assert_eq!(p.columns[1], vec![1.0, -1.0]);
    }
}
