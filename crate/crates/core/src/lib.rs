//! Agent-based herding market models with the calibration and statistical
//! tooling needed to compare them against market data.
//!
//! - [`ingest`] loads index series, return panels, sector maps and weekly
//!   search volumes.
//! - [`stats`] computes correlation curves, Hurst exponents, tail exponents
//!   and curve fits.
//! - [`spectral`] decomposes cross-correlation matrices.
//! - [`calibrate`] estimates model parameters from data.
//! - [`sim`] runs the four market models.

pub mod calibrate;
pub mod error;
pub mod ingest;
pub mod sim;
pub mod spectral;
pub mod stats;

pub use calibrate::{
    AsymmetryEstimate, CalibrationReport, ComovementEstimate, ForceAsymmetry, InfoForceSeries,
};
pub use error::{Error, Result};
pub use ingest::{IndexSeries, ReturnSeries, ReturnsPanel, SearchSeries, SectorId, TimeAxis};
pub use sim::{
    ClusterPartition, HorizonWeights, ModelConfig, ModelKind, SimOutput,
};
pub use spectral::{CorrelationMatrix, EigenSystem, SpectrumReport, SymmetricMatrix};
pub use stats::{CorrelationCurve, EnsembleCurve, FitModel, FitResult, NormalizedReturns};
