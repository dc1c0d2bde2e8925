//! Wasserstein curvature of Markov jump processes and Poisson-type deviation
//! bounds for their time averages.
//!
//! The crate is organized bottom-up: [`metric`] (path metrics on ℕ and
//! product metrics), [`process`] (generators, birth–death chains, semigroups),
//! [`transport`] (exact Wasserstein distances), [`curvature`], [`bounds`] and
//! [`simulate`].

pub mod bounds;
pub mod curvature;
pub mod metric;
pub mod process;
pub mod simulate;
pub mod transport;

use thiserror::Error;

pub use bounds::{BoundCurve, BoundParams, BoundValue};
pub use curvature::{CurvatureCertificate, JumpConstants};
pub use metric::{Metric, PathMetric, ProductMetric, TailRule, TrivialMetric, Weights};
pub use process::{BirthDeathRates, Generator, JumpKernel, RateModel, StationaryMeasure};
pub use simulate::{PathRecord, TailEstimate};
pub use transport::{DiscreteMeasure, TransportPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Metric(#[from] metric::MetricError),
    #[error(transparent)]
    Process(#[from] process::ProcessError),
    #[error(transparent)]
    Transport(#[from] transport::TransportError),
    #[error(transparent)]
    Curvature(#[from] curvature::CurvatureError),
    #[error(transparent)]
    Bound(#[from] bounds::BoundError),
    #[error(transparent)]
    Simulation(#[from] simulate::SimulationError),
}
