//! Fit a generative model of web-robot traffic from server access logs,
//! synthesize request traces from it, and evaluate generated traffic
//! against the original via distributional comparison and LFU/LRU cache
//! simulation.
//!
//! Pipeline: [`ingest`] parses logs and reconstructs sessions, [`distfit`]
//! fits the arrival/length/gap distributions, [`resource_model`] fits the
//! request-path model, [`generator`] runs the event-driven synthesis, and
//! [`cache_sim`] / [`evalcmp`] evaluate the result.
//!
//! The numeric core is generic over [`scalar::Scalar`]; the aliases below
//! pin `f64` for the pipeline types.

pub mod cache_sim;
pub mod distfit;
pub mod evalcmp;
pub mod generator;
pub mod ingest;
pub mod log_model;
pub mod resource_model;
pub mod scalar;

pub use scalar::Scalar;

/// `f64` instantiations used throughout the pipeline.
pub type ExponentialParams = distfit::ExponentialParams<f64>;
pub type ZetaParams = distfit::ZetaParams<f64>;
pub type LognormalParams = distfit::LognormalParams<f64>;
pub type CategoricalParams = distfit::CategoricalParams<f64>;
pub type EmpiricalCdf = distfit::EmpiricalCdf<f64>;
pub type SubdirectoryDist = resource_model::SubdirectoryDist<f64>;
pub type DirichletHyperparams = resource_model::DirichletHyperparams<f64>;
pub type RobotSubdirModel = resource_model::RobotSubdirModel<f64>;

pub use distfit::FitError;
pub use log_model::{AgentId, AgentIdMode, RawLogEntry, Request, Session, Trace, TraceOrigin};
