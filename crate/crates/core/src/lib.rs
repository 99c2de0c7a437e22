//! Fair classification that tolerates adversarial corruption of protected
//! attributes.
//!
//! The crate has three layers:
//!
//! - empirical machinery: datasets, linear-fractional group metrics, linear
//!   classifiers with logistic loss ([`metrics`], [`hypothesis`], [`data`]);
//! - robust training: attribute-perturbing adversaries and the error-tolerant
//!   constrained programs that remain accurate and fair against them
//!   ([`adversary`], [`solver`], [`reduction`]);
//! - an exact finite-distribution lab that brute-force checks the
//!   impossibility constructions and the coupling adversary ([`theory`]).

pub mod adversary;
pub mod data;
pub mod error;
pub mod hypothesis;
pub mod metrics;
pub mod reduction;
pub mod rng;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
pub use hypothesis::LinearClassifier;
pub use metrics::{Dataset, MetricSpec, PerformanceTable, Sample};
