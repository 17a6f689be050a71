//! Intrinsic-dimension correlation between row-aligned datasets.
//!
//! Two datasets `X` (n × d1) and `Y` (n × d2) are correlated when their
//! feature-wise concatenation needs fewer coordinates than the two parts
//! separately:
//!
//! ```text
//! rho = (Id(X) + Id(Y) - Id(X ⊕ Y)) / max(Id(X), Id(Y))
//! ```
//!
//! where `Id` is an intrinsic-dimension estimate ([`estimators`]: TwoNN by
//! default, maximum likelihood, or a PCA rank). Significance comes from a
//! permutation test that re-pairs the rows of `Y` ([`metric`]).
//!
//! ```
//! use idcor::{estimators::Estimator, metric::idcor, synth};
//!
//! let spec = synth::ScenarioSpec::new(synth::Scenario::spiral(), 2000, 1);
//! let data = synth::generate(&spec).unwrap();
//! let report = idcor(&data.x, data.y.as_ref().unwrap(), &Estimator::default()).unwrap();
//! assert!(report.rho > 0.8);
//! ```

pub mod baselines;
pub mod data;
pub mod error;
pub mod estimators;
pub mod io;
pub mod knn;
pub mod metric;
pub mod rng;
pub mod synth;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use rng::RngSeed;
