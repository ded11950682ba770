//! Information-theoretic feature selection over discretized datasets.
//!
//! The centerpiece is a cross-entropy optimizer over Bernoulli-distributed
//! binary feature masks that maximizes the mutual information between the
//! selected subset and the class attribute while estimating the subset
//! cardinality on its own. Around it: plug-in entropy estimators, four greedy
//! ranking baselines (MIM, CMIM, mRMR, DISR), and an evaluation harness with
//! Gaussian and k-NN classifiers producing misclassification-error and
//! information-gap metrics.
//!
//! Build with the default `parallel` feature for rayon-backed batch scoring;
//! without it every code path falls back to sequential iteration with
//! identical results.

pub mod baselines;
pub mod ce;
pub mod data;
pub mod error;
pub mod eval;
pub(crate) mod exec;
pub mod infotheory;
pub mod report;

pub use error::{Error, Result};
