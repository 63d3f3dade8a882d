//! Positive-unlabeled classification: surrogate-label generation, LassoJoint,
//! cluster-based label cleaning ("pecking") and a replication harness.

pub mod cluster2;
pub mod data;
pub mod error;
pub mod glm;
pub mod harness;
pub mod labelling;
pub mod metrics;
pub mod pecking;
pub mod seed;

pub use error::{Error, Result};
