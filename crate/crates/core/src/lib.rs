//! Listwise learning-to-rank workbench: surrogate losses with their
//! l-infinity-geometry constants, linear-scorer trainers, generalization
//! bound calculators, and the independent numerical oracles used to verify
//! all of them against each other.

pub mod bounds;
pub mod data;
pub mod error;
pub mod letor;
pub mod loss;
pub mod metrics;
pub mod project;
pub mod scoring;
pub mod synth;
pub mod train;
pub mod verify;

pub use data::{input_radius, ClassSpec, Dataset, NormKind, QueryInstance};
pub use error::{Error, Result};
pub use loss::{LossConstants, LossFn, SurrogateLoss};
pub use scoring::{
    apply_permutation, check_invariance, check_invariance_of, rank_from_scores, score,
    FullLinearMap, InvarianceReport, Permutation, ScoringParams,
};
