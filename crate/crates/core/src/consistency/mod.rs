//! Error consistency (Cohen's κ on per-item correctness) and representational
//! similarity analysis.

mod kappa;
mod rsa;

pub use kappa::{
    error_consistency, kappa_from_counts, kappa_planes, pairwise_kappa_matrix,
    within_condition_consistency, KappaMatrix, KappaResult,
};
pub use rsa::{rdm, rsa_correlation, FeatureTable, Rdm, RsaMethod};
