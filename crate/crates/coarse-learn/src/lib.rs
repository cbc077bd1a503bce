//! Learning distributions and predictors from coarse labels.
//!
//! A coarse sample hides the fine label `z` drawn from an unknown
//! distribution and reveals only the cell `S ∋ z` of a random partition of
//! the label space. This crate implements estimation routines that work
//! directly on such samples:
//!
//! - [`discrete`]: the coarse sampling process over finite label sets, its
//!   exact pushforward law, and an information-preservation diagnostic.
//! - [`mle`]: projected-gradient maximum likelihood for a discrete
//!   distribution observed through coarse labels.
//! - [`sq`]: statistical queries answered from coarse samples alone, the
//!   bridge from coarse data to any SQ-implementable learner.
//! - [`softmax`]: multiclass logistic regression trained through the SQ
//!   bridge, never seeing a fine label.
//! - [`convex`]: convexly induced partitions of Euclidean space.
//! - [`gaussian`]: mean estimation for a spherical Gaussian observed through
//!   convex coarse labels.
//! - [`maxcut`]: reduction from Max-Cut to Gaussian mean estimation with
//!   convex coarse labels, evidence that convexity alone is not enough
//!   without information preservation.
//!
//! Numeric code is generic over the scalar type through [`scalar::Real`];
//! the crate root re-exports `f64` aliases for the common case.

pub mod convex;
pub mod discrete;
pub mod error;
pub mod gaussian;
mod linalg;
pub mod maxcut;
pub mod mle;
pub mod rng;
pub mod scalar;
pub mod sq;
pub mod softmax;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` aliases for the generic core types.
pub mod f64_types {
    pub type DiscreteDistribution = crate::discrete::DiscreteDistribution<f64>;
    pub type PartitionDistribution = crate::discrete::PartitionDistribution<f64>;
    pub type FineLabeledDistribution<X> = crate::discrete::FineLabeledDistribution<X, f64>;
    pub type MleConfig = crate::mle::MleConfig<f64>;
    pub type MleFit = crate::mle::MleFit<f64>;
    pub type SqBudget = crate::sq::SqBudget<f64>;
    pub type SqEstimate = crate::sq::SqEstimate<f64>;
    pub type QueryFunction<X> = crate::sq::QueryFunction<X, f64>;
    pub type SoftmaxModel = crate::softmax::SoftmaxModel<f64>;
    pub type CoarseLogregConfig = crate::softmax::CoarseLogregConfig<f64>;
    pub type TrainingReport = crate::softmax::TrainingReport<f64>;
    pub type ConvexSet = crate::convex::ConvexSet<f64>;
    pub type Region = crate::convex::Region<f64>;
    pub type ConvexPartition = crate::convex::ConvexPartition<f64>;
    pub type GaussianPartition = crate::convex::GaussianPartition<f64>;
    pub type ConvexPartitionDistribution = crate::convex::ConvexPartitionDistribution<f64>;
    pub type PartitionSpec = crate::convex::PartitionSpec<f64>;
    pub type GaussianCoarseConfig = crate::gaussian::GaussianCoarseConfig<f64>;
    pub type McEstimate = crate::gaussian::McEstimate<f64>;
    pub type HardInstance = crate::maxcut::HardInstance<f64>;
    pub type RoundedCut = crate::maxcut::RoundedCut<f64>;
    pub type McGap = crate::maxcut::McGap<f64>;
}
