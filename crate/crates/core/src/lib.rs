//! Linear binary classifiers and the strategies used to combine them into
//! bagged ensembles.
//!
//! Five combiners are provided: softmax averaging, model averaging, majority
//! voting, the symmetric potential transform, and the class-specific
//! potential built from class centroids, Mahalanobis distances and the
//! normal vector of each member's decision plane. Multiclass problems are
//! decomposed one-vs-one. The [`evaluation`] module holds the confusion
//! based quality criteria, Cohen's kappa and the kappa-driven parameter
//! search.

pub mod classifiers;
pub mod combiners;
mod error;
pub mod evaluation;
pub mod geometry;
pub mod primitives;
pub mod resample;

pub use classifiers::{train, Fit, TrainerConfig, TrainerKind};
pub use combiners::{
    bag_train, ovo_train, BagSpec, Combiner, CombinerKind, Ensemble, MemberResponse, OvoModel,
};
pub use error::{Error, Result};
pub use evaluation::{
    cohen_kappa, grid_search, ConfusionCounts, GridSpec, InnerResponses, MetricSet, Tuned,
};
pub use geometry::{ClassGeometry, GeometryPair, PcTerms, PotentialParams, ZetaParam};
pub use primitives::{BinaryDataset, BinaryLabel, LabeledDataset, LinearModel};
