//! Spectral clustering: isolated eigenvectors, degree regularization,
//! mixture fitting and scoring.

mod detect;
mod em;
mod embedding;
mod kmeans;
mod overlap;

pub use detect::{
    detect, AlphaMode, ClusterResult, Clusterer, DetectConfig, Diagnostics, InitMode, Method,
};
pub use em::{em_fit, mixture_log_likelihood, EmConfig, EmInit, MixtureModel};
pub use embedding::{
    empirical_class_stats, isolated_eigenvectors, orient_by_classes, regularize, ClassStats,
    IsolationConfig, SpectralEmbedding, ISOLATION_MARGIN,
};
pub use kmeans::{kmeans, KMeansResult};
pub use overlap::{best_matching, matching_fraction, overlap};
