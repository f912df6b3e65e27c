//! Spectral community detection for dense degree-corrected stochastic block
//! models.
//!
//! The pipeline normalizes the modularity matrix by `D^{-α}` on both sides,
//! picks the eigenvectors that escape the noise bulk, corrects them by
//! `D^{α-1}` and clusters the rows with a Gaussian mixture. The [`rmt`]
//! module predicts the bulk edge, the detectability threshold and the
//! position of every isolated eigenvalue from the node-weight distribution
//! alone; [`theory`] turns those predictions into limiting class statistics
//! and misclassification rates.
//!
//! ```
//! use dcsbm_spectral::cluster::{detect, AlphaMode, DetectConfig};
//! use dcsbm_spectral::graph::{sample_dcsbm, AffinityPattern, DcsbmParams, WeightLaw};
//!
//! let params = DcsbmParams {
//!     n: 600,
//!     proportions: vec![0.5, 0.5],
//!     affinity: AffinityPattern::Identity.matrix(2, 20.0),
//!     weight_law: WeightLaw::Discrete { atoms: vec![(0.2, 0.75), (0.6, 0.25)] },
//! };
//! let (graph, _latent) = sample_dcsbm(&params, 7).unwrap();
//! let cfg = DetectConfig { alpha: AlphaMode::Fixed(0.5), ..DetectConfig::new(2) };
//! let result = detect(&graph, &cfg).unwrap();
//! assert!(result.overlap.unwrap() > 0.8);
//! ```

pub mod cluster;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod operators;
pub mod presets;
pub mod rmt;
pub mod theory;

pub use error::{Error, Result};
