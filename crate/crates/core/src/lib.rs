//! Forensic similarity graphs for image tampering detection and localization.
//!
//! An image is cut into overlapping patches, every pair of patches is scored
//! for forensic similarity, and the resulting weighted graph is analyzed with
//! community detection:
//!
//! * [`spectral`]: the second-smallest Laplacian eigenvalue (spectral gap) as a
//!   detection statistic, and the sign of its eigenvector as a 2-way partition.
//! * [`modularity`]: fast-greedy modularity optimization, whose optimum is a
//!   detection statistic and whose dendrogram gives a k-way partition.
//!
//! Patch partitions are turned into pixel masks by [`localize`], and scored by
//! [`metrics`]. [`synth`] generates seeded synthetic splices for benchmarking.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod graph;
pub mod localize;
pub mod metrics;
pub mod modularity;
pub mod patching;
pub mod pgm;
pub mod similarity;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{LaplacianKind, LaplacianMatrix, SimilarityGraph};
pub use localize::{BinaryMask, PixelMaps};
pub use modularity::ModularityResult;
pub use patching::{ImageBuffer, PatchGeometry, PatchSet};
pub use similarity::{ResidualProvider, SimilarityMatrix, SimilarityProvider};
pub use spectral::{Decision, DetectionResult, Partition, Spectrum};
