//! Graph construction: squared distances, adaptive KNN and KFN affinities,
//! Sinkhorn balancing and the Laplacian `L = I - W^sym`.

mod affinity;
mod distance;
mod laplacian;
mod sinkhorn;

pub use affinity::{
    build_adaptive_affinity, build_kfn_affinity, AdaptiveAffinity, AffinityMode, SparseAffinity,
};
pub use distance::pairwise_sq_distances;
pub use laplacian::{laplacian_from_affinity, GraphOperators};
pub use sinkhorn::{sinkhorn_balance, sinkhorn_symmetrize, Balanced, SinkhornOptions};

use crate::error::Result;
use crate::imaging::FeatureMatrix;

/// Distances, adaptive affinity with `k` neighbors, balancing and Laplacian
/// in one call.
pub fn build_graph(
    features: &FeatureMatrix,
    k: usize,
    mode: AffinityMode,
) -> Result<GraphOperators> {
    let dist = pairwise_sq_distances(features)?;
    let adaptive = build_adaptive_affinity(dist.as_ref(), k, mode)?;
    let balanced = sinkhorn_symmetrize(&adaptive.affinity)?;
    laplacian_from_affinity(&balanced)
}
