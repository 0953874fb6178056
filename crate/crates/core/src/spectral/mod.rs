//! Graph Fourier analysis on the Laplacian eigenbasis.
//!
//! Frequencies are indexed in descending eigenvalue order throughout: spectral
//! row 0 is the highest frequency and row `N - 1` the lowest (eigenvalue 0 on
//! a connected graph). Cutoff indices `k_c` are 1-based, matching that order.

mod basis;
mod filter;
mod transform;

pub use basis::{
    eigendecompose, eigendecompose_with_limit, laplacian_basis, SpectralBasis, DEFAULT_DENSE_LIMIT,
};
pub use filter::{
    apply_filter_spectral, apply_poly_filter, design_filter, DesignMethod, FilterDesign,
    FilterSpec, VANDERMONDE_RIDGE,
};
pub use transform::{
    energy_profile, gft, ideal_split, igft, quadratic_tv_edgewise, quadratic_tv_matrix,
    spectral_projection_regression, total_variation, EnergyProfile, SpectralSplit, TvForm,
};
