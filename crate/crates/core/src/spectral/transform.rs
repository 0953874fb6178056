use std::fmt::Write as _;
use std::str::FromStr;

use faer::Mat;

use super::SpectralBasis;
use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::imaging::FeatureMatrix;

fn check_rows(n: usize, f: &FeatureMatrix) -> Result<()> {
    if f.nrows() != n {
        return Err(Error::dims(format!(
            "signal has {} rows, graph has {n} vertices",
            f.nrows()
        )));
    }
    Ok(())
}

/// Spectral coefficients `U^T X`; row `k` belongs to eigenvalue `k`.
pub fn gft(basis: &SpectralBasis, f: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_rows(basis.n(), f)?;
    Ok(FeatureMatrix::from_mat(
        basis.eigenvectors().transpose() * f.as_mat(),
    ))
}

/// Vertex-domain signal `U X~`.
pub fn igft(basis: &SpectralBasis, coeffs: &FeatureMatrix) -> Result<FeatureMatrix> {
    check_rows(basis.n(), coeffs)?;
    Ok(FeatureMatrix::from_mat(
        basis.eigenvectors() * coeffs.as_mat(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvForm {
    /// `Tr(f^T L f)`.
    Quadratic,
    /// `sum over columns of ||f - W f||_1`.
    L1,
}

impl FromStr for TvForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(TvForm::Quadratic),
            "l1" => Ok(TvForm::L1),
            other => Err(Error::param(format!(
                "unknown total variation form `{other}`"
            ))),
        }
    }
}

pub fn total_variation(graph: &GraphOperators, f: &FeatureMatrix, form: TvForm) -> Result<f64> {
    check_rows(graph.n(), f)?;
    Ok(match form {
        TvForm::Quadratic => quadratic_tv_matrix(graph, f),
        TvForm::L1 => {
            let wf = graph.affinity.weights().mul_dense(f.as_mat());
            let x = f.as_mat();
            let mut total = 0.0;
            for j in 0..x.ncols() {
                for i in 0..x.nrows() {
                    total += (x[(i, j)] - wf[(i, j)]).abs();
                }
            }
            total
        }
    })
}

/// `Tr(f^T L f)` through the sparse Laplacian.
pub fn quadratic_tv_matrix(graph: &GraphOperators, f: &FeatureMatrix) -> f64 {
    let lf = graph.laplacian.mul_dense(f.as_mat());
    let x = f.as_mat();
    let mut total = 0.0;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            total += x[(i, j)] * lf[(i, j)];
        }
    }
    total
}

/// `1/2 sum_{i,j} w_ij ||f_i - f_j||^2` over the stored edges.
pub fn quadratic_tv_edgewise(graph: &GraphOperators, f: &FeatureMatrix) -> f64 {
    let x = f.as_mat();
    let half: f64 = graph
        .affinity
        .weights()
        .iter()
        .map(|(i, j, w)| {
            let d2: f64 = (0..x.ncols())
                .map(|c| (x[(i, c)] - x[(j, c)]).powi(2))
                .sum();
            w * d2
        })
        .sum();
    0.5 * half
}

/// Per-frequency energy `||X~_k||_2` in descending-eigenvalue order.
#[derive(Debug, Clone)]
pub struct EnergyProfile {
    pub eigenvalues: Vec<f64>,
    pub norms: Vec<f64>,
    /// `sum_k lambda_k ||X~_k||^2`, equal to the quadratic total variation.
    pub weighted_energy: f64,
}

impl EnergyProfile {
    /// Fraction of `||X||_F^2` carried by indices `range`.
    pub fn energy_fraction(&self, range: std::ops::Range<usize>) -> f64 {
        let total: f64 = self.norms.iter().map(|v| v * v).sum();
        if total == 0.0 {
            return 0.0;
        }
        self.norms[range].iter().map(|v| v * v).sum::<f64>() / total
    }

    /// Two-column CSV, `lambda,norm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,norm\n");
        for (l, v) in self.eigenvalues.iter().zip(&self.norms) {
            writeln!(s, "{l:.17e},{v:.17e}").unwrap();
        }
        s
    }
}

pub fn energy_profile(basis: &SpectralBasis, f: &FeatureMatrix) -> Result<EnergyProfile> {
    let coeffs = gft(basis, f)?;
    let norms = coeffs.row_norms();
    let weighted_energy = basis
        .eigenvalues()
        .iter()
        .zip(&norms)
        .map(|(l, v)| l * v * v)
        .sum();
    Ok(EnergyProfile {
        eigenvalues: basis.eigenvalues().to_vec(),
        norms,
        weighted_energy,
    })
}

/// Vertex-domain low/high frequency parts with `low + high = f`.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub low: FeatureMatrix,
    pub high: FeatureMatrix,
}

/// Ideal split at 1-based cutoff `k_c`: spectral rows `k >= k_c` (low
/// frequencies under descending order) form `low`, rows `k < k_c` form `high`.
pub fn ideal_split(basis: &SpectralBasis, f: &FeatureMatrix, k_c: usize) -> Result<SpectralSplit> {
    let n = basis.n();
    if k_c == 0 || k_c > n {
        return Err(Error::param(format!(
            "cutoff index {k_c} must lie in [1, {n}]"
        )));
    }
    let coeffs = gft(basis, f)?;
    let n_high = k_c - 1;
    let u = basis.eigenvectors();
    let high = if n_high == 0 {
        Mat::zeros(n, f.ncols())
    } else {
        u.subcols(0, n_high) * coeffs.as_mat().subrows(0, n_high)
    };
    let low = f.as_mat() - &high;
    Ok(SpectralSplit {
        low: FeatureMatrix::from_mat(low),
        high: FeatureMatrix::from_mat(high),
    })
}

/// Regression by spectral projection: `Z' = U Y~_L`, `Delta' = U Y~_H`.
pub fn spectral_projection_regression(
    basis: &SpectralBasis,
    y: &FeatureMatrix,
    k_c: usize,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let split = ideal_split(basis, y, k_c)?;
    Ok((split.low, split.high))
}
