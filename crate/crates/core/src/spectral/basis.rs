use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::graph::GraphOperators;

pub const DEFAULT_DENSE_LIMIT: usize = 6000;
const SYMMETRY_TOL: f64 = 1e-10;

/// Orthonormal eigenbasis of a symmetric shift operator.
///
/// Eigenvalues are sorted in descending order, so index 0 is the highest
/// graph frequency and index `N - 1` the lowest. Each eigenvector is signed
/// so that its first entry of largest magnitude is positive.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` pairs with `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> MatRef<'_, f64> {
        self.eigenvectors.as_ref()
    }
}

pub fn eigendecompose(l: MatRef<'_, f64>) -> Result<SpectralBasis> {
    eigendecompose_with_limit(l, DEFAULT_DENSE_LIMIT)
}

pub fn eigendecompose_with_limit(l: MatRef<'_, f64>, limit: usize) -> Result<SpectralBasis> {
    let n = l.nrows();
    if n != l.ncols() {
        return Err(Error::dims(format!(
            "{}x{} operator is not square",
            n,
            l.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::Empty("operator"));
    }
    if n > limit {
        return Err(Error::DenseBudget { n, limit });
    }
    let mut asym: f64 = 0.0;
    for j in 0..n {
        for i in j + 1..n {
            let (a, b) = (l[(i, j)], l[(j, i)]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite("operator"));
            }
            asym = asym.max((a - b).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let evd = l
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    // faer sorts ascending; flip to descending.
    let eigenvalues: Vec<f64> = (0..n).rev().map(|k| s[k]).collect();
    let mut eigenvectors = Mat::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);
    for k in 0..n {
        let col = eigenvectors.col(k);
        let peak = (0..n).map(|i| col[i].abs()).fold(0.0, f64::max);
        let lead = (0..n)
            .find(|&i| col[i].abs() >= peak * (1.0 - 1e-12))
            .expect("a unit vector has a nonzero entry");
        if col[lead] < 0.0 {
            for i in 0..n {
                eigenvectors[(i, k)] = -eigenvectors[(i, k)];
            }
        }
    }
    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenbasis of the graph Laplacian.
pub fn laplacian_basis(graph: &GraphOperators) -> Result<SpectralBasis> {
    eigendecompose(graph.laplacian.to_dense().as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::mat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_invariants(l: MatRef<'_, f64>, b: &SpectralBasis) {
        let u = b.eigenvectors();
        let gram = u.transpose() * u;
        let n = b.n();
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - e).abs() <= 1e-8);
            }
        }
        let lu = l * u;
        for k in 0..n {
            let lam = b.eigenvalues()[k];
            let r: f64 = (0..n)
                .map(|i| (lu[(i, k)] - lam * u[(i, k)]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r <= 1e-6 * lam.abs().max(1.0));
        }
        assert!(b.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn two_by_two_path() {
        let l = mat![[1.0, -1.0], [-1.0, 1.0]];
        let b = eigendecompose(l.as_ref()).unwrap();
        assert!((b.eigenvalues()[0] - 2.0).abs() < 1e-12);
        assert!(b.eigenvalues()[1].abs() < 1e-12);
        let s = 0.5f64.sqrt();
        let u = b.eigenvectors();
        assert!((u[(0, 0)] - s).abs() < 1e-12 && (u[(1, 0)] + s).abs() < 1e-12);
        assert!((u[(0, 1)] - s).abs() < 1e-12 && (u[(1, 1)] - s).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_gives_orthonormal_basis() {
        let l = Mat::<f64>::zeros(4, 4);
        let b = eigendecompose(l.as_ref()).unwrap();
        assert!(b.eigenvalues().iter().all(|&v| v == 0.0));
        check_invariants(l.as_ref(), &b);
    }

    #[test]
    fn random_symmetric_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Mat::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let l = Mat::from_fn(8, 8, |i, j| a[(i, j)] + a[(j, i)]);
        let b = eigendecompose(l.as_ref()).unwrap();
        check_invariants(l.as_ref(), &b);
    }

    #[test]
    fn rejects_asymmetric_and_oversized() {
        let l = mat![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(
            eigendecompose(l.as_ref()),
            Err(Error::Asymmetric(_))
        ));
        let l = Mat::<f64>::identity(5, 5);
        assert!(matches!(
            eigendecompose_with_limit(l.as_ref(), 4),
            Err(Error::DenseBudget { n: 5, limit: 4 })
        ));
    }
}
