//! Symmetric Sinkhorn-Knopp balancing.
//!
//! For a symmetric nonnegative `W` with total support there is a positive
//! diagonal `D` with `D W D` doubly stochastic. The iteration
//! `d <- sqrt(d / (W d))` has exactly that fixed point and, unlike alternating
//! row/column sweeps, keeps a single scaling vector, so the balanced matrix is
//! symmetric by construction.

use super::SparseAffinity;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy)]
pub struct SinkhornOptions {
    /// Largest accepted row-sum deviation.
    pub tolerance: f64,
    /// Deviation the iteration keeps refining towards while iterations remain.
    pub target: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            tolerance: 1e-6,
            target: 1e-12,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Balanced {
    pub affinity: SparseAffinity,
    pub scaling: Vec<f64>,
    pub iterations: usize,
    /// Max `|row_sum - 1|` of the returned matrix.
    pub deviation: f64,
}

/// `(W + W^T)/2` balanced to a symmetric doubly stochastic matrix.
pub fn sinkhorn_symmetrize(w: &SparseAffinity) -> Result<SparseAffinity> {
    sinkhorn_balance(w, SinkhornOptions::default()).map(|b| b.affinity)
}

pub fn sinkhorn_balance(w: &SparseAffinity, opts: SinkhornOptions) -> Result<Balanced> {
    let sym = if w.is_symmetric() {
        w.clone()
    } else {
        w.symmetrized_mean()
    };
    let m = sym.weights();
    let n = m.nrows();
    for i in 0..n {
        if !m.row(i).1.iter().any(|&v| v > 0.0) {
            return Err(Error::ZeroRow(i));
        }
    }

    let mut d = vec![1.0; n];
    let mut iterations = 0;
    loop {
        let balanced = scaled(m, &d);
        let deviation = balanced
            .row_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max);
        let exhausted = iterations == opts.max_iter;
        if deviation <= opts.target || (exhausted && deviation <= opts.tolerance) {
            return Ok(Balanced {
                affinity: SparseAffinity::new(balanced)?,
                scaling: d,
                iterations,
                deviation,
            });
        }
        if exhausted {
            return Err(Error::SinkhornDiverged {
                iterations,
                deviation,
            });
        }
        let wd = m.mul_vec(&d);
        for (di, r) in d.iter_mut().zip(wd) {
            *di = (*di / r).sqrt();
        }
        iterations += 1;
    }
}

/// `D W D` with every pair evaluated as `d_min * w * d_max` so that
/// mirrored entries are bitwise equal.
fn scaled(m: &CsrMatrix, d: &[f64]) -> CsrMatrix {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        let (cols, vals) = out.row_values_mut(i);
        for (&j, v) in cols.iter().zip(vals.iter_mut()) {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            *v = d[a] * *v * d[b];
        }
    }
    out
}
