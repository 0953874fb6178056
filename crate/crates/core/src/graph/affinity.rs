//! Row-wise affinity construction from a squared-distance matrix.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use faer::MatRef;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const ROW_STOCHASTIC_TOL: f64 = 1e-9;
const DOUBLY_STOCHASTIC_TOL: f64 = 1e-6;
const ENTROPY_TOL: f64 = 1e-6;

/// Nonnegative square weight matrix. The structural flags are computed from
/// the stored weights, so they never disagree with the data.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity {
    weights: CsrMatrix,
    symmetric: bool,
    row_stochastic: bool,
    doubly_stochastic: bool,
}

impl SparseAffinity {
    pub fn new(weights: CsrMatrix) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::dims(format!(
                "affinity must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if let Some(&v) = weights
            .values()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::param(format!(
                "affinity weight {v} is negative or non-finite"
            )));
        }
        let rows = max_deviation_from_one(&weights.row_sums());
        let cols = max_deviation_from_one(&weights.col_sums());
        Ok(SparseAffinity {
            symmetric: weights.max_asymmetry() == 0.0,
            row_stochastic: rows <= ROW_STOCHASTIC_TOL,
            doubly_stochastic: rows.max(cols) <= DOUBLY_STOCHASTIC_TOL,
            weights,
        })
    }

    pub fn from_dense(w: MatRef<'_, f64>) -> Result<Self> {
        Self::new(CsrMatrix::from_dense(w))
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &CsrMatrix {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }

    pub fn nnz(&self) -> usize {
        self.weights.nnz()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_row_stochastic(&self) -> bool {
        self.row_stochastic
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        self.doubly_stochastic
    }

    /// Largest `|sum - 1|` over all rows and columns.
    pub fn stochastic_deviation(&self) -> f64 {
        max_deviation_from_one(&self.weights.row_sums())
            .max(max_deviation_from_one(&self.weights.col_sums()))
    }

    /// Unordered edge set `(i, j)` with `i < j` over the stored pattern.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .weights
            .iter()
            .filter(|&(i, j, v)| i != j && v > 0.0)
            .map(|(i, j, _)| (i.min(j), i.max(j)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// `(W + W^T) / 2`.
    pub fn symmetrized_mean(&self) -> SparseAffinity {
        let t = self.weights.transpose();
        let w = self
            .weights
            .linear_combination(0.5, &t, 0.5)
            .expect("transpose of a square matrix has the same shape");
        SparseAffinity::new(w).expect("average of nonnegative weights is nonnegative")
    }

    /// `max(W, W^T)` entrywise.
    pub fn symmetrized_max(&self) -> SparseAffinity {
        let t = self.weights.transpose();
        let rows = (0..self.n())
            .map(|i| {
                let (c1, v1) = self.weights.row(i);
                let (c2, v2) = t.row(i);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c1.len() + c2.len());
                let (mut a, mut b) = (0, 0);
                while a < c1.len() || b < c2.len() {
                    match (c1.get(a), c2.get(b)) {
                        (Some(&ja), Some(&jb)) if ja == jb => {
                            merged.push((ja, v1[a].max(v2[b])));
                            a += 1;
                            b += 1;
                        }
                        (Some(&ja), Some(&jb)) if ja < jb => {
                            merged.push((ja, v1[a]));
                            a += 1;
                        }
                        (Some(_), Some(&jb)) => {
                            merged.push((jb, v2[b]));
                            b += 1;
                        }
                        (Some(&ja), None) => {
                            merged.push((ja, v1[a]));
                            a += 1;
                        }
                        (None, Some(&jb)) => {
                            merged.push((jb, v2[b]));
                            b += 1;
                        }
                        (None, None) => unreachable!(),
                    }
                }
                merged
            })
            .collect();
        SparseAffinity::new(CsrMatrix::from_rows(self.n(), rows))
            .expect("max of nonnegative weights is nonnegative")
    }
}

fn max_deviation_from_one(sums: &[f64]) -> f64 {
    sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
}

/// Regularizer of the per-row weight problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AffinityMode {
    /// Weighted squared norm: sparse weights decreasing linearly in distance.
    #[default]
    L2,
    /// Negative entropy: Gibbs weights over the k nearest neighbors.
    Entropy,
}

impl FromStr for AffinityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(AffinityMode::L2),
            "entropy" => Ok(AffinityMode::Entropy),
            other => Err(Error::param(format!("unknown graph mode `{other}`"))),
        }
    }
}

impl fmt::Display for AffinityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AffinityMode::L2 => "l2",
            AffinityMode::Entropy => "entropy",
        })
    }
}

/// Row-stochastic adaptive KNN affinity together with the per-row
/// regularization strength that produced it.
#[derive(Debug, Clone)]
pub struct AdaptiveAffinity {
    pub affinity: SparseAffinity,
    /// `beta_i` of every row. `+inf` marks a degenerate row that fell back to
    /// uniform weights; `0` marks the entropy-mode limit of uniform weights
    /// over tied nearest neighbors.
    pub beta: Vec<f64>,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("a graph needs at least two vertices"));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::param(format!("k = {k} must lie in [1, {}]", n - 1)));
    }
    Ok(())
}

fn check_square(dist: MatRef<'_, f64>) -> Result<()> {
    if dist.nrows() != dist.ncols() {
        return Err(Error::dims("distance matrix must be square"));
    }
    Ok(())
}

/// Indices of the `count` smallest off-diagonal entries of row `i`, ordered by
/// `(distance, index)`.
fn nearest(dist: MatRef<'_, f64>, i: usize, count: usize) -> Vec<usize> {
    ranked(dist, i, count, |a, b| a.total_cmp(&b))
}

fn farthest(dist: MatRef<'_, f64>, i: usize, count: usize) -> Vec<usize> {
    ranked(dist, i, count, |a, b| b.total_cmp(&a))
}

fn ranked(
    dist: MatRef<'_, f64>,
    i: usize,
    count: usize,
    by: impl Fn(f64, f64) -> Ordering,
) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..dist.ncols()).filter(|&j| j != i).collect();
    let cmp = |&a: &usize, &b: &usize| by(dist[(i, a)], dist[(i, b)]).then(a.cmp(&b));
    if count < cand.len() {
        cand.select_nth_unstable_by(count - 1, cmp);
        cand.truncate(count);
    }
    cand.sort_unstable_by(cmp);
    cand
}

/// Solves the per-row weight problem: minimize `sum_j d_ij w_ij + R(w_i)` over
/// the probability simplex with zero self-weight, keeping `k` neighbors.
pub fn build_adaptive_affinity(
    dist: MatRef<'_, f64>,
    k: usize,
    mode: AffinityMode,
) -> Result<AdaptiveAffinity> {
    check_square(dist)?;
    let n = dist.nrows();
    check_k(n, k)?;
    let mut rows = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for i in 0..n {
        let take = (k + 1).min(n - 1);
        let idx = nearest(dist, i, take);
        let d: Vec<f64> = idx.iter().map(|&j| dist[(i, j)]).collect();
        let (w, b) = match mode {
            AffinityMode::L2 => l2_row(&d, k),
            AffinityMode::Entropy => entropy_row(&d[..k]),
        };
        beta.push(b);
        rows.push(
            idx.into_iter()
                .zip(w)
                .filter(|&(_, v)| v > 0.0)
                .collect::<Vec<_>>(),
        );
    }
    Ok(AdaptiveAffinity {
        affinity: SparseAffinity::new(CsrMatrix::from_rows(n, rows))?,
        beta,
    })
}

/// Closed-form simplex-constrained row for the squared-norm regularizer.
///
/// `sorted` holds ascending distances of the `k` nearest candidates, followed
/// by the `(k+1)`-th when it exists. With `d_ref` the `(k+1)`-th distance the
/// weights are `(d_ref - d_j) / (k d_ref - sum_{h<=k} d_h)` and
/// `beta = (k d_ref - sum d_h) / 2`.
pub(crate) fn l2_row(sorted: &[f64], k: usize) -> (Vec<f64>, f64) {
    if k == 1 && sorted.len() == 1 {
        return (vec![1.0], f64::INFINITY);
    }
    let near = &sorted[..k];
    let d_ref = match sorted.get(k) {
        Some(&d) => d,
        // k = N - 1: no (k+1)-th neighbor, continue the mean spacing of the k.
        None => near[k - 1] + (near[k - 1] - near[0]) / (k - 1) as f64,
    };
    let denom: f64 = near.iter().map(|&d| d_ref - d).sum();
    if !(denom > 0.0) {
        return (vec![1.0 / k as f64; k], f64::INFINITY);
    }
    let w = near.iter().map(|&d| (d_ref - d) / denom).collect();
    (w, denom / 2.0)
}

fn entropy_of(shifted: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let e: Vec<f64> = shifted.iter().map(|&s| (-s / beta).exp()).collect();
    let z: f64 = e.iter().sum();
    let p: Vec<f64> = e.into_iter().map(|v| v / z).collect();
    let h = -p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>();
    (p, h)
}

/// Gibbs weights `exp(-d_j / beta)` over the `k` nearest, with `beta` chosen by
/// bisection so the row entropy equals `ln(k) / 2`.
pub(crate) fn entropy_row(sorted: &[f64]) -> (Vec<f64>, f64) {
    let k = sorted.len();
    if k == 1 {
        return (vec![1.0], f64::INFINITY);
    }
    let target = (k as f64).ln() / 2.0;
    let shifted: Vec<f64> = sorted.iter().map(|&d| d - sorted[0]).collect();
    let spread = shifted[k - 1];
    if !(spread > 0.0) {
        return (vec![1.0 / k as f64; k], f64::INFINITY);
    }
    let ties = shifted.iter().filter(|&&s| s == 0.0).count();
    if (ties as f64).ln() >= target {
        let w = shifted
            .iter()
            .map(|&s| if s == 0.0 { 1.0 / ties as f64 } else { 0.0 })
            .collect();
        return (w, 0.0);
    }
    // Entropy increases monotonically in beta; bracket then bisect in log space.
    let mut lo = spread;
    while entropy_of(&shifted, lo).1 > target && lo > spread * 1e-300 {
        lo /= 16.0;
    }
    let mut hi = spread;
    while entropy_of(&shifted, hi).1 < target {
        hi *= 16.0;
    }
    let mut mid = (lo * hi).sqrt();
    for _ in 0..400 {
        mid = (lo * hi).sqrt();
        let h = entropy_of(&shifted, mid).1;
        if (h - target).abs() <= ENTROPY_TOL {
            break;
        }
        if h < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (entropy_of(&shifted, mid).0, mid)
}

/// K-farthest-neighbor graph: edge `(i, j)` iff `d_ij` is among the `k` largest
/// of row `i` or of row `j`; rows carry weight `1/k` before `max(W, W^T)`.
pub fn build_kfn_affinity(dist: MatRef<'_, f64>, k: usize) -> Result<SparseAffinity> {
    check_square(dist)?;
    let n = dist.nrows();
    check_k(n, k)?;
    let w = 1.0 / k as f64;
    let rows = (0..n)
        .map(|i| farthest(dist, i, k).into_iter().map(|j| (j, w)).collect())
        .collect();
    Ok(SparseAffinity::new(CsrMatrix::from_rows(n, rows))?.symmetrized_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    fn dist_from_points(xs: &[f64]) -> Mat<f64> {
        Mat::from_fn(xs.len(), xs.len(), |i, j| (xs[i] - xs[j]).powi(2))
    }

    #[test]
    fn l2_row_from_three_candidates() {
        // Oracle: minimize sum d_j w_j + beta * sum w_j^2 on the simplex with the
        // beta that activates two weights; KKT gives w = (4/7, 3/7, 0).
        let (w, beta) = l2_row(&[1.0, 2.0, 5.0], 2);
        assert!((w[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((w[1] - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(beta, 3.5);
    }

    #[test]
    fn l2_full_matrix_row() {
        // Vertex 0 at distance 1, 2, 5 from the other three.
        let d = Mat::from_fn(4, 4, |i, j| {
            let row0 = [0.0, 1.0, 2.0, 5.0];
            if i == j {
                0.0
            } else if i == 0 {
                row0[j]
            } else if j == 0 {
                row0[i]
            } else {
                10.0
            }
        });
        let a = build_adaptive_affinity(d.as_ref(), 2, AffinityMode::L2).unwrap();
        let w = &a.affinity;
        assert!((w.get(0, 1) - 4.0 / 7.0).abs() < 1e-15);
        assert!((w.get(0, 2) - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(w.get(0, 3), 0.0);
        assert!(w.is_row_stochastic());
    }

    #[test]
    fn k_equal_one_is_point_mass() {
        let d = dist_from_points(&[0.0, 1.0, 3.0, 7.0]);
        for mode in [AffinityMode::L2, AffinityMode::Entropy] {
            let a = build_adaptive_affinity(d.as_ref(), 1, mode).unwrap();
            assert_eq!(a.affinity.get(0, 1), 1.0);
            assert_eq!(a.affinity.get(2, 1), 1.0);
            assert_eq!(a.affinity.get(3, 2), 1.0);
            assert_eq!(a.affinity.nnz(), 4);
        }
    }

    #[test]
    fn equal_candidates_fall_back_to_uniform() {
        let (w, _) = entropy_row(&[2.0, 2.0, 2.0]);
        assert!(w.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let (w, beta) = l2_row(&[2.0, 2.0, 2.0, 2.0], 3);
        assert!(w.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert!(beta.is_infinite());
    }

    #[test]
    fn entropy_row_hits_target_entropy() {
        let d = [0.3, 0.5, 0.6, 1.1, 1.7, 2.0];
        let (w, beta) = entropy_row(&d);
        let h: f64 = -w.iter().map(|v| v * v.ln()).sum::<f64>();
        assert!((h - (6f64).ln() / 2.0).abs() <= 1e-6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Gibbs form with the reported beta.
        let z: f64 = d.iter().map(|x| (-x / beta).exp()).sum();
        for (wi, di) in w.iter().zip(d) {
            assert!((wi - (-di / beta).exp() / z).abs() < 1e-9);
        }
    }

    #[test]
    fn k_equal_n_minus_one_uses_every_neighbor() {
        let d = dist_from_points(&[0.0, 1.0, 2.5, 4.0]);
        let a = build_adaptive_affinity(d.as_ref(), 3, AffinityMode::L2).unwrap();
        for i in 0..4 {
            assert_eq!(a.affinity.weights().row(i).0.len(), 3);
        }
        assert!(a.affinity.is_row_stochastic());
    }

    #[test]
    fn k_out_of_range() {
        let d = dist_from_points(&[0.0, 1.0, 2.0]);
        assert!(build_adaptive_affinity(d.as_ref(), 0, AffinityMode::L2).is_err());
        assert!(build_adaptive_affinity(d.as_ref(), 3, AffinityMode::L2).is_err());
        assert!(build_kfn_affinity(d.as_ref(), 3).is_err());
    }

    #[test]
    fn kfn_collinear_three_points() {
        let d = dist_from_points(&[0.0, 1.0, 10.0]);
        let w = build_kfn_affinity(d.as_ref(), 1).unwrap();
        assert_eq!(w.edges(), vec![(0, 2), (1, 2)]);
        assert!(w.is_symmetric());
    }

    #[test]
    fn kfn_complete_when_k_is_n_minus_one() {
        let d = dist_from_points(&[0.0, 1.0, 3.0, 6.0, 10.0]);
        let w = build_kfn_affinity(d.as_ref(), 4).unwrap();
        assert_eq!(w.edges().len(), 10);
        assert_eq!(w.get(2, 2), 0.0);
    }

    #[test]
    fn symmetrizations() {
        let w = SparseAffinity::new(
            CsrMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 0.5)]).unwrap(),
        )
        .unwrap();
        assert!(!w.is_symmetric());
        assert_eq!(w.symmetrized_mean().get(0, 1), 0.75);
        assert_eq!(w.symmetrized_max().get(1, 0), 1.0);
        assert!(w.symmetrized_max().is_symmetric());
    }

    #[test]
    fn negative_weight_rejected() {
        let m = CsrMatrix::from_triplets(2, 2, [(0, 1, -1.0)]).unwrap();
        assert!(SparseAffinity::new(m).is_err());
    }
}
