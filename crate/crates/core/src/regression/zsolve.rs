//! The Z-subproblem `(2H + mu I) Z = mu Y - mu Delta + R`.

use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::imaging::FeatureMatrix;

pub const PCG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Cholesky factorization computed once per solver run.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradient per column.
    Iterative,
}

impl FromStr for LinearSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(LinearSolver::Direct),
            "iterative" | "pcg" => Ok(LinearSolver::Iterative),
            other => Err(Error::param(format!("unknown linear solver `{other}`"))),
        }
    }
}

impl fmt::Display for LinearSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearSolver::Direct => "direct",
            LinearSolver::Iterative => "iterative",
        })
    }
}

enum Backend {
    Direct(Llt<f64>),
    Iterative { diag_inv: Vec<f64> },
}

/// Prepared system matrix `A = 2H + mu I`.
pub struct ZSystem {
    a: Mat<f64>,
    mu: f64,
    backend: Backend,
}

impl fmt::Debug for ZSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZSystem")
            .field("n", &self.a.nrows())
            .field("mu", &self.mu)
            .finish_non_exhaustive()
    }
}

impl ZSystem {
    pub fn new(h: MatRef<'_, f64>, mu: f64, solver: LinearSolver) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::param(format!("mu = {mu} must be positive")));
        }
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::dims("penalty matrix must be square"));
        }
        let mut a = h * faer::Scale(2.0);
        for i in 0..n {
            a[(i, i)] += mu;
        }
        let backend = match solver {
            LinearSolver::Direct => Backend::Direct(
                a.llt(Side::Lower)
                    .map_err(|e| Error::Linalg(format!("Cholesky of 2H + mu I: {e:?}")))?,
            ),
            LinearSolver::Iterative => Backend::Iterative {
                diag_inv: (0..n).map(|i| 1.0 / a[(i, i)]).collect(),
            },
        };
        Ok(ZSystem { a, mu, backend })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }

    pub fn solve(&self, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
        if rhs.nrows() != self.a.nrows() {
            return Err(Error::dims("right-hand side rows differ from system size"));
        }
        for j in 0..rhs.ncols() {
            for i in 0..rhs.nrows() {
                if !rhs[(i, j)].is_finite() {
                    return Err(Error::NonFinite("Z-subproblem right-hand side"));
                }
            }
        }
        match &self.backend {
            Backend::Direct(llt) => {
                let mut x = rhs.to_owned();
                llt.solve_in_place(x.as_mut());
                Ok(x)
            }
            Backend::Iterative { diag_inv } => {
                let mut x = Mat::<f64>::zeros(rhs.nrows(), rhs.ncols());
                for j in 0..rhs.ncols() {
                    let b: Vec<f64> = (0..rhs.nrows()).map(|i| rhs[(i, j)]).collect();
                    let sol = pcg(self.a.as_ref(), diag_inv, &b)?;
                    for (i, v) in sol.into_iter().enumerate() {
                        x[(i, j)] = v;
                    }
                }
                Ok(x)
            }
        }
    }

    /// `Z = A^{-1} (mu Y - mu Delta + R)`.
    pub fn update(
        &self,
        y: &FeatureMatrix,
        delta: &FeatureMatrix,
        r: &FeatureMatrix,
    ) -> Result<FeatureMatrix> {
        if y.nrows() != delta.nrows()
            || y.nrows() != r.nrows()
            || y.ncols() != delta.ncols()
            || y.ncols() != r.ncols()
        {
            return Err(Error::dims("Y, Delta and R must share a shape"));
        }
        let rhs = (y.as_mat() - delta.as_mat()) * faer::Scale(self.mu) + r.as_mat();
        FeatureMatrix::new(self.solve(rhs.as_ref())?)
    }
}

/// One-shot Z update that factors `2H + mu I` on every call.
pub fn update_z(
    h: MatRef<'_, f64>,
    y: &FeatureMatrix,
    delta: &FeatureMatrix,
    r: &FeatureMatrix,
    mu: f64,
    solver: LinearSolver,
) -> Result<FeatureMatrix> {
    ZSystem::new(h, mu, solver)?.update(y, delta, r)
}

fn dense_matvec(a: MatRef<'_, f64>, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * xj;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg(a: MatRef<'_, f64>, diag_inv: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag_inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..(10 * n).max(100) {
        dense_matvec(a, &p, &mut ap);
        let step = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if dot(&r, &r).sqrt() <= PCG_TOLERANCE * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * diag_inv[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Linalg(
        "conjugate gradient did not reach its tolerance".into(),
    ))
}
