//! Graph filters and polynomial filter design.

use std::f64::consts::PI;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use super::SpectralBasis;
use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::imaging::FeatureMatrix;

/// Ridge added to the Vandermonde normal equations when they are singular.
pub const VANDERMONDE_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// `H(L) = h_0 I + sum_{m=1..M} h_m L^m`; `coeffs` holds `h_1..h_M`.
    Polynomial { constant: f64, coeffs: Vec<f64> },
    /// Keeps spectral rows `k >= cutoff` (1-based, descending eigenvalues).
    IdealLow { cutoff: usize },
    /// Keeps spectral rows `k < cutoff`.
    IdealHigh { cutoff: usize },
}

impl FilterSpec {
    /// Polynomial without a constant term.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        FilterSpec::Polynomial {
            constant: 0.0,
            coeffs,
        }
    }

    /// Frequency response at 1-based spectral index `k` with eigenvalue `lambda`.
    pub fn response(&self, k: usize, lambda: f64) -> f64 {
        match self {
            FilterSpec::Polynomial { constant, coeffs } => eval_poly(*constant, coeffs, lambda),
            FilterSpec::IdealLow { cutoff } => f64::from(u8::from(k >= *cutoff)),
            FilterSpec::IdealHigh { cutoff } => f64::from(u8::from(k < *cutoff)),
        }
    }
}

fn eval_poly(constant: f64, coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &h| (acc + h) * x) + constant
}

/// `sum_m h_m L^m f` by repeated sparse products; `L^m` is never formed.
pub fn apply_poly_filter(
    graph: &GraphOperators,
    spec: &FilterSpec,
    f: &FeatureMatrix,
) -> Result<FeatureMatrix> {
    let FilterSpec::Polynomial { constant, coeffs } = spec else {
        return Err(Error::param(
            "vertex-domain application needs a polynomial filter",
        ));
    };
    if f.nrows() != graph.n() {
        return Err(Error::dims("signal rows differ from graph size"));
    }
    let mut out = f.as_mat() * faer::Scale(*constant);
    let mut power = f.as_mat().to_owned();
    for &h in coeffs {
        power = graph.laplacian.mul_dense(power.as_ref());
        out += &power * faer::Scale(h);
    }
    Ok(FeatureMatrix::from_mat(out))
}

/// `U H(Lambda) U^T f` for any filter kind.
pub fn apply_filter_spectral(
    basis: &SpectralBasis,
    spec: &FilterSpec,
    f: &FeatureMatrix,
) -> Result<FeatureMatrix> {
    if f.nrows() != basis.n() {
        return Err(Error::dims("signal rows differ from basis size"));
    }
    let u = basis.eigenvectors();
    let mut coeffs = u.transpose() * f.as_mat();
    for (k, &lambda) in basis.eigenvalues().iter().enumerate() {
        let g = spec.response(k + 1, lambda);
        for j in 0..coeffs.ncols() {
            coeffs[(k, j)] *= g;
        }
    }
    Ok(FeatureMatrix::from_mat(u * coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMethod {
    LeastSquares,
    Chebyshev,
}

impl FromStr for DesignMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least_squares" | "ls" => Ok(DesignMethod::LeastSquares),
            "chebyshev" => Ok(DesignMethod::Chebyshev),
            other => Err(Error::param(format!("unknown design method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterDesign {
    pub spec: FilterSpec,
    /// `max_k |H(lambda_k) - psi(lambda_k)|` over the supplied eigenvalues.
    pub max_error: f64,
}

/// Fits a degree-`degree` polynomial in `lambda` to the target response.
///
/// Least squares solves the Vandermonde normal equations over the supplied
/// eigenvalues, with the constant column only when `with_constant` is set.
/// Chebyshev truncates the Chebyshev series of `target` on `[0, lambda_max]`
/// (the constant term is always free) and converts it to monomials.
pub fn design_filter(
    eigenvalues: &[f64],
    target: impl Fn(f64) -> f64,
    degree: usize,
    method: DesignMethod,
    with_constant: bool,
) -> Result<FilterDesign> {
    if degree == 0 {
        return Err(Error::param("filter degree must be at least 1"));
    }
    if eigenvalues.is_empty() {
        return Err(Error::Empty("eigenvalue grid"));
    }
    let (constant, coeffs) = match method {
        DesignMethod::LeastSquares => least_squares(eigenvalues, &target, degree, with_constant)?,
        DesignMethod::Chebyshev => {
            let lambda_max = eigenvalues
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if !(lambda_max > 0.0) {
                return Err(Error::param(
                    "Chebyshev design needs a positive largest eigenvalue",
                ));
            }
            chebyshev(lambda_max, &target, degree)
        }
    };
    let max_error = eigenvalues
        .iter()
        .map(|&l| (eval_poly(constant, &coeffs, l) - target(l)).abs())
        .fold(0.0, f64::max);
    Ok(FilterDesign {
        spec: FilterSpec::Polynomial { constant, coeffs },
        max_error,
    })
}

fn least_squares(
    eigenvalues: &[f64],
    target: &impl Fn(f64) -> f64,
    degree: usize,
    with_constant: bool,
) -> Result<(f64, Vec<f64>)> {
    let first = usize::from(!with_constant);
    let p = degree + 1 - first;
    let theta = Mat::from_fn(eigenvalues.len(), p, |k, c| {
        eigenvalues[k].powi((c + first) as i32)
    });
    let psi = Mat::from_fn(eigenvalues.len(), 1, |k, _| target(eigenvalues[k]));
    let gram = theta.transpose() * &theta;
    let mut rhs = theta.transpose() * &psi;
    match gram.llt(Side::Lower) {
        Ok(llt) => llt.solve_in_place(rhs.as_mut()),
        Err(_) => {
            let ridged = &gram + Mat::<f64>::identity(p, p) * faer::Scale(VANDERMONDE_RIDGE);
            let llt = ridged
                .llt(Side::Lower)
                .map_err(|e| Error::Linalg(format!("Vandermonde system: {e:?}")))?;
            llt.solve_in_place(rhs.as_mut());
        }
    }
    let h: Vec<f64> = (0..p).map(|i| rhs[(i, 0)]).collect();
    if with_constant {
        Ok((h[0], h[1..].to_vec()))
    } else {
        Ok((0.0, h))
    }
}

fn chebyshev(lambda_max: f64, target: &impl Fn(f64) -> f64, degree: usize) -> (f64, Vec<f64>) {
    let nodes = (8 * (degree + 1)).max(256);
    // Series coefficients by Gauss-Chebyshev quadrature.
    let mut c = vec![0.0; degree + 1];
    for q in 0..nodes {
        let theta = PI * (q as f64 + 0.5) / nodes as f64;
        let fx = target((theta.cos() + 1.0) * 0.5 * lambda_max);
        for (j, cj) in c.iter_mut().enumerate() {
            *cj += fx * (j as f64 * theta).cos();
        }
    }
    for cj in &mut c {
        *cj *= 2.0 / nodes as f64;
    }
    c[0] *= 0.5;

    // Monomial coefficients in t of sum_j c_j T_j(t).
    let mut in_t = vec![0.0; degree + 1];
    let mut t_prev = vec![1.0];
    let mut t_cur = vec![0.0, 1.0];
    in_t[0] += c[0];
    for (j, &cj) in c.iter().enumerate().skip(1) {
        if j > 1 {
            let mut next = vec![0.0; j + 1];
            for (i, &v) in t_cur.iter().enumerate() {
                next[i + 1] += 2.0 * v;
            }
            for (i, &v) in t_prev.iter().enumerate() {
                next[i] -= v;
            }
            t_prev = std::mem::replace(&mut t_cur, next);
        }
        for (i, &v) in t_cur.iter().enumerate() {
            in_t[i] += cj * v;
        }
    }

    // Substitute t = a*lambda + b.
    let a = 2.0 / lambda_max;
    let b: f64 = -1.0;
    let mut in_lambda = vec![0.0; degree + 1];
    for (i, &pi) in in_t.iter().enumerate() {
        // (a*lambda + b)^i = sum_r C(i, r) a^r b^(i-r) lambda^r
        let mut binom = 1.0;
        for r in 0..=i {
            in_lambda[r] += pi * binom * a.powi(r as i32) * b.powi((i - r) as i32);
            binom = binom * (i - r) as f64 / (r + 1) as f64;
        }
    }
    (in_lambda[0], in_lambda[1..].to_vec())
}
