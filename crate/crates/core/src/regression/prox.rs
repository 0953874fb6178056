//! Row-separable proximal operators of `(alpha/mu) f(Delta)`.

use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};
use crate::imaging::FeatureMatrix;

/// Hard threshold used by the `l2,0` proximal step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L20Threshold {
    /// `sqrt(2 alpha / mu)`, the exact minimizer of the row problem.
    #[default]
    Derived,
    /// `2 alpha / mu`, kept for compatibility with the published update.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProxMode {
    /// Group soft thresholding (`l2,1` norm).
    #[default]
    L21,
    /// Group hard thresholding (`l2,0` pseudo-norm).
    L20(L20Threshold),
    /// Keep the `tau` rows of largest norm.
    TopK { tau: usize },
}

impl fmt::Display for ProxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxMode::L21 => f.write_str("l21"),
            ProxMode::L20(L20Threshold::Derived) => f.write_str("l20"),
            ProxMode::L20(L20Threshold::Literal) => f.write_str("l20-literal"),
            ProxMode::TopK { tau } => write!(f, "topk:{tau}"),
        }
    }
}

impl ProxMode {
    /// Parses `l21`, `l20`, `l20-literal` or `topk`; `topk` takes `tau`.
    pub fn parse(name: &str, tau: Option<usize>) -> Result<Self> {
        match name {
            "l21" => Ok(ProxMode::L21),
            "l20" => Ok(ProxMode::L20(L20Threshold::Derived)),
            "l20-literal" => Ok(ProxMode::L20(L20Threshold::Literal)),
            "topk" => tau
                .map(|tau| ProxMode::TopK { tau })
                .ok_or_else(|| Error::param("prox `topk` requires tau")),
            other => Err(Error::param(format!("unknown prox `{other}`"))),
        }
    }

    /// `f(Delta)` for this penalty; the top-k constraint contributes zero.
    pub fn penalty(&self, delta: &FeatureMatrix) -> f64 {
        let norms = delta.row_norms();
        match self {
            ProxMode::L21 => norms.iter().sum(),
            ProxMode::L20(_) => norms.iter().filter(|&&v| v > 0.0).count() as f64,
            ProxMode::TopK { .. } => 0.0,
        }
    }
}

pub fn prox_rows(q: &FeatureMatrix, mode: ProxMode, alpha: f64, mu: f64) -> Result<FeatureMatrix> {
    if !(alpha > 0.0 && mu > 0.0) {
        return Err(Error::param("alpha and mu must be positive"));
    }
    let n = q.nrows();
    let norms = q.row_norms();
    let scale: Vec<f64> = match mode {
        ProxMode::L21 => {
            let t = alpha / mu;
            norms
                .iter()
                .map(|&r| if r > t { (r - t) / r } else { 0.0 })
                .collect()
        }
        ProxMode::L20(kind) => {
            let t = match kind {
                L20Threshold::Derived => (2.0 * alpha / mu).sqrt(),
                L20Threshold::Literal => 2.0 * alpha / mu,
            };
            norms
                .iter()
                .map(|&r| if r > t { 1.0 } else { 0.0 })
                .collect()
        }
        ProxMode::TopK { tau } => {
            if tau == 0 || tau > n {
                return Err(Error::param(format!("tau = {tau} must lie in [1, {n}]")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
            let mut keep = vec![0.0; n];
            for &i in &order[..tau] {
                keep[i] = 1.0;
            }
            keep
        }
    };
    let x = q.as_mat();
    Ok(FeatureMatrix::from_mat(Mat::from_fn(
        n,
        q.ncols(),
        |i, j| {
            if scale[i] == 0.0 {
                0.0
            } else {
                scale[i] * x[(i, j)]
            }
        },
    )))
}
