use faer::Mat;

use crate::error::{Error, Result};
use crate::graph::GraphOperators;

/// Dense `H(L) = sum_m h_m L^m` for `m = 1..=coeffs.len()`.
///
/// Powers are accumulated as sparse-times-dense products and the result is
/// symmetrized entrywise. With nonnegative coefficients and a PSD `L`, `H` is
/// PSD and annihilates the constant vector.
pub fn build_penalty(graph: &GraphOperators, coeffs: &[f64]) -> Result<Mat<f64>> {
    if coeffs.is_empty() {
        return Err(Error::param(
            "penalty filter needs at least one coefficient",
        ));
    }
    if let Some(h) = coeffs.iter().find(|h| !h.is_finite() || **h < 0.0) {
        return Err(Error::param(format!(
            "penalty coefficient {h} must be finite and nonnegative"
        )));
    }
    let l = &graph.laplacian;
    let n = l.nrows();
    let mut power = l.to_dense();
    let mut h = &power * faer::Scale(coeffs[0]);
    for &c in &coeffs[1..] {
        power = l.mul_dense(power.as_ref());
        if c != 0.0 {
            h += &power * faer::Scale(c);
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}
