use faer::Mat;

use crate::error::{Error, Result};
use crate::imaging::FeatureMatrix;

/// Squared Euclidean distances between feature rows. The diagonal is exactly
/// zero and the upper triangle is mirrored, so the result is exactly symmetric.
pub fn pairwise_sq_distances(feat: &FeatureMatrix) -> Result<Mat<f64>> {
    let n = feat.nrows();
    if n < 2 {
        return Err(Error::param("need at least two feature rows"));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| feat.row(i)).collect();
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features"));
    }
    let mut d = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    Ok(d)
}
