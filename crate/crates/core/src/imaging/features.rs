use faer::{Mat, MatRef};

use super::{ImageRaster, PixelGrid, SuperpixelMap};
use crate::error::{Error, Result};

/// Graph signal: one feature row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Mat<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Mat<f64>) -> Result<Self> {
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFinite("feature matrix"));
                }
            }
        }
        Ok(FeatureMatrix { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::dims("ragged feature rows"));
        }
        Self::new(Mat::from_fn(rows.len(), m, |i, j| rows[i][j]))
    }

    pub fn from_fn(n: usize, m: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(Mat::from_fn(n, m, f))
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        FeatureMatrix {
            values: Mat::zeros(n, m),
        }
    }

    /// Wraps a matrix produced by finite arithmetic on validated inputs.
    pub(crate) fn from_mat(values: Mat<f64>) -> Self {
        debug_assert!(FeatureMatrix::new(values.clone()).is_ok());
        FeatureMatrix { values }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols()).map(|j| self.values[(i, j)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.values[(i, j)]).collect()
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.values.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.values
    }

    /// Euclidean norm of every row.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.nrows())
            .map(|i| {
                (0..self.ncols())
                    .map(|j| self.values[(i, j)].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.norm_l2()
    }

    /// Rows permuted so that output row `i` is input row `order[i]`.
    pub fn select_rows(&self, order: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: Mat::from_fn(order.len(), self.ncols(), |i, j| self.values[(order[i], j)]),
        }
    }
}

/// Per-region (mean, median, variance) for every channel, so `M = 3 * channels`.
///
/// Variance uses the population convention. With `standardize`, each column is
/// z-scored with population statistics; constant columns become zero.
pub fn extract_features(
    img: &ImageRaster,
    map: &SuperpixelMap,
    standardize: bool,
) -> Result<FeatureMatrix> {
    if img.height() != map.height() || img.width() != map.width() {
        return Err(Error::dims(format!(
            "image is {}x{} but the superpixel map is {}x{}",
            img.height(),
            img.width(),
            map.height(),
            map.width()
        )));
    }
    let nc = img.channels();
    let mut out = Mat::<f64>::zeros(map.n_regions(), 3 * nc);
    let mut buf = Vec::new();
    for (i, region) in map.regions().enumerate() {
        for c in 0..nc {
            buf.clear();
            buf.extend(region.iter().map(|&p| img.pixel(p)[c]));
            let (mean, median, var) = region_stats(&mut buf);
            out[(i, 3 * c)] = mean;
            out[(i, 3 * c + 1)] = median;
            out[(i, 3 * c + 2)] = var;
        }
    }
    if standardize {
        standardize_columns(&mut out);
    }
    Ok(FeatureMatrix::from_mat(out))
}

fn region_stats(values: &mut [f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    };
    (mean, median, var)
}

pub(crate) fn standardize_columns(m: &mut Mat<f64>) {
    let n = m.nrows() as f64;
    for j in 0..m.ncols() {
        let mean = (0..m.nrows()).map(|i| m[(i, j)]).sum::<f64>() / n;
        let var = (0..m.nrows())
            .map(|i| (m[(i, j)] - mean).powi(2))
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        let scale = mean.abs().max(1.0);
        for i in 0..m.nrows() {
            m[(i, j)] = if sd > 1e-12 * scale {
                (m[(i, j)] - mean) / sd
            } else {
                0.0
            };
        }
    }
}

/// Paints each region with its vertex value.
pub fn reproject(values: &[f64], map: &SuperpixelMap) -> Result<PixelGrid> {
    if values.len() != map.n_regions() {
        return Err(Error::dims(format!(
            "{} values for {} regions",
            values.len(),
            map.n_regions()
        )));
    }
    let data = map.labels().iter().map(|&l| values[l]).collect();
    PixelGrid::new(map.height(), map.width(), data)
}
