use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::imaging::{reproject, FeatureMatrix, PixelGrid, SuperpixelMap};

/// Change magnitude per vertex and painted back onto the pixel grid.
#[derive(Debug, Clone)]
pub struct DifferenceImage {
    pub per_vertex: Vec<f64>,
    pub per_pixel: PixelGrid,
}

impl DifferenceImage {
    pub fn from_vertex_values(per_vertex: Vec<f64>, map: &SuperpixelMap) -> Result<Self> {
        if per_vertex.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::param(
                "difference values must be finite and nonnegative",
            ));
        }
        let per_pixel = reproject(&per_vertex, map)?;
        Ok(DifferenceImage {
            per_vertex,
            per_pixel,
        })
    }
}

/// `DI_i = ||Delta_i||_2`, constant over the pixels of region `i`.
pub fn difference_image(delta: &FeatureMatrix, map: &SuperpixelMap) -> Result<DifferenceImage> {
    if delta.nrows() != map.n_regions() {
        return Err(Error::dims(format!(
            "Delta has {} rows for {} regions",
            delta.nrows(),
            map.n_regions()
        )));
    }
    DifferenceImage::from_vertex_values(delta.row_norms(), map)
}

/// Shift operator compared by the vertex-domain baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VdfShift {
    /// `L = I - W^sym`.
    #[default]
    Laplacian,
    /// `W^sym`, standing in for the averaging operator.
    Average,
}

impl FromStr for VdfShift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(VdfShift::Laplacian),
            "average" => Ok(VdfShift::Average),
            other => Err(Error::param(format!("unknown VDF shift `{other}`"))),
        }
    }
}

impl fmt::Display for VdfShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VdfShift::Laplacian => "laplacian",
            VdfShift::Average => "average",
        })
    }
}

/// Row norms of `(S_1 - S_2) Y`: the same signal filtered on both graphs.
pub fn vdf_difference(
    y: &FeatureMatrix,
    g1: &GraphOperators,
    g2: &GraphOperators,
    shift: VdfShift,
) -> Result<Vec<f64>> {
    if g1.n() != g2.n() || y.nrows() != g1.n() {
        return Err(Error::dims(format!(
            "graphs have {} and {} vertices, signal has {} rows",
            g1.n(),
            g2.n(),
            y.nrows()
        )));
    }
    let (s1, s2) = match shift {
        VdfShift::Laplacian => (&g1.laplacian, &g2.laplacian),
        VdfShift::Average => (g1.affinity.weights(), g2.affinity.weights()),
    };
    let diff = s1.linear_combination(1.0, s2, -1.0)?;
    let d = FeatureMatrix::from_mat(diff.mul_dense(y.as_mat()));
    Ok(d.row_norms())
}
