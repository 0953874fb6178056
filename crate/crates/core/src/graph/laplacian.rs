use super::SparseAffinity;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Shift operators of a balanced graph: `W^sym` and `L = I - W^sym`.
#[derive(Debug, Clone)]
pub struct GraphOperators {
    pub affinity: SparseAffinity,
    pub laplacian: CsrMatrix,
    /// Row sums of `W^sym`; all one up to the balancing tolerance.
    pub degree: Vec<f64>,
}

impl GraphOperators {
    pub fn n(&self) -> usize {
        self.affinity.n()
    }
}

pub fn laplacian_from_affinity(wsym: &SparseAffinity) -> Result<GraphOperators> {
    if !wsym.is_symmetric() {
        return Err(Error::Asymmetric(wsym.weights().max_asymmetry()));
    }
    if !wsym.is_doubly_stochastic() {
        return Err(Error::NotDoublyStochastic(wsym.stochastic_deviation()));
    }
    let n = wsym.n();
    let laplacian = CsrMatrix::identity(n).linear_combination(1.0, wsym.weights(), -1.0)?;
    Ok(GraphOperators {
        affinity: wsym.clone(),
        laplacian,
        degree: wsym.weights().row_sums(),
    })
}
