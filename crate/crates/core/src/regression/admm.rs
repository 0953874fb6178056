//! ADMM for `min Tr(Z^T H Z) + alpha f(Delta)  s.t.  Y = Z + Delta`.

use std::fmt::Write as _;

use faer::{Mat, MatRef};

use super::{build_penalty, prox_rows, LinearSolver, ProxMode, ZSystem};
use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::imaging::FeatureMatrix;

/// Relative feasibility `||Y - Z - Delta||_F / ||Y||_F` below which a run is
/// reported as converged.
pub const FEASIBILITY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub mu: f64,
    pub xi0: f64,
    pub max_iter: usize,
    pub prox: ProxMode,
    /// `h_1..h_M` of the penalty filter `H(L)`.
    pub filter_coeffs: Vec<f64>,
    pub linear_solver: LinearSolver,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 0.05,
            mu: 0.1,
            xi0: 1e-4,
            max_iter: 100,
            prox: ProxMode::L21,
            filter_coeffs: vec![1.0, 1.0, 1.0],
            linear_solver: LinearSolver::Direct,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} = {v} must be positive")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("mu", self.mu)?;
        positive("xi0", self.xi0)?;
        if self.max_iter == 0 {
            return Err(Error::param("max_iter must be at least 1"));
        }
        if let ProxMode::TopK { tau } = self.prox {
            if tau == 0 || tau > n {
                return Err(Error::param(format!("tau = {tau} must lie in [1, {n}]")));
            }
        }
        if self.filter_coeffs.is_empty() {
            return Err(Error::param("filter_coeffs must not be empty"));
        }
        if self
            .filter_coeffs
            .iter()
            .any(|h| !(*h >= 0.0) || !h.is_finite())
        {
            return Err(Error::param(
                "filter coefficients must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RegressionState {
    pub z: FeatureMatrix,
    pub delta: FeatureMatrix,
    pub r: FeatureMatrix,
    pub iter: usize,
    /// `||Delta^{t+1} - Delta^t||_F / ||Delta^t||_F`; `+inf` while `Delta^t = 0`.
    pub xi_history: Vec<f64>,
    /// `||Y - Z^{t+1} - Delta^{t+1}||_F`.
    pub feas_history: Vec<f64>,
    /// `Tr(Z^T H Z) + alpha f(Delta)` after each iteration.
    pub objective_history: Vec<f64>,
    /// The relative-change test fired before `max_iter`.
    pub stopped_early: bool,
    /// Final relative feasibility is within [`FEASIBILITY_TOL`].
    pub converged: bool,
}

impl RegressionState {
    /// Per-iteration log, `iter,xi,feasibility,objective`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iter,xi,feasibility,objective\n");
        for t in 0..self.iter {
            writeln!(
                s,
                "{},{:e},{:e},{:e}",
                t + 1,
                self.xi_history[t],
                self.feas_history[t],
                self.objective_history[t]
            )
            .unwrap();
        }
        s
    }
}

/// Builds `H(L)` from `cfg.filter_coeffs` and runs the solver.
pub fn solve_decomposition(
    y: &FeatureMatrix,
    graph: &GraphOperators,
    cfg: &SolverConfig,
) -> Result<RegressionState> {
    if y.nrows() != graph.n() {
        return Err(Error::dims(format!(
            "Y has {} rows, graph has {} vertices",
            y.nrows(),
            graph.n()
        )));
    }
    cfg.validate(graph.n())?;
    let h = build_penalty(graph, &cfg.filter_coeffs)?;
    solve_with_penalty(y, h.as_ref(), cfg)
}

fn quadratic_form(h: MatRef<'_, f64>, z: MatRef<'_, f64>) -> f64 {
    let hz = h * z;
    let mut total = 0.0;
    for j in 0..z.ncols() {
        for i in 0..z.nrows() {
            total += z[(i, j)] * hz[(i, j)];
        }
    }
    total
}

/// ADMM with a precomputed penalty matrix `H`.
pub fn solve_with_penalty(
    y: &FeatureMatrix,
    h: MatRef<'_, f64>,
    cfg: &SolverConfig,
) -> Result<RegressionState> {
    let (n, m) = (y.nrows(), y.ncols());
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::dims(
            "penalty size differs from the number of rows of Y",
        ));
    }
    cfg.validate(n)?;
    let system = ZSystem::new(h, cfg.mu, cfg.linear_solver)?;
    let y_norm = y.frobenius_norm();

    let mut z = FeatureMatrix::zeros(n, m);
    let mut delta = FeatureMatrix::zeros(n, m);
    let mut r = FeatureMatrix::zeros(n, m);
    let mut xi_history = Vec::new();
    let mut feas_history = Vec::new();
    let mut objective_history = Vec::new();
    let mut stopped_early = false;

    for _ in 0..cfg.max_iter {
        z = system.update(y, &delta, &r)?;
        let q = y.as_mat() - z.as_mat() + r.as_mat() * faer::Scale(1.0 / cfg.mu);
        let next = prox_rows(&FeatureMatrix::new(q)?, cfg.prox, cfg.alpha, cfg.mu)?;
        let residual: Mat<f64> = y.as_mat() - z.as_mat() - next.as_mat();
        r = FeatureMatrix::new(r.as_mat() + &residual * faer::Scale(cfg.mu))?;

        let prev_norm = delta.frobenius_norm();
        let xi = if prev_norm == 0.0 {
            f64::INFINITY
        } else {
            (next.as_mat() - delta.as_mat()).norm_l2() / prev_norm
        };
        delta = next;
        xi_history.push(xi);
        feas_history.push(residual.norm_l2());
        objective_history
            .push(quadratic_form(h, z.as_mat()) + cfg.alpha * cfg.prox.penalty(&delta));
        if xi < cfg.xi0 {
            stopped_early = true;
            break;
        }
    }

    let feas = *feas_history.last().expect("max_iter >= 1");
    Ok(RegressionState {
        z,
        delta,
        r,
        iter: xi_history.len(),
        xi_history,
        feas_history,
        objective_history,
        stopped_early,
        converged: feas <= FEASIBILITY_TOL * y_norm,
    })
}
