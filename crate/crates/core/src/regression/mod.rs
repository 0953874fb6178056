//! Signal-decomposition regression `Y = Z + Delta` with a spectral penalty on
//! `Z` and a row-sparse penalty on `Delta`, solved by ADMM.

mod admm;
mod penalty;
mod prox;
mod zsolve;

pub use admm::{
    solve_decomposition, solve_with_penalty, RegressionState, SolverConfig, FEASIBILITY_TOL,
};
pub use penalty::build_penalty;
pub use prox::{prox_rows, L20Threshold, ProxMode};
pub use zsolve::{update_z, LinearSolver, ZSystem, PCG_TOLERANCE};
