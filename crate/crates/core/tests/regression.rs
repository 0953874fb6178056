use graphcd::faer::{mat, Mat};
use graphcd::graph::{build_graph, AffinityMode};
use graphcd::imaging::FeatureMatrix;
use graphcd::regression::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn inverse3(a: &Mat<f64>) -> [[f64; 3]; 3] {
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        a[(r0, c0)] * a[(r1, c1)] - a[(r0, c1)] * a[(r1, c0)]
    };
    let det = a[(0, 0)] * c(0, 0) + a[(0, 1)] * c(0, 1) + a[(0, 2)] * c(0, 2);
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = c(j, i) / det;
        }
    }
    inv
}

#[test]
fn single_sweep_matches_hand_updates() {
    let h = mat![[0.4, -0.3, -0.1], [-0.3, 0.5, -0.2], [-0.1, -0.2, 0.3]];
    let y = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 2.0], vec![-1.0, 3.0]]).unwrap();
    let cfg = SolverConfig {
        alpha: 0.05,
        mu: 0.1,
        max_iter: 1,
        ..Default::default()
    };
    let state = solve_with_penalty(&y, h.as_ref(), &cfg).unwrap();

    let mut a = h.clone() * faer::Scale(2.0);
    for i in 0..3 {
        a[(i, i)] += cfg.mu;
    }
    let inv = inverse3(&a);
    let t = cfg.alpha / cfg.mu;
    for i in 0..3 {
        let z: Vec<f64> = (0..2)
            .map(|c| (0..3).map(|k| inv[i][k] * cfg.mu * y.get(k, c)).sum())
            .collect();
        let q: Vec<f64> = (0..2).map(|c| y.get(i, c) - z[c]).collect();
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let shrink = if norm > t { (norm - t) / norm } else { 0.0 };
        for c in 0..2 {
            let d = shrink * q[c];
            let r = cfg.mu * (y.get(i, c) - z[c] - d);
            assert!((state.z.get(i, c) - z[c]).abs() < 1e-10);
            assert!((state.delta.get(i, c) - d).abs() < 1e-10);
            assert!((state.r.get(i, c) - r).abs() < 1e-10);
        }
    }
    assert_eq!(state.iter, 1);
    assert_eq!(state.xi_history, vec![f64::INFINITY]);
}

#[test]
fn huge_alpha_keeps_delta_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = FeatureMatrix::from_fn(50, 3, |_, _| rng.random::<f64>()).unwrap();
    let g = build_graph(&x, 8, AffinityMode::L2).unwrap();
    let y = FeatureMatrix::from_fn(50, 2, |_, _| rng.random::<f64>()).unwrap();
    let cfg = SolverConfig {
        alpha: 1e6,
        mu: 10.0,
        max_iter: 300,
        ..Default::default()
    };
    let s = solve_decomposition(&y, &g, &cfg).unwrap();
    assert_eq!(s.delta.frobenius_norm(), 0.0);
    assert!((s.z.as_mat() - y.as_mat()).norm_l2() <= 1e-6 * y.frobenius_norm());
    assert!(s.converged);
}

struct Planted {
    graph: graphcd::graph::GraphOperators,
    y: FeatureMatrix,
    support: Vec<usize>,
}

/// Smooth `Z* = sin(3 X)` on the KNN graph of `X`, plus rows of norm ~1 on
/// 10% of the vertices and noise of scale 0.02.
fn planted(seed: u64, n: usize) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = FeatureMatrix::from_fn(n, 3, |_, _| rng.random::<f64>()).unwrap();
    let graph = build_graph(&x, 10, AffinityMode::L2).unwrap();
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut support: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.1).collect();
    support.sort_unstable();
    let mut y = Mat::from_fn(n, 3, |i, j| {
        (3.0 * x.get(i, j)).sin() + noise.sample(&mut rng)
    });
    for &i in &support {
        let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..3 {
            y[(i, j)] += dir[j] / norm;
        }
    }
    Planted {
        graph,
        y: FeatureMatrix::new(y).unwrap(),
        support,
    }
}

#[test]
fn planted_support_is_recovered() {
    let p = planted(7, 300);
    let s = solve_decomposition(&p.y, &p.graph, &SolverConfig::default()).unwrap();
    let norms = s.delta.row_norms();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let top = &order[..p.support.len()];
    let hits = top.iter().filter(|i| p.support.contains(i)).count();
    assert!(
        hits as f64 >= 0.9 * p.support.len() as f64,
        "{hits}/{}",
        p.support.len()
    );
    assert!(s.feas_history.last().unwrap() <= &s.feas_history[0]);
}

#[test]
fn objective_not_worse_than_trivial_point() {
    let p = planted(8, 200);
    let cfg = SolverConfig {
        max_iter: 300,
        ..Default::default()
    };
    let h = build_penalty(&p.graph, &cfg.filter_coeffs).unwrap();
    let s = solve_with_penalty(&p.y, h.as_ref(), &cfg).unwrap();
    assert!(s.converged);
    let quad = |z: &FeatureMatrix| {
        let hz = &h * z.as_mat();
        (0..z.nrows())
            .flat_map(|i| (0..z.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| z.get(i, j) * hz[(i, j)])
            .sum::<f64>()
    };
    let final_obj = quad(&s.z) + cfg.alpha * s.delta.row_norms().iter().sum::<f64>();
    assert!(final_obj <= quad(&p.y) + 1e-9);
    assert!(s.trace_csv().starts_with("iter,xi,feasibility,objective\n"));
}

#[test]
fn direct_mode_is_bitwise_deterministic() {
    let p = planted(9, 150);
    let a = solve_decomposition(&p.y, &p.graph, &SolverConfig::default()).unwrap();
    let b = solve_decomposition(&p.y, &p.graph, &SolverConfig::default()).unwrap();
    assert_eq!(a.z.as_mat(), b.z.as_mat());
    assert_eq!(a.delta.as_mat(), b.delta.as_mat());
    assert_eq!(a.xi_history, b.xi_history);
}

#[test]
fn iterative_mode_tracks_direct_mode() {
    let p = planted(10, 120);
    let direct = solve_decomposition(&p.y, &p.graph, &SolverConfig::default()).unwrap();
    let cfg = SolverConfig {
        linear_solver: LinearSolver::Iterative,
        ..Default::default()
    };
    let pcg = solve_decomposition(&p.y, &p.graph, &cfg).unwrap();
    assert!((direct.delta.as_mat() - pcg.delta.as_mat()).norm_max() < 1e-5);
}

#[test]
fn topk_output_is_row_sparse() {
    let p = planted(11, 100);
    let cfg = SolverConfig {
        prox: ProxMode::TopK { tau: 7 },
        ..Default::default()
    };
    let s = solve_decomposition(&p.y, &p.graph, &cfg).unwrap();
    let nonzero = s.delta.row_norms().iter().filter(|&&v| v > 0.0).count();
    assert!(nonzero <= 7);
}

#[test]
fn mismatched_rows_are_rejected() {
    let p = planted(12, 40);
    let y = FeatureMatrix::zeros(39, 3);
    assert!(solve_decomposition(&y, &p.graph, &SolverConfig::default()).is_err());
}

/// Golden-section minimum of `t s + (s - r)^2 / 2` over `s` in `[0, r]`.
fn shrink_oracle(r: f64, t: f64) -> f64 {
    let f = |s: f64| t * s + 0.5 * (s - r) * (s - r);
    let (mut a, mut b) = (0.0, r);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    if f(0.0) <= f(s) {
        0.0
    } else {
        s
    }
}

#[test]
fn l21_matches_numeric_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let dim = rng.random_range(1..=8);
        let row: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (alpha, mu) = (rng.random_range(0.1..3.0), 1.0);
        let q = FeatureMatrix::from_rows(&[row.clone()]).unwrap();
        let d = prox_rows(&q, ProxMode::L21, alpha, mu).unwrap();
        let r = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = shrink_oracle(r, alpha / mu);
        for (j, v) in row.iter().enumerate() {
            assert!((d.get(0, j) - s * v / r).abs() <= 1e-4);
        }
    }
}

proptest! {
    #[test]
    fn prox_commutes_with_row_permutations(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..12),
        seed in any::<u64>(),
    ) {
        let n = rows.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let q = FeatureMatrix::from_rows(&rows).unwrap();
        let qp = FeatureMatrix::from_rows(&permuted).unwrap();
        for mode in [ProxMode::L21, ProxMode::L20(L20Threshold::Derived)] {
            let d = prox_rows(&q, mode, 0.7, 0.5).unwrap();
            let dp = prox_rows(&qp, mode, 0.7, 0.5).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(dp.row(k), d.row(i));
            }
        }
    }
}
