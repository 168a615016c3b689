use super::*;
use crate::operators::{compose, make_identity_operator, make_subsample_operator, DenseOperator, MaskSpec};
use crate::transforms::{dct_analyze, DctBasis};
use rand::Rng;
use rand_distr::StandardNormal;

fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseOperator::new(rows, cols, data).unwrap()
}

fn problem_from(theta: DenseOperator, y: Vec<f64>) -> SparseProblem {
    SparseProblem::new(Arc::new(theta), y).unwrap()
}

fn identity_problem(y: Vec<f64>) -> SparseProblem {
    let n = y.len();
    SparseProblem::new(Arc::new(make_identity_operator(n).unwrap()), y).unwrap()
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn quick_cfg(seed: u64) -> OptConfig {
    OptConfig::default().with_seed(seed)
}

#[test]
fn problem_rejects_mismatch_and_nan() {
    let theta = Arc::new(random_dense(3, 2, 1));
    assert!(SparseProblem::new(theta.clone(), vec![0.0; 2]).is_err());
    assert!(SparseProblem::new(theta, vec![0.0, f64::NAN, 1.0]).is_err());
    assert!(LassoParams::new(-1.0).is_err());
    assert!(VgParams::new(f64::INFINITY).is_err());
}

#[test]
fn lasso_objective_examples() {
    let p = identity_problem(vec![1.0, 0.0]);
    let l = LassoParams::new(0.5).unwrap();
    assert_eq!(lasso_objective(&p, &[1.0, 0.0], &l).unwrap(), 0.5);
    assert_eq!(lasso_objective(&p, &[0.0, 0.0], &l).unwrap(), 0.5);
    assert!(lasso_objective(&p, &[0.0], &l).is_err());

    let g = lasso_gradient(&identity_problem(vec![2.0]), &[1.0], &LassoParams::new(0.0).unwrap()).unwrap();
    assert_eq!(g, vec![-1.0]);
    let g = lasso_gradient(&identity_problem(vec![0.0; 3]), &[0.0; 3], &l).unwrap();
    assert_eq!(g, vec![0.0; 3]);
}

#[test]
fn lasso_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10 {
        let theta = random_dense(5, 8, 100 + trial);
        let y: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let p = problem_from(theta, y);
        let params = LassoParams::new(0.3).unwrap();
        for _ in 0..20 {
            let w: Vec<f64> = (0..8)
                .map(|_| {
                    let v: f64 = rng.gen_range(0.01..1.0);
                    if rng.gen_bool(0.5) { v } else { -v }
                })
                .collect();
            let g = lasso_gradient(&p, &w, &params).unwrap();
            for i in 0..8 {
                let h = 1e-6;
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[i] += h;
                wm[i] -= h;
                let fd = (lasso_objective(&p, &wp, &params).unwrap() - lasso_objective(&p, &wm, &params).unwrap()) / (2.0 * h);
                assert!(rel_diff(g[i], fd) < 1e-5, "i={i} analytic={} fd={fd}", g[i]);
            }
        }
    }
}

#[test]
fn e_rec_examples() {
    let p = identity_problem(vec![1.0, 1.0]);
    let s = VgState::from_gates(vec![1.0, 1.0], &[0.5, 0.5]).unwrap();
    assert!((vg_e_rec(&p, &s).unwrap() - 0.5).abs() < 1e-15);

    let theta = random_dense(4, 3, 3);
    let y = vec![0.3, -1.0, 2.0, 0.5];
    let p = problem_from(theta.clone(), y.clone());
    let w = vec![0.7, -0.2, 1.1];
    let on = VgState::from_gates(w.clone(), &[1.0 - 1e-9; 3]).unwrap();
    let fit = 0.5 * {
        let r = theta.apply(&w).unwrap();
        r.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    assert!((vg_e_rec(&p, &on).unwrap() - fit).abs() < 1e-6);
    let off = VgState::from_gates(w, &[1e-9; 3]).unwrap();
    let half_y2 = 0.5 * y.iter().map(|v| v * v).sum::<f64>();
    assert!((vg_e_rec(&p, &off).unwrap() - half_y2).abs() < 1e-6);
}

#[test]
fn binary_gates_drop_variance_term() {
    let theta = random_dense(6, 4, 9);
    let y = vec![1.0, -0.5, 0.2, 0.0, 0.8, -1.2];
    let p = problem_from(theta.clone(), y.clone());
    let w = vec![0.4, 1.5, -0.3, 0.9];
    let gates = [1.0 - 1e-9, 1e-9, 1.0 - 1e-9, 1e-9];
    let s = VgState::from_gates(w.clone(), &gates).unwrap();
    let v: Vec<f64> = w.iter().zip(&gates).map(|(a, b)| a * b).collect();
    let r = theta.apply(&v).unwrap();
    let plain = 0.5 * r.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    assert!((vg_e_rec(&p, &s).unwrap() - plain).abs() < 1e-6);
}

#[test]
fn symmetric_gate_entropy() {
    let p = identity_problem(vec![1.0, -2.0, 0.5]);
    let s = VgState::new(vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
    let fe = vg_free_energy(&p, &s, &VgParams::new(0.0).unwrap()).unwrap();
    let e = vg_e_rec(&p, &s).unwrap();
    let expected = 1.5 * e.ln() + 3.0 * 0.5f64.ln();
    assert!((fe.value - expected).abs() < 1e-12);
    assert!(!fe.perfect_fit);
}

#[test]
fn perfect_fit_is_clamped_and_flagged() {
    let p = identity_problem(vec![1.0, 2.0]);
    let s = VgState::new(vec![1.0, 2.0], vec![800.0, 800.0]).unwrap();
    let fe = vg_free_energy(&p, &s, &VgParams::new(-1.0).unwrap()).unwrap();
    assert!(fe.perfect_fit);
    assert!(fe.value.is_finite());
    let (gw, gz) = vg_gradient(&p, &s, &VgParams::new(-1.0).unwrap()).unwrap();
    assert!(gw.iter().chain(&gz).all(|v| v.is_finite()));
}

#[test]
fn vg_gradient_at_symmetric_start() {
    let theta = random_dense(5, 4, 21);
    let y = vec![1.0, 0.5, -0.3, 0.2, 2.0];
    let p = problem_from(theta.clone(), y.clone());
    let s = VgState::new(vec![0.0; 4], vec![0.0; 4]).unwrap();
    let (gw, gz) = vg_gradient(&p, &s, &VgParams::new(0.0).unwrap()).unwrap();
    let e = vg_e_rec(&p, &s).unwrap();
    let ty = theta.adjoint_apply(&y).unwrap();
    for i in 0..4 {
        let expected = 2.5 / e * (-0.5 * ty[i]);
        assert!((gw[i] - expected).abs() < 1e-12);
        assert!(gz[i].abs() < 1e-15);
    }
}

#[test]
fn vg_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let theta = random_dense(5, 8, 200 + trial);
        let y: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let p = problem_from(theta, y);
        let params = VgParams::new(rng.gen_range(-6.0..0.0)).unwrap();
        for _ in 0..20 {
            let w: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let z: Vec<f64> = (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s = VgState::new(w.clone(), z.clone()).unwrap();
            let (gw, gz) = vg_gradient(&p, &s, &params).unwrap();
            let f = |w: &[f64], z: &[f64]| {
                vg_free_energy(&p, &VgState::new(w.to_vec(), z.to_vec()).unwrap(), &params)
                    .unwrap()
                    .value
            };
            let h = 1e-6;
            for i in 0..8 {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[i] += h;
                wm[i] -= h;
                let fd = (f(&wp, &z) - f(&wm, &z)) / (2.0 * h);
                worst = worst.max(rel_diff(gw[i], fd));
                let (mut zp, mut zm) = (z.clone(), z.clone());
                zp[i] += h;
                zm[i] -= h;
                let fd = (f(&w, &zp) - f(&w, &zm)) / (2.0 * h);
                worst = worst.max(rel_diff(gz[i], fd));
            }
        }
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn strongly_negative_gamma_turns_gates_off() {
    let p = identity_problem(vec![1.0, -0.5, 0.3, 0.8]);
    let sol = solve(&p, &Method::vg(-40.0).unwrap(), &quick_cfg(3)).unwrap();
    assert!(sol.gates.unwrap().iter().all(|&m| m < 1e-6));
}

#[test]
fn unregularized_lasso_matches_linear_solve() {
    let theta = DenseOperator::new(3, 3, vec![2.0, 0.5, 0.0, 0.3, 1.5, 0.2, 0.0, -0.4, 1.8]).unwrap();
    let x_true = [0.7, -1.2, 0.4];
    let y = theta.apply(&x_true).unwrap();
    let p = problem_from(theta.clone(), y.clone());
    let sol = solve(&p, &Method::lasso(0.0).unwrap(), &quick_cfg(1)).unwrap();
    for (a, b) in sol.coeffs.iter().zip(&x_true) {
        assert!(rel_diff(*a, *b) < 1e-3, "{a} vs {b}");
    }
    assert!(sol.diagnostics.final_objective <= sol.diagnostics.initial_objective);

    let scaled: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
    let l0 = restricted_least_squares(&theta, &y, &[0, 1, 2]).unwrap();
    let l3 = restricted_least_squares(&theta, &scaled, &[0, 1, 2]).unwrap();
    for (a, b) in l0.coeffs.iter().zip(&l3.coeffs) {
        assert!((3.0 * a - b).abs() < 1e-12);
    }
}

#[test]
fn orthonormal_lasso_matches_soft_threshold() {
    let n = 32;
    let basis = DctBasis::new(n).unwrap();
    let theta = compose(Arc::new(make_identity_operator(n).unwrap()), &basis).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let p = SparseProblem::new(Arc::new(theta), y.clone()).unwrap();
    let lambda = 0.4;
    let sol = solve(&p, &Method::lasso(lambda).unwrap(), &quick_cfg(2)).unwrap();
    let ty = dct_analyze(&y).unwrap();
    for (c, t) in sol.coeffs.iter().zip(&ty) {
        let soft = t.signum() * (t.abs() - lambda).max(0.0);
        assert!((c - soft).abs() < 1e-3, "{c} vs {soft}");
    }
}

fn planted_problem(seed: u64, support: &[usize]) -> (DenseOperator, Vec<f64>) {
    let theta = random_dense(8, 10, seed);
    let mut w = vec![0.0; 10];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    for &i in support {
        let mag: f64 = rng.gen_range(1.0..2.0);
        w[i] = if rng.gen_bool(0.5) { mag } else { -mag };
    }
    let y = theta.apply(&w).unwrap();
    (theta, y)
}

#[test]
fn brute_force_examples() {
    let theta = random_dense(6, 5, 42);
    let y = theta.column(1);
    let p = problem_from(theta.clone(), y);
    let fit = brute_force_l0(&p, 1).unwrap();
    assert_eq!(fit.support, vec![1]);
    assert!(fit.residual < 1e-9);

    let y2 = vec![0.3, -1.0, 0.7, 2.0, 0.1, -0.4];
    let p2 = problem_from(theta.clone(), y2.clone());
    let full = restricted_least_squares(&theta, &y2, &[0, 1, 2, 3, 4]).unwrap();
    let best = brute_force_l0(&p2, 5).unwrap();
    assert!((best.residual - full.residual).abs() < 1e-9);

    let big = identity_problem(vec![1.0; 21]);
    assert!(matches!(brute_force_l0(&big, 1), Err(Error::TooLarge { .. })));
}

#[test]
fn brute_force_recovers_planted_pair() {
    let (theta, y) = planted_problem(77, &[2, 7]);
    let fit = brute_force_l0(&problem_from(theta, y), 3).unwrap();
    assert_eq!(fit.support, vec![2, 7]);
}

#[test]
fn vg_recovers_planted_support() {
    // With the default κ = ½ this problem settles in the all-gates-off
    // basin; the doubled data weight recovers the planted pair.
    let (theta, y) = planted_problem(78, &[1, 6]);
    let p = problem_from(theta.clone(), y.clone());
    let method = Method::Vg(VgParams::with_data_weight(-5.0, 1.0).unwrap());
    let sol = solve(&p, &method, &quick_cfg(4)).unwrap();
    let gates = sol.gates.unwrap();
    for (i, m) in gates.iter().enumerate() {
        if i == 1 || i == 6 {
            assert!(*m > 0.99, "gate {i} = {m}");
        } else {
            assert!(*m < 0.01, "gate {i} = {m}");
        }
    }
    let support: Vec<usize> = (0..10).filter(|&i| gates[i] > 0.5).collect();
    let refit = restricted_least_squares(&theta, &y, &support).unwrap();
    let oracle = brute_force_l0(&p, 2).unwrap();
    assert!(oracle.residual <= refit.residual + 1e-9);
}

#[test]
fn vg_converged_energy_dominates_binary_supports() {
    // Overdetermined and noisy, so no support interpolates y and the free
    // energy is bounded below on every binary support.
    let theta = random_dense(12, 6, 91);
    let mut y = theta.apply(&[1.5, 0.0, -1.0, 0.0, 0.0, 0.8]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    for v in y.iter_mut() {
        *v += 0.3 * rng.sample::<f64, _>(StandardNormal);
    }
    let p = problem_from(theta.clone(), y.clone());
    let params = VgParams::new(-2.0).unwrap();
    let sol = solve(&p, &Method::Vg(params), &quick_cfg(6)).unwrap();
    let converged = sol.diagnostics.final_objective;
    for mask in 0u32..64 {
        let support: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
        let fit = restricted_least_squares(&theta, &y, &support).unwrap();
        let gates: Vec<f64> = (0..6)
            .map(|i| if mask & (1 << i) != 0 { 1.0 - 1e-9 } else { 1e-9 })
            .collect();
        let s = VgState::from_gates(fit.coeffs, &gates).unwrap();
        let f = vg_free_energy(&p, &s, &params).unwrap().value;
        assert!(converged <= f + 1e-6, "support {support:?}: {converged} > {f}");
    }
}

#[test]
fn data_weight_scales_the_fit_term() {
    let p = identity_problem(vec![1.0, -2.0, 0.5]);
    let s = VgState::new(vec![0.3, 0.1, -0.2], vec![0.4, -1.0, 2.0]).unwrap();
    let half = vg_free_energy(&p, &s, &VgParams::new(-1.0).unwrap()).unwrap();
    let one = vg_free_energy(&p, &s, &VgParams::with_data_weight(-1.0, 1.0).unwrap()).unwrap();
    let fit = 1.5 * half.e_rec.ln();
    assert!((one.value - half.value - fit).abs() < 1e-12);
    assert!(VgParams::with_data_weight(-1.0, 0.0).is_err());
    let json = serde_json::to_string(&Method::vg(-2.0).unwrap()).unwrap();
    let legacy: Method = serde_json::from_str(r#"{"method":"vg","gamma":-2.0}"#).unwrap();
    assert_eq!(legacy, serde_json::from_str(&json).unwrap());
}

#[test]
fn separable_stationarity() {
    let p = identity_problem(vec![2.0, -1.5, 0.01, 0.02]);
    let params = VgParams::new(-3.0).unwrap();
    let sol = solve(&p, &Method::Vg(params), &quick_cfg(8)).unwrap();
    let gates = sol.gates.clone().unwrap();
    let w: Vec<f64> = sol.coeffs.iter().zip(&gates).map(|(c, m)| c / m).collect();
    let state = VgState::from_gates(w, &gates).unwrap();
    let (gw, gz) = vg_gradient(&p, &state, &params).unwrap();
    let norm = gw.iter().chain(&gz).map(|g| g * g).sum::<f64>().sqrt();
    assert!(norm < 1e-6, "gradient norm {norm}");
}

#[test]
fn solve_is_deterministic_and_serializes() {
    let mask = MaskSpec::new(16, vec![0, 3, 5, 8, 9, 12, 15], 0).unwrap();
    let basis = DctBasis::new(16).unwrap();
    let theta = compose(Arc::new(make_subsample_operator(mask).unwrap()), &basis).unwrap();
    let y = vec![0.5, -0.2, 0.9, 1.1, 0.0, -0.7, 0.3];
    let p = SparseProblem::new(Arc::new(theta), y).unwrap();
    let m = Method::vg(-4.0).unwrap();
    let a = solve(&p, &m, &quick_cfg(9)).unwrap();
    let b = solve(&p, &m, &quick_cfg(9)).unwrap();
    assert_eq!(a, b);
    let json = a.to_json().unwrap();
    assert!(json.contains("\"method\": \"vg\""));
    let back: Solution = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
}

#[test]
fn reconstruct_examples() {
    let basis = DctBasis::new(10).unwrap();
    let x: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
    let mut sol = Solution {
        method: Method::lasso(0.1).unwrap(),
        coeffs: dct_analyze(&x).unwrap(),
        gates: None,
        diagnostics: Diagnostics {
            initial_objective: 0.0,
            final_objective: 0.0,
            iterations: 0,
            stop_reason: StopReason::MaxIters,
            perfect_fit: false,
        },
    };
    let back = reconstruct(&sol, Basis::Dct(&basis)).unwrap();
    assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9));
    assert_eq!(reconstruct(&sol, Basis::Identity).unwrap(), sol.coeffs);
    sol.coeffs = vec![0.0; 10];
    assert!(reconstruct(&sol, Basis::Dct(&basis)).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn orthogonal_design_shortcut_matches_dense_path() {
    let n = 16;
    let basis = DctBasis::new(n).unwrap();
    let fast = compose(Arc::new(make_identity_operator(n).unwrap()), &basis).unwrap();
    assert!(fast.is_orthogonal());
    let dense = DenseOperator::materialize(&fast);
    assert!(!dense.is_orthogonal());
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let pf = SparseProblem::new(Arc::new(fast), y.clone()).unwrap();
    let pd = problem_from(dense, y);
    let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    let lasso = LassoParams::new(0.2).unwrap();
    assert!(rel_diff(lasso_objective(&pf, &w, &lasso).unwrap(), lasso_objective(&pd, &w, &lasso).unwrap()) < 1e-12);
    for (a, b) in lasso_gradient(&pf, &w, &lasso).unwrap().iter().zip(lasso_gradient(&pd, &w, &lasso).unwrap()) {
        assert!((a - b).abs() < 1e-12);
    }

    let vg = VgParams::new(-3.0).unwrap();
    let s = VgState::new(w, z).unwrap();
    let (ef, ed) = (vg_free_energy(&pf, &s, &vg).unwrap(), vg_free_energy(&pd, &s, &vg).unwrap());
    assert!(rel_diff(ef.value, ed.value) < 1e-12 && rel_diff(ef.e_rec, ed.e_rec) < 1e-12);
    let (gf, gd) = (vg_gradient(&pf, &s, &vg).unwrap(), vg_gradient(&pd, &s, &vg).unwrap());
    for (a, b) in gf.0.iter().chain(&gf.1).zip(gd.0.iter().chain(&gd.1)) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}
