use accelkit::accel::{
    aa_step, aag_step, adaptive_update, ls_coefficients, ngmres_step, run_solver, xi_to_alpha, Depth, DepthState,
    HistoryEntry, IterationHistory, Method, RunStatus, SolverOptions,
};
use accelkit::inner::InnerProduct;
use accelkit::kernel::{gmres, DenseMatrix};
use accelkit::problems::{CavityProblem, FixedPointProblem, QuadraticToy, RichardsonProblem};
use accelkit::Result;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `q(u) = s u + c` in `R^n` with Euclidean norms and `g = q(u) − u`.
struct AffineMap {
    scale: f64,
    shift: Vec<f64>,
    ip: InnerProduct,
}

impl AffineMap {
    fn new(scale: f64, shift: Vec<f64>) -> Self {
        Self {
            scale,
            shift,
            ip: InnerProduct::euclidean(),
        }
    }
}

impl FixedPointProblem for AffineMap {
    fn name(&self) -> String {
        "affine".into()
    }
    fn dim(&self) -> usize {
        self.shift.len()
    }
    fn initial_guess(&self) -> Vec<f64> {
        vec![0.0; self.shift.len()]
    }
    fn q_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(u.iter().zip(&self.shift).map(|(x, c)| self.scale * x + c).collect())
    }
    fn g_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.q_apply(u)?.iter().zip(u).map(|(q, x)| q - x).collect())
    }
    fn q_norm(&self) -> &InnerProduct {
        &self.ip
    }
    fn g_norm(&self) -> &InnerProduct {
        &self.ip
    }
}

fn scalar_richardson(a: f64, b: f64, omega: f64) -> RichardsonProblem {
    RichardsonProblem::new(DenseMatrix::from_diag(&[a]), vec![b], omega).unwrap()
}

fn random_richardson(seed: u64, n: usize) -> RichardsonProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rng.gen_range(-0.3..0.3);
        }
        a[(i, i)] += rng.gen_range(1.0..3.0);
    }
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RichardsonProblem::new(a, b, 0.25).unwrap()
}

/// History of `count` Picard iterates of `p`, all residual slots filled.
fn picard_history(p: &dyn FixedPointProblem, count: usize) -> IterationHistory {
    let mut h = IterationHistory::new(Depth::Infinite);
    let mut u = p.initial_guess();
    for k in 0..count {
        let q = p.q_apply(&u).unwrap();
        let mut e = HistoryEntry::new(k, u.clone(), q.clone());
        e.fp_resid = Some(q.iter().zip(&u).map(|(a, b)| a - b).collect());
        e.g_of_q = Some(p.g_apply(&q).unwrap());
        e.g_of_u = Some(p.g_apply(&u).unwrap());
        h.push(e).unwrap();
        u = q;
    }
    h
}

#[test]
fn least_squares_example_matches_grid_search() {
    let ip = InnerProduct::euclidean();
    let (raw, obj) = ls_coefficients(&ip, &[1.0, 0.0], &[vec![1.0, 1.0]]).unwrap();
    assert!((raw[0] + 0.5).abs() < 1e-14);
    assert!((obj - 0.5_f64.sqrt()).abs() < 1e-14);
    let best = (-2000..=2000)
        .map(|i| {
            let c = i as f64 * 1e-3;
            ((1.0 + c).powi(2) + c * c).sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(obj <= best + 1e-12);
}

#[test]
fn xi_to_alpha_examples() {
    assert_eq!(xi_to_alpha(&[]), vec![1.0]);
    assert_eq!(xi_to_alpha(&[0.5]), vec![-0.5, 1.5]);
    assert_eq!(xi_to_alpha(&[0.25, -1.0]), vec![1.0, -0.25, 0.25]);
}

#[test]
fn aa_depth_one_solves_scalar_linear_problem_in_two_steps() {
    let p = scalar_richardson(2.0, 1.0, 0.25);
    let opts = SolverOptions::new(Method::Aa, Depth::Finite(1)).with_tol(1e-14);
    let t = run_solver(&p, &opts).unwrap();
    assert_eq!(t.status, RunStatus::Converged);
    assert_eq!(t.iterations(), 2);
    assert!((t.final_u[0] - 0.5).abs() < 1e-15);
    let r1 = &t.records[1];
    assert!((r1.g_norm - 0.5).abs() < 1e-15);
}

#[test]
fn ngmres_solves_scalar_linear_problem_in_one_step() {
    let p = scalar_richardson(3.0, 2.0, 0.1);
    let opts = SolverOptions::new(Method::Ngmres, Depth::Finite(1)).with_tol(1e-13);
    let t = run_solver(&p, &opts).unwrap();
    assert_eq!(t.status, RunStatus::Converged);
    assert_eq!(t.iterations(), 1);
    assert!((t.final_u[0] - 2.0 / 3.0).abs() < 1e-14);
}

#[test]
fn depth_zero_reduces_to_picard() {
    let p = QuadraticToy::new(12, 3).unwrap();
    let run = |m: Method, d| {
        run_solver(&p, &SolverOptions::new(m, d).with_max_iter(15)).unwrap()
    };
    let picard = run(Method::Picard, Depth::Finite(0));
    for m in [Method::Aa, Method::Aag] {
        let t = run(m, Depth::Finite(0));
        assert_eq!(t.records.len(), picard.records.len());
        for (a, b) in t.records.iter().zip(&picard.records) {
            assert!((a.g_norm - b.g_norm).abs() <= 1e-14 * b.g_norm.max(1e-300));
        }
    }
}

#[test]
fn constant_map_converges_at_first_step() {
    let p = AffineMap::new(0.0, vec![1.0, -2.0, 0.5]);
    for m in Method::ALL {
        let t = run_solver(&p, &SolverOptions::new(m, Depth::Finite(3))).unwrap();
        assert_eq!(t.status, RunStatus::Converged, "{m:?}");
        assert_eq!(t.iterations(), 1, "{m:?}");
        assert_eq!(t.final_u, vec![1.0, -2.0, 0.5]);
    }
}

#[test]
fn expanding_map_is_reported_as_diverged() {
    let p = AffineMap::new(2.0, vec![1.0]);
    let t = run_solver(&p, &SolverOptions::new(Method::Picard, Depth::Finite(0)).with_max_iter(100)).unwrap();
    assert_eq!(t.status, RunStatus::Diverged);
    assert!(t.iterations() < 100);
    assert_eq!(t.status.as_str(), "diverged");
}

#[test]
fn iteration_cap_is_reported() {
    let p = QuadraticToy::new(10, 1).unwrap();
    let t = run_solver(&p, &SolverOptions::new(Method::Picard, Depth::Finite(0)).with_max_iter(3).with_tol(1e-30))
        .unwrap();
    assert_eq!(t.status, RunStatus::MaxIterExceeded);
    assert_eq!(t.iterations(), 3);
    assert_eq!(t.status.as_str(), "max_iter");
}

#[test]
fn invalid_options_are_rejected() {
    let p = QuadraticToy::new(4, 1).unwrap();
    let bad = [
        SolverOptions::new(Method::Aa, Depth::Finite(1)).adaptive(0.01),
        SolverOptions::new(Method::Aag, Depth::Infinite).adaptive(0.01),
        SolverOptions::new(Method::Aag, Depth::Finite(1)).with_tol(-1.0),
    ];
    for o in bad {
        assert!(run_solver(&p, &o).is_err(), "{o:?}");
    }
}

#[test]
fn ngmres_infinite_depth_matches_gmres_from_initial_guess() {
    for seed in 0..5 {
        let p = random_richardson(seed, 8);
        let t = run_solver(&p, &SolverOptions::new(Method::Ngmres, Depth::Infinite).with_tol(1e-11)).unwrap();
        let a = p.matrix().clone();
        let gm = gmres(|x| a.matvec(x).unwrap(), p.rhs(), &p.initial_guess(), 1e-14, 8).unwrap();
        let r0 = gm.residual_norms[0];
        for (rec, r) in t.records.iter().zip(&gm.residual_norms) {
            if *r < 1e-9 * r0 {
                break;
            }
            assert!((rec.g_norm - r).abs() <= 1e-8 * r, "seed {seed} k {}: {} vs {r}", rec.k, rec.g_norm);
        }
    }
}

#[test]
fn aag_infinite_depth_matches_gmres_from_first_picard_step() {
    for seed in 0..5 {
        let p = random_richardson(seed, 8);
        let t = run_solver(&p, &SolverOptions::new(Method::Aag, Depth::Infinite).with_tol(1e-11)).unwrap();
        let a = p.matrix().clone();
        let x0 = p.q_apply(&p.initial_guess()).unwrap();
        let gm = gmres(|x| a.matvec(x).unwrap(), p.rhs(), &x0, 1e-14, 8).unwrap();
        let r0 = gm.residual_norms[0];
        for (rec, r) in t.records[1..].iter().zip(&gm.residual_norms) {
            if *r < 1e-9 * r0 {
                break;
            }
            assert!((rec.g_norm - r).abs() <= 1e-8 * r, "seed {seed} k {}: {} vs {r}", rec.k, rec.g_norm);
        }
    }
}

#[test]
fn trace_fields_follow_method() {
    let p = QuadraticToy::new(10, 7).unwrap();
    for m in Method::ALL {
        let t = run_solver(&p, &SolverOptions::new(m, Depth::Finite(2)).with_max_iter(8).with_tol(1e-30)).unwrap();
        let r = &t.records;
        assert_eq!(r.len(), 9);
        assert_eq!(r[0].k, 0);
        assert!(r[0].ratio.is_none() && r[0].theta.is_none());
        for (k, rec) in r.iter().enumerate() {
            assert_eq!(rec.k, k);
            assert_eq!(rec.picard_resid.is_some(), k < 8, "{m:?} {k}");
        }
        for w in r.windows(2) {
            assert!(w[1].riesz_solves >= w[0].riesz_solves);
            assert!(w[1].wall_ms >= w[0].wall_ms);
            assert_eq!(w[1].q_solves, w[1].k);
        }
        for rec in &r[1..] {
            let ratio = rec.ratio.unwrap();
            let prev = r[rec.k - 1].g_norm;
            assert!((ratio - rec.g_norm / prev).abs() <= 1e-15 * ratio);
            match m {
                Method::Aa => assert!(rec.theta_q.is_some() && rec.gamma.is_none() && rec.theta.is_none()),
                _ => assert!(rec.theta.is_some() && rec.gamma.is_some() && rec.theta_q.is_none()),
            }
            assert_eq!(rec.depth_used, if m == Method::Picard { 0 } else { (rec.k - 1).min(2) });
            assert_eq!(rec.current_m, Some(if m == Method::Picard { 0 } else { 2 }));
        }
        assert_eq!(t.final_u.len(), 10);
    }
}

#[test]
fn infinite_depth_records_no_current_m() {
    let p = QuadraticToy::new(6, 2).unwrap();
    let t = run_solver(&p, &SolverOptions::new(Method::Aag, Depth::Infinite).with_max_iter(4)).unwrap();
    assert!(t.records[1..].iter().all(|r| r.current_m.is_none()));
    assert_eq!(t.records.last().unwrap().depth_used, t.iterations() - 1);
}

#[test]
fn adaptive_depth_only_grows_by_one() {
    let p = CavityProblem::new(16, 1000.0).unwrap();
    let opts = SolverOptions::new(Method::Aag, Depth::Finite(1)).adaptive(0.01).with_max_iter(80);
    let t = run_solver(&p, &opts).unwrap();
    assert!(t.converged(), "{:?}", t.status);
    let ms: Vec<usize> = t.records[1..].iter().map(|r| r.current_m.unwrap()).collect();
    assert_eq!(ms[0], 1);
    assert!(t.records.iter().any(|r| r.adaptive_triggered));
    for (i, rec) in t.records.iter().enumerate().skip(1) {
        if rec.adaptive_triggered {
            assert!(rec.k >= 2);
            let (g_prev, ratio) = (rec.gamma.unwrap(), rec.ratio.unwrap());
            assert!((g_prev - ratio).abs() < 0.01);
        }
        if i + 1 < t.records.len() {
            let next = t.records[i + 1].current_m.unwrap();
            let cur = rec.current_m.unwrap();
            assert_eq!(next, cur + rec.adaptive_triggered as usize);
        }
    }
}

#[test]
fn adaptive_update_examples() {
    let s = DepthState::adaptive(1, 0.01);
    assert_eq!(adaptive_update(s, 0.5, 0.505).current_m, 2);
    assert_eq!(adaptive_update(s, 0.5, 0.52).current_m, 1);
    assert_eq!(adaptive_update(DepthState::fixed(1), 0.5, 0.5).current_m, 1);
    assert_eq!(adaptive_update(s, f64::NAN, 0.5).current_m, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn nested_windows_never_increase_the_objective(seed in any::<u64>(), n in 6usize..16) {
        let p = QuadraticToy::new(n, seed).unwrap();
        let full = picard_history(&p, 6);
        let ip = p.g_norm().clone();
        type Step = fn(&mut IterationHistory, &InnerProduct, f64) -> Result<accelkit::accel::StepOutput>;
        let steps: [(&str, Step); 3] = [("aa", aa_step), ("aag", aag_step), ("ngmres", ngmres_step)];
        for (name, step) in steps {
            let mut prev = f64::INFINITY;
            for m in 0..=5usize {
                let mut h = full.clone();
                h.set_depth_cap(Depth::Finite(m));
                let out = match step(&mut h, &ip, 0.0) {
                    Ok(o) => o,
                    Err(_) => break,
                };
                prop_assert_eq!(out.depth_used, m);
                let s: f64 = out.coefficients.alpha.iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-10 * out.coefficients.max_abs_alpha.max(1.0));
                prop_assert!(out.form_gap <= 1e-10, "{} form gap {}", name, out.form_gap);
                prop_assert!(out.objective <= prev * (1.0 + 1e-10) + 1e-300, "{} m={} {} > {}", name, m, out.objective, prev);
                prop_assert!(out.objective <= out.base_norm * (1.0 + 1e-10));
                prev = out.objective;
            }
        }
    }

    #[test]
    fn traces_keep_gain_bounded_and_forms_equivalent(seed in any::<u64>(), m in 1usize..5) {
        let p = QuadraticToy::new(10, seed).unwrap();
        for method in [Method::Aa, Method::Ngmres, Method::Aag] {
            let t = run_solver(&p, &SolverOptions::new(method, Depth::Finite(m)).with_max_iter(30)).unwrap();
            prop_assert!(t.max_theta() <= 1.0 + 1e-8, "{:?} theta {}", method, t.max_theta());
            prop_assert!(t.max_form_gap() <= 1e-12, "{:?} gap {}", method, t.max_form_gap());
        }
    }
}
