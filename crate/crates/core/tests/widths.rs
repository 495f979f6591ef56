use mra_core::dyadic::{enum_box, enum_shell, in_cross};
use mra_core::projectors::{DetailCoeffs, Transform};
use mra_core::sample::trial_rng;
use mra_core::smoothness::{extremal_decomposition, SmoothnessParams, Theta};
use mra_core::widths::{
    budget_beta, budget_plan, choose_beta, cross_dimension, rate_fit, run_width_experiment, tail_bound_check,
    truncation_error, truncation_from_decomposition, width_exponents, WidthCase, WidthExperimentConfig,
};
use mra_core::{DegreeVector, Grid, GridFunction, MultiIndex};
use rand::Rng;

fn params(alpha: &[f64], p: f64, theta: f64) -> SmoothnessParams {
    SmoothnessParams::new(alpha.to_vec(), p, Theta::new(theta).unwrap()).unwrap()
}

#[test]
fn functions_in_the_cross_are_reproduced() {
    let deg = DegreeVector::uniform(2, 1);
    let grid = Grid::for_degree(4, &deg, None).unwrap();
    let t = Transform::new(&grid, &deg).unwrap();
    let beta = [1.0, 1.5];
    let r = 4;
    let mut rng = trial_rng(21, 0);
    let mut f = GridFunction::zeros(&grid);
    for k in enum_box(&MultiIndex::uniform(2, 4)).into_iter().filter(|k| in_cross(k, &beta, r as f64)) {
        let mut c = DetailCoeffs::zeros(&k, &deg);
        c.coeffs.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        f.axpy(1.0, &t.synthesize_block(&c).unwrap()).unwrap();
    }
    for q in [1.0, 2.0, 3.0] {
        let tr = truncation_error(&f, &deg, &beta, r, q).unwrap();
        assert!(tr.error <= 1e-10 * f.max_abs(), "q={q}: {}", tr.error);
        assert_eq!(tr.n, cross_dimension(&beta, r as f64, &deg));
    }
}

#[test]
fn half_indicator_has_two_haar_levels() {
    let deg = DegreeVector::uniform(1, 0);
    let grid = Grid::for_degree(5, &deg, None).unwrap();
    let f = GridFunction::from_fn(&grid, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
    assert!(truncation_error(&f, &deg, &[1.0], 0, 2.0).unwrap().error > 0.49);
    for r in 1..5 {
        let tr = truncation_error(&f, &deg, &[1.0], r, 2.0).unwrap();
        assert!(tr.error < 1e-13);
        assert_eq!(tr.n, 1 << r);
    }
}

/// On the extremal profile every block has `‖𝓔_κ f‖_2 = 2^{-(κ,α)}`, so the
/// squared error is a plain sum over the resolved indices outside the cross.
#[test]
fn extremal_error_matches_closed_form() {
    let s = params(&[1.0, 1.0], 2.0, f64::INFINITY);
    let level = 5;
    let dec = extremal_decomposition(&s, level, 4).unwrap();
    let t = Transform::new(&dec.grid, &s.degree()).unwrap();
    let beta = choose_beta(&s, 2.0).unwrap();
    let mut last = f64::INFINITY;
    for r in 0..=2 * level {
        let mut want = 0.0;
        for a in 0..=level {
            for b in 0..=level {
                if a + b > r {
                    want += 4f64.powi(-((a + b) as i32));
                }
            }
        }
        let got = truncation_from_decomposition(&t, &dec, &beta, r, 2.0).unwrap().error;
        assert!((got * got - want).abs() < 1e-8, "r={r}: {} vs {want}", got * got);
        assert!(got <= last);
        last = got;
    }
}

#[test]
fn truncation_error_is_monotone_in_r() {
    let s = params(&[1.0, 2.0], 1.5, f64::INFINITY);
    let dec = extremal_decomposition(&s, 4, 9).unwrap();
    let t = Transform::new(&dec.grid, &s.degree()).unwrap();
    let beta = choose_beta(&s, 3.0).unwrap();
    for q in [1.5, 3.0] {
        let errs: Vec<f64> = (0..8)
            .map(|r| truncation_from_decomposition(&t, &dec, &beta, r, q).unwrap().error)
            .collect();
        // Orthogonal tails shrink in L2; other norms may wiggle but not by much.
        for w in errs.windows(2) {
            assert!(w[1] <= 1.5 * w[0] + 1e-14, "q={q}: {errs:?}");
        }
        assert!(errs[7] < errs[0]);
    }
}

#[test]
fn tail_of_zero_is_zero() {
    let s = params(&[1.0], 2.0, 2.0);
    let grid = Grid::for_degree(4, &s.degree(), None).unwrap();
    assert_eq!(tail_bound_check(&GridFunction::zeros(&grid), &[1.0], 3, &s, 2.0).unwrap(), 0.0);
}

#[test]
fn exponent_table() {
    let cases = [
        // (alpha, p, theta, q, case, rate, log exponent)
        (vec![1.0, 1.0], 2.0, 2.0, 2.0, WidthCase::Truncation, 1.0, 1.0),
        (vec![1.0, 1.0], 2.0, f64::INFINITY, 2.0, WidthCase::Truncation, 1.0, 1.5),
        (vec![1.0, 2.0], 2.0, 2.0, 2.0, WidthCase::Truncation, 1.0, 0.0),
        (vec![1.0, 1.0], 1.0, 1.0, 2.0, WidthCase::Truncation, 0.5, 0.5),
        (vec![1.0, 1.0], 4.0, 4.0, 2.0, WidthCase::Truncation, 1.0, 1.25),
        (vec![1.0, 1.0], 2.0, 2.0, 4.0, WidthCase::Budget, 1.0, 1.0),
        (vec![2.0, 2.0], 1.0, 1.0, 4.0, WidthCase::Budget, 1.5, 1.5),
    ];
    for (alpha, p, theta, q, case, rate, log) in cases {
        let e = width_exponents(&params(&alpha, p, theta), q).unwrap();
        assert_eq!(e.case, case, "{alpha:?} {p} {q}");
        assert!((e.rate - rate).abs() < 1e-12, "{alpha:?} {p} {q}: {}", e.rate);
        assert!((e.log_exponent - log).abs() < 1e-12, "{alpha:?} {p} {q}: {}", e.log_exponent);
    }
    assert!(width_exponents(&params(&[0.8, 0.8], 1.0, 2.0), 4.0).is_err());
}

#[test]
fn budget_plan_invariants() {
    for (alpha, p, q) in [(vec![1.0, 1.0], 2.0, 4.0), (vec![1.0, 2.0], 2.0, 4.0), (vec![2.0, 2.5], 1.0, 3.0)] {
        let s = params(&alpha, p, 2.0);
        let beta = budget_beta(&s, q).unwrap();
        for r in [4u32, 6, 8] {
            let plan = budget_plan(r, &beta, &s, q).unwrap();
            assert!(plan.gamma > 0.0 && plan.gamma < 1.0 / 3.0);
            assert!(plan.gamma_prime > 0.0 && plan.gamma_prime < plan.gamma);
            assert!(plan.gamma < 2.0 * plan.mu && plan.gamma_prime < 2.0 * plan.epsilon);
            assert_eq!(plan.j0, (r as f64 / (3.0 * plan.gamma)).floor() as u32);
            let mut want_blocks = 0;
            let mut bound = 0.0;
            for j in 1..=plan.j0 {
                for k in enum_shell(&beta, r + j).unwrap() {
                    want_blocks += 1;
                    let n = plan.allocation[&k];
                    assert!(n >= 1 && n <= plan.block_dims[&k]);
                    let off: f64 = (0..alpha.len()).filter(|&i| beta[i] > 1.0).map(|i| k.get(i) as f64 * beta[i]).sum();
                    bound += plan.c0 as f64 * (r as f64 - plan.gamma * j as f64 - plan.gamma_prime * off).exp2() + 1.0;
                }
            }
            assert_eq!(plan.allocation.len(), want_blocks);
            assert!(plan.allocation.values().sum::<usize>() as f64 <= bound);
            assert_eq!(plan.head, cross_dimension(&beta, r as f64, &s.degree()));
        }
    }
    let s = params(&[1.0, 1.0], 2.0, 2.0);
    let beta = budget_beta(&s, 4.0).unwrap();
    let a8 = budget_plan(8, &beta, &s, 4.0).unwrap().audit();
    let a12 = budget_plan(12, &beta, &s, 4.0).unwrap().audit();
    assert!(a12 <= 1.25 * a8, "{a8} {a12}");
    assert!(budget_plan(4, &[1.0, 1.2], &s, 4.0).is_err());
    assert!(budget_plan(4, &beta, &s, 1.5).is_err());
}

#[test]
fn rate_fit_on_exact_power_laws() {
    let pts: Vec<(f64, f64)> = (2..10)
        .map(|k| {
            let n = 3f64.powi(k);
            (n, 5.0 * n.powf(-0.75) * n.ln().powi(2))
        })
        .collect();
    let f = rate_fit(&pts).unwrap();
    assert!((f.slope + 0.75).abs() < 1e-8 && (f.log_exponent - 2.0).abs() < 1e-8);
    assert!((f.intercept - 5f64.ln()).abs() < 1e-7 && f.rms < 1e-10);
    assert!(rate_fit(&[(2.0, 1.0), (3.0, 1.0), (4.0, 0.0), (5.0, 1.0)]).is_err());
    assert!(rate_fit(&[(1.0, 1.0), (3.0, 1.0), (4.0, 1.0), (5.0, 1.0)]).is_err());
}

#[test]
fn experiment_report_is_deterministic() {
    let cfg = WidthExperimentConfig {
        params: params(&[1.0], 2.0, f64::INFINITY),
        q: 2.0,
        level: 7,
        r_min: 3,
        r_max: 7,
        trials: 2,
        seed: 5,
    };
    let a = run_width_experiment(&cfg).unwrap();
    let b = run_width_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.analytic_tail && a.warnings.is_empty());
    let slope = a.fit.unwrap().slope;
    assert!((slope + 1.0).abs() < 0.1, "{slope}");
    assert!(a.rows.iter().all(|r| r.error >= r.grid_error && r.ratio.is_finite()));
    let other = WidthExperimentConfig { seed: 6, ..cfg.clone() };
    assert_ne!(other.hash(), cfg.hash());
    let theta2 = WidthExperimentConfig { params: params(&[1.0], 2.0, 2.0), q: 3.0, ..cfg };
    let rep = run_width_experiment(&theta2).unwrap();
    // Budget case, theta != inf, no analytic tail, and a zero error at r = level.
    assert!(!rep.analytic_tail && rep.fit.is_none() && rep.warnings.len() == 4, "{:?}", rep.warnings);
    assert_eq!(rep.rows.last().unwrap().error, 0.0);
}
