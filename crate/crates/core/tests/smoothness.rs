use std::f64::consts::PI;

use mra_core::dyadic::enum_box;
use mra_core::projectors::{DetailCoeffs, Transform};
use mra_core::sample::{random_smooth, trial_rng};
use mra_core::smoothness::{
    besov_seminorm, decay_check, extremal_decomposition, max_ratio, mixed_difference, mixed_difference_axiswise,
    mixed_modulus, normalize_to_class, seminorm_from_table, synthesize_extremal, ModulusTable, SmoothnessParams, Theta,
    DEFAULT_SHIFT_CAP,
};
use mra_core::{DegreeVector, Grid, GridFunction, MultiIndex};
use proptest::prelude::*;

fn params(alpha: &[f64], p: f64, theta: f64) -> SmoothnessParams {
    SmoothnessParams::new(alpha.to_vec(), p, Theta::new(theta).unwrap()).unwrap()
}

fn square(level: u32) -> std::sync::Arc<Grid> {
    Grid::new(2, level, &[3, 2]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn difference_routes_agree(
        s in proptest::collection::vec(-5i64..=5, 2),
        l in proptest::collection::vec(0u32..=3, 2),
        seed in 0u64..1000,
    ) {
        let grid = square(3);
        let f = random_smooth(&grid, &mut trial_rng(seed, 0));
        let h: Vec<f64> = s.iter().map(|&x| x as f64 / 8.0).collect();
        let l = MultiIndex::new(l);
        let a = mixed_difference(&f, &h, &l).unwrap();
        let b = mixed_difference_axiswise(&f, &h, &l).unwrap();
        prop_assert!((&a - &b).max_abs() <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn moduli_vanish_on_low_degree_polynomials(
        c in proptest::collection::vec(-2.0f64..2.0, 6),
        mask in 1u32..4,
    ) {
        // Degree < l_j along every axis of J: (x0 + x0²) (1 + x1) with l = (3, 2).
        let grid = square(3);
        let f = GridFunction::from_fn(&grid, |x| {
            (c[0] + c[1] * x[0] + c[2] * x[0] * x[0]) * (c[3] + c[4] * x[1]) + if mask & 1 == 1 { 0.0 } else { c[5] * x[0].powi(5) }
                + if mask & 2 == 2 { 0.0 } else { c[5] * x[1].powi(4) }
        });
        let l = MultiIndex::new(vec![3, 2]);
        let w = mixed_modulus(&f, mask, &[0.5, 0.5], &l, 2.0).unwrap();
        prop_assert!(w <= 1e-12 * f.max_abs().max(1.0), "{}", w);
    }
}

#[test]
fn modulus_is_monotone_on_the_dyadic_grid() {
    let grid = square(4);
    let f = random_smooth(&grid, &mut trial_rng(3, 3));
    let order = MultiIndex::new(vec![1, 2]);
    let table = ModulusTable::new(&f, &order, 1.5, DEFAULT_SHIFT_CAP).unwrap();
    for mask in 1u32..4 {
        let axes = (mask.count_ones()) as usize;
        for m in enum_box(&MultiIndex::uniform(axes, 4)) {
            let here = table.get(mask, m.as_slice());
            for j in 0..axes {
                if m.get(j) < 4 {
                    let mut finer = m.as_slice().to_vec();
                    finer[j] += 1;
                    assert!(table.get(mask, &finer) <= here + 1e-15);
                }
            }
        }
    }
    // Direct evaluation agrees with the table.
    let direct = mixed_modulus(&f, 3, &[0.25, 0.125], &order, 1.5).unwrap();
    assert!((direct - table.get(3, &[2, 3])).abs() < 1e-14);
}

#[test]
fn modulus_of_constant_is_zero() {
    let grid = square(3);
    let f = GridFunction::from_fn(&grid, |_| 4.0);
    for mask in 1u32..4 {
        assert_eq!(mixed_modulus(&f, mask, &[1.0, 1.0], &MultiIndex::new(vec![1, 1]), 2.0).unwrap(), 0.0);
    }
}

#[test]
fn seminorm_basics() {
    let s = params(&[1.0, 0.5], 2.0, 2.0);
    let grid = Grid::for_degree(3, &s.degree(), None).unwrap();
    assert_eq!(besov_seminorm(&GridFunction::zeros(&grid), &s).unwrap(), 0.0);
    let f = random_smooth(&grid, &mut trial_rng(5, 0));
    let a = besov_seminorm(&f, &s).unwrap();
    let b = besov_seminorm(&(&f * -3.0), &s).unwrap();
    assert!(a > 0.0 && (b - 3.0 * a).abs() < 1e-12 * b);
    let (g, norm) = normalize_to_class(&f, &s).unwrap();
    assert!((norm - a).abs() < 1e-15 * a);
    assert!(besov_seminorm(&g, &s).unwrap() <= 1.0 + 1e-12);
}

#[test]
fn large_theta_approaches_the_holder_branch() {
    let grid = Grid::for_degree(4, &DegreeVector::uniform(2, 1), None).unwrap();
    for seed in 0..3 {
        let f = random_smooth(&grid, &mut trial_rng(seed, 7));
        let table = ModulusTable::new(&f, &MultiIndex::uniform(2, 2), 2.0, DEFAULT_SHIFT_CAP).unwrap();
        let alpha = [1.0, 1.0];
        let h = seminorm_from_table(&table, &alpha, Theta::Infinite).unwrap().0;
        let b = seminorm_from_table(&table, &alpha, Theta::Finite(1024.0)).unwrap().0;
        assert!((b / h - 1.0).abs() < 0.1, "{b} {h}");
    }
}

#[test]
fn embedding_holds_for_every_theta() {
    let grid = Grid::for_degree(3, &DegreeVector::uniform(2, 1), None).unwrap();
    let alpha = [0.7, 1.4];
    let c1: f64 = alpha.iter().map(|a| 2f64.powf(1.0 + a)).product();
    for seed in 0..4 {
        let f = random_smooth(&grid, &mut trial_rng(seed, 1));
        let table = ModulusTable::new(&f, &MultiIndex::new(vec![1, 2]), 2.0, DEFAULT_SHIFT_CAP).unwrap();
        let (h, hp) = seminorm_from_table(&table, &alpha, Theta::Infinite).unwrap();
        for theta in [1.0, 2.0, 5.0] {
            let (b, bp) = seminorm_from_table(&table, &alpha, Theta::Finite(theta)).unwrap();
            assert!(h <= c1 * b);
            for ((_, x), (_, y)) in hp.iter().zip(&bp) {
                assert!(*x <= c1 * y);
            }
        }
    }
}

#[test]
fn decay_of_a_single_basis_function() {
    let s = params(&[1.0, 1.0], 2.0, f64::INFINITY);
    let grid = Grid::for_degree(3, &s.degree(), None).unwrap();
    let t = Transform::new(&grid, &s.degree()).unwrap();
    let k0 = MultiIndex::new(vec![2, 1]);
    let mut c = DetailCoeffs::zeros(&k0, &s.degree());
    c.coeffs[3] = 1.0;
    let f = t.synthesize_block(&c).unwrap();
    for row in decay_check(&t, &f, &s, 2.0).unwrap() {
        if row.kappa == k0 {
            assert!((row.norm - 1.0).abs() < 1e-12);
            assert!((row.ratio - 8.0).abs() < 1e-10);
        } else {
            assert!(row.ratio < 1e-12, "{}", row.kappa);
        }
    }
}

#[test]
fn decay_model_exponent_shift() {
    let s = params(&[1.5, 0.8], 2.0, 2.0);
    let k = MultiIndex::new(vec![3, 2]);
    let base = 3.0 * 1.5 + 2.0 * 0.8;
    assert_eq!(s.decay_exponent(&k, 1.0), base);
    assert_eq!(s.decay_exponent(&k, 2.0), base);
    assert!((s.decay_exponent(&k, 4.0) - (base - 5.0 * 0.25)).abs() < 1e-15);
}

#[test]
fn extremal_profile_by_construction() {
    for (alpha, p) in [(vec![1.0, 1.0], 2.0), (vec![0.6], 3.0), (vec![1.2, 0.7], 1.5)] {
        let s = params(&alpha, p, f64::INFINITY);
        let dec = extremal_decomposition(&s, 3, 11).unwrap();
        let f = synthesize_extremal(&s, 3, 11).unwrap();
        let t = Transform::new(f.grid(), &s.degree()).unwrap();
        let rows = decay_check(&t, &f, &s, p).unwrap();
        assert!(rows.iter().all(|r| (r.ratio - 1.0).abs() < 1e-6), "{alpha:?}");
        if p == 2.0 {
            let want: f64 = dec.blocks.keys().map(|k| (-2.0 * k.dot(&alpha)).exp2()).sum();
            assert!((f.l2_norm().powi(2) - want).abs() < 1e-10 * want);
        }
        let (g, norm) = normalize_to_class(&f, &s).unwrap();
        assert!(norm.is_finite() && norm > 0.0);
        assert!(besov_seminorm(&g, &s).unwrap() <= 1.0 + 1e-12);
    }
}

#[test]
fn decay_ratios_do_not_grow_with_resolution() {
    let s = params(&[1.0, 1.0], 2.0, f64::INFINITY);
    let mut maxima = Vec::new();
    for level in [3u32, 4, 5] {
        let grid = Grid::for_degree(level, &s.degree(), None).unwrap();
        let f = GridFunction::from_fn(&grid, |x| x.iter().map(|t| (PI * t).sin()).product());
        let (g, _) = normalize_to_class(&f, &s).unwrap();
        let t = Transform::new(&grid, &s.degree()).unwrap();
        maxima.push(max_ratio(&decay_check(&t, &g, &s, 2.0).unwrap()));
    }
    assert!(maxima.iter().all(|&m| m > 0.0 && m < 1.0), "{maxima:?}");
    assert!(maxima[2] <= 1.25 * maxima[0], "{maxima:?}");
}

#[test]
fn incommensurate_shift_is_rejected() {
    let grid = square(2);
    let f = GridFunction::zeros(&grid);
    assert!(mixed_difference(&f, &[0.3, 0.0], &MultiIndex::new(vec![1, 0])).is_err());
    assert!(mixed_modulus(&f, 0, &[0.5, 0.5], &MultiIndex::new(vec![1, 1]), 2.0).is_err());
    assert!(mixed_modulus(&f, 4, &[0.5, 0.5], &MultiIndex::new(vec![1, 1]), 2.0).is_err());
}

#[test]
fn modulus_of_the_identity_in_closed_form() {
    let grid = Grid::new(1, 6, &[2]).unwrap();
    let f = GridFunction::from_fn(&grid, |x| x[0]);
    for p in [1.0, 2.0, 3.5] {
        let w = mixed_modulus(&f, 1, &[0.25], &MultiIndex::new(vec![1]), p).unwrap();
        let want = 0.25 * 0.75f64.powf(1.0 / p);
        assert!((w - want).abs() < 1e-12, "p={p}: {w} vs {want}");
    }
}
