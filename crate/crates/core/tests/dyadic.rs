use mra_core::dyadic::{
    counting_ratios, enum_box, enum_cross, enum_shell, in_cross, nesting, CrossParams, DyadicCube, MultiIndex, Nesting,
};
use mra_core::widths::cross_dimension;
use mra_core::DegreeVector;
use proptest::prelude::*;

/// Interval-by-interval comparison in floating point (exact for these dyadics).
fn nesting_oracle(a: &DyadicCube, b: &DyadicCube) -> Nesting {
    let iv = |q: &DyadicCube, j: usize| {
        let s = q.side(j);
        (q.position[j] as f64 * s, (q.position[j] + 1) as f64 * s)
    };
    let mut meet = true;
    let (mut a_in_b, mut b_in_a) = (true, true);
    for j in 0..a.dim() {
        let (a0, a1) = iv(a, j);
        let (b0, b1) = iv(b, j);
        meet &= a0.max(b0) < a1.min(b1);
        a_in_b &= b0 <= a0 && a1 <= b1;
        b_in_a &= a0 <= b0 && b1 <= a1;
    }
    match (meet, a_in_b, b_in_a) {
        (false, _, _) => Nesting::Disjoint,
        (true, true, true) => Nesting::Equal,
        (true, true, false) => Nesting::AInsideB,
        (true, false, true) => Nesting::BInsideA,
        (true, false, false) => Nesting::Crossing,
    }
}

fn cube_strategy(dim: usize) -> impl Strategy<Value = DyadicCube> {
    proptest::collection::vec(0u32..5, dim).prop_flat_map(|lv| {
        let pos: Vec<_> = lv.iter().map(|&k| -1i64..(1i64 << k) + 1).collect();
        (Just(lv), pos)
    })
    .prop_map(|(lv, pos)| DyadicCube::new(MultiIndex::new(lv), pos).unwrap())
}

proptest! {
    #[test]
    fn nesting_matches_interval_oracle((a, b) in (1usize..=3).prop_flat_map(|d| (cube_strategy(d), cube_strategy(d)))) {
        prop_assert_eq!(nesting(&a, &b), nesting_oracle(&a, &b));
    }

    #[test]
    fn comparable_levels_never_cross((a, b) in (1usize..=3).prop_flat_map(|d| (cube_strategy(d), cube_strategy(d)))) {
        let rel = nesting(&a, &b);
        if a.level.le(&b.level) || b.level.le(&a.level) {
            prop_assert_ne!(rel, Nesting::Crossing);
        }
        if b.level.le(&a.level) && rel != Nesting::Disjoint {
            prop_assert!(matches!(rel, Nesting::AInsideB | Nesting::Equal));
        }
    }

    #[test]
    fn cross_equals_filtered_box(beta in proptest::collection::vec(1.0f64..3.0, 1..=3), r in 0u32..8) {
        let got = enum_cross(&CrossParams::new(beta.clone(), r).unwrap());
        let brute: Vec<MultiIndex> = enum_box(&MultiIndex::uniform(beta.len(), r))
            .into_iter()
            .filter(|k| k.dot(&beta) <= r as f64 + 1e-9)
            .collect();
        prop_assert_eq!(got, brute);
    }

    #[test]
    fn shells_partition_the_cross(beta in proptest::collection::vec(1.0f64..2.5, 1..=3), r in 1u32..7) {
        let mut union: Vec<MultiIndex> = vec![MultiIndex::zeros(beta.len())];
        for s in 1..=r {
            union.extend(enum_shell(&beta, s).unwrap());
        }
        union.sort();
        let cross = enum_cross(&CrossParams::new(beta.clone(), r).unwrap());
        prop_assert_eq!(union, cross);
    }
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn uniform_cross_cardinality() {
    for d in 1..=4u64 {
        for r in 0..=8u32 {
            let n = enum_cross(&CrossParams::new(vec![1.0; d as usize], r).unwrap()).len() as u64;
            assert_eq!(n, binom(r as u64 + d, d));
        }
    }
}

#[test]
fn ties_on_the_cross_boundary_are_included() {
    let k = MultiIndex::new(vec![1, 2]);
    assert!(in_cross(&k, &[1.0, 1.0], 3.0));
    assert!(!in_cross(&k, &[1.0, 1.0], 2.999));
}

/// Dimension of the degree-one cross over the exact leading constant
/// `2/(d-1)!`: `Σ_{|κ|≤r} dim 𝔓_κ ~ Σ_{s≤r} C(s-1,d-1) 2^s`.
#[test]
fn cross_dimension_law() {
    for d in 1..=3usize {
        let deg = DegreeVector::uniform(d, 1);
        let limit = 2.0 / (1..d).product::<usize>().max(1) as f64;
        let ratios: Vec<f64> = (4..=14)
            .map(|r| {
                let n = cross_dimension(&vec![1.0; d], r as f64, &deg) as f64;
                n / (2f64.powi(r) * (r as f64).powi(d as i32 - 1))
            })
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "d={d}: {ratios:?}");
        }
        assert!(ratios.iter().all(|&x| x >= limit && x <= 4.0 * limit), "d={d}: {ratios:?}");
    }
}

#[test]
fn counting_ratios_stay_bounded() {
    for (beta, alpha) in [(vec![1.0, 1.5], vec![1.0, 2.0]), (vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0])] {
        let rows = counting_ratios(&beta, &alpha, 12).unwrap();
        let head: Vec<f64> = rows.iter().skip(3).map(|r| r.head_ratio()).collect();
        let tail: Vec<f64> = rows.iter().skip(3).map(|r| r.tail_ratio()).collect();
        for v in [head, tail] {
            let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(lo > 0.0 && hi / lo < 8.0, "{v:?}");
        }
    }
}
