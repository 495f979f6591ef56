mod common;

use mra_core::cz::{cz_split, maximal_function, whitney, CellSet};
use mra_core::dyadic::{nesting, Nesting};
use mra_core::{Grid, GridFunction};

const ALPHA: f64 = 1.0;

#[test]
fn corpus_whitney_geometry() {
    for (name, f) in common::cz_corpus() {
        let r = cz_split(&f, ALPHA).unwrap();
        let w = &r.whitney;
        let fine = 1.0 / (1u64 << w.level) as f64;
        assert!(!w.cubes.is_empty(), "{name}: no cubes");
        for (a, q) in w.cubes.iter().enumerate() {
            let diam = q.diam();
            assert!(diam < w.distances[a], "{name}: {q}");
            assert!(w.distances[a] <= 4.0 * diam + fine, "{name}: {q}");
            for b in &w.cubes[a + 1..] {
                assert_eq!(nesting(q, b), Nesting::Disjoint, "{name}");
            }
        }
        let covered: f64 = w.cubes.iter().map(|q| q.measure()).sum();
        assert!((covered + w.residual - w.w_measure).abs() < 1e-12, "{name}");
        assert!(w.residual <= w.residual_bound(), "{name}");
    }
}

#[test]
fn corpus_split_identities() {
    for (name, f) in common::cz_corpus() {
        let r = cz_split(&f, ALPHA).unwrap();
        let back = r.split.recombine();
        assert!((&back - &f).max_abs() <= 1e-12 * f.max_abs().max(1.0), "{name}");
        let dim = f.grid().dim();
        // A ball around a point of F at distance ≤ 4 diam + 2^{-K} holds the
        // cube once its radius reaches 6 diam.
        let ball = if dim == 1 { 12.0 } else { std::f64::consts::PI * 36.0 * 2.0 };
        for b in &r.split.bad {
            assert!(b.h.integral().abs() <= 1e-12, "{name}: {}", b.h.integral());
            assert!(b.mean.abs() <= 1.1 * ball * ALPHA, "{name}: {}", b.mean);
        }
        // Outside the bad cubes g is f itself.
        let mut touched = vec![false; f.grid().len()];
        for b in &r.split.bad {
            for p in mra_core::cz::points_in_cube(f.grid(), &b.cube) {
                touched[p] = true;
            }
        }
        for (p, t) in touched.iter().enumerate() {
            if !t {
                assert_eq!(r.split.g.values()[p], f.values()[p], "{name}");
            }
        }
    }
}

#[test]
fn unit_interval_demo_levels() {
    let w = whitney(&CellSet::open_unit_cube(1, 6)).unwrap();
    assert_eq!(w.k0, Some(3));
    let first: Vec<(u32, i64)> = w.cubes.iter().take(4).map(|q| (q.level.get(0), q.position[0])).collect();
    assert_eq!(first, vec![(3, 2), (3, 3), (3, 4), (3, 5)]);
    // Symmetric: every accepted cube has its mirror image.
    for q in &w.cubes {
        let k = q.level.get(0);
        let mirror = (1i64 << k) - 1 - q.position[0];
        assert!(w.cubes.iter().any(|c| c.level.get(0) == k && c.position[0] == mirror));
    }
}

#[test]
fn maximal_function_of_constant_on_the_square() {
    let grid = Grid::new(2, 3, &[2, 2]).unwrap();
    let f = GridFunction::from_fn(&grid, |_| 1.0);
    let m = maximal_function(&f).unwrap();
    // Density one in the interior, at least a quarter at the corners; node
    // balls slightly overshoot at sub-cell radii.
    assert!(m.values().iter().all(|&v| (0.25..=1.6).contains(&v)));
    let centre = grid.len() / 2 + grid.axis_len(1) / 2;
    assert!(m.values()[centre] >= 0.99);
}
