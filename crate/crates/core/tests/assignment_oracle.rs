//! Assignment against a brute-force permutation oracle.

use fls_core::pathgen::{assign, greedy, hungarian, permutation_cost, AssignMethod};
use fls_core::{ColorRGBA, Coordinate, Point, PointSet};
use proptest::prelude::*;

/// Minimum of the row-order cost sum over every permutation (Heap's
/// algorithm).
fn brute_force_min(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
    let mut best = score(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Padded matrix built independently of the library: a missing partner
/// costs the squared distance to the nearest real point on the other side.
fn oracle_costs(a: &[Coordinate], b: &[Coordinate]) -> Vec<Vec<f64>> {
    let nearest =
        |p: &Coordinate, set: &[Coordinate]| set.iter().map(|q| p.distance_squared(q)).fold(f64::INFINITY, f64::min);
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (a.get(i), b.get(j)) {
                    (Some(p), Some(q)) => p.distance_squared(q),
                    (None, Some(q)) => nearest(q, a),
                    (Some(p), None) => nearest(p, b),
                    (None, None) => unreachable!(),
                })
                .collect()
        })
        .collect()
}

/// Coordinates on a quarter-meter grid: every squared distance and every
/// partial sum is exact in f64, so optimal costs compare bit-for-bit.
fn dyadic_coord() -> impl Strategy<Value = Coordinate> {
    (-8i32..8, -8i32..8, -8i32..8).prop_map(|(l, h, d)| Coordinate::new(l as f64 / 4.0, h as f64 / 4.0, d as f64 / 4.0))
}

fn points(coords: &[Coordinate]) -> PointSet {
    coords.iter().map(|&c| Point::new(c, ColorRGBA::WHITE)).collect()
}

fn is_bijection(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter()
        .all(|&j| j < perm.len() && !std::mem::replace(&mut seen[j], true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_matches_brute_force(
        a in prop::collection::vec(dyadic_coord(), 1..=7),
        b in prop::collection::vec(dyadic_coord(), 1..=7),
    ) {
        let exact = assign(&points(&a), &points(&b), AssignMethod::Exact).unwrap();
        let oracle = brute_force_min(&oracle_costs(&a, &b));
        prop_assert_eq!(exact.total_cost, oracle);
        prop_assert!(is_bijection(&exact.permutation));
        prop_assert_eq!(exact.sources.len(), a.len().max(b.len()));
        prop_assert_eq!(exact.targets.len(), a.len().max(b.len()));

        let greedy = assign(&points(&a), &points(&b), AssignMethod::Greedy).unwrap();
        prop_assert!(is_bijection(&greedy.permutation));
        prop_assert!(greedy.total_cost >= exact.total_cost);
    }

    #[test]
    fn padding_points_are_dark_twins(
        a in prop::collection::vec(dyadic_coord(), 1..=6),
        b in prop::collection::vec(dyadic_coord(), 1..=6),
    ) {
        let r = assign(&points(&a), &points(&b), AssignMethod::Exact).unwrap();
        for p in &r.sources[a.len()..] {
            prop_assert!(!p.color.is_lit());
            prop_assert!(a.contains(&p.coord));
        }
        for p in &r.targets[b.len()..] {
            prop_assert!(!p.color.is_lit());
            prop_assert!(b.contains(&p.coord));
        }
    }

    #[test]
    fn hungarian_is_optimal_on_arbitrary_matrices(
        n in 1usize..=6,
        seed in prop::collection::vec(0.0f64..100.0, 36),
    ) {
        let cost: Vec<Vec<f64>> = (0..n).map(|i| seed[i * n..(i + 1) * n].to_vec()).collect();
        let exact = permutation_cost(&cost, &hungarian(&cost));
        let oracle = brute_force_min(&cost);
        prop_assert!((exact - oracle).abs() <= 1e-9 * (1.0 + oracle), "{} vs {}", exact, oracle);
        prop_assert!(permutation_cost(&cost, &greedy(&cost)) >= exact - 1e-9);
    }
}

#[test]
fn five_point_instance() {
    let a = [
        (0.0, 0.0, 0.0),
        (1.0, 0.0, 0.0),
        (0.0, 2.0, 0.0),
        (3.0, 1.0, 1.0),
        (-1.0, -1.0, 2.0),
    ];
    let b = [
        (0.5, 0.0, 0.0),
        (3.0, 0.0, 1.0),
        (0.0, 1.5, 0.5),
        (-1.0, 0.0, 2.0),
        (1.0, 1.0, 1.0),
    ];
    let ca: Vec<Coordinate> = a.iter().map(|&(l, h, d)| Coordinate::new(l, h, d)).collect();
    let cb: Vec<Coordinate> = b.iter().map(|&(l, h, d)| Coordinate::new(l, h, d)).collect();
    let r = assign(&points(&ca), &points(&cb), AssignMethod::Exact).unwrap();
    assert_eq!(r.total_cost, brute_force_min(&oracle_costs(&ca, &cb)));
}
