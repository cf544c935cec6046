//! Organ labelling against a union-find oracle, and voxel-to-point
//! conversion against a direct count.

use std::collections::BTreeMap;

use fls_core::ingest::{voxels_to_points, TransferTable, VoxelGrid};
use fls_core::mri::label_organs;
use proptest::prelude::*;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            x = std::mem::replace(&mut self.0[x], r);
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Components as sorted voxel lists, ordered by smallest member. Neighbours
/// are found from raw (i, j, k) arithmetic rather than the grid's helpers.
fn oracle(dims: [usize; 3], values: &[f64], threshold: f64) -> Vec<Vec<usize>> {
    let [nx, ny, nz] = dims;
    let at = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let on = |idx: usize| values[idx] >= threshold;
    let mut uf = UnionFind((0..values.len()).collect());
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = at(i, j, k);
                if !on(v) {
                    continue;
                }
                if i + 1 < nx && on(at(i + 1, j, k)) {
                    uf.union(v, at(i + 1, j, k));
                }
                if j + 1 < ny && on(at(i, j + 1, k)) {
                    uf.union(v, at(i, j + 1, k));
                }
                if k + 1 < nz && on(at(i, j, k + 1)) {
                    uf.union(v, at(i, j, k + 1));
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in (0..values.len()).filter(|&v| on(v)) {
        let root = uf.find(v);
        groups.entry(root).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

fn grid() -> impl Strategy<Value = ([usize; 3], Vec<f64>)> {
    (1usize..=16, 1usize..=16, 1usize..=16, 0.2f64..0.8).prop_flat_map(|(x, y, z, density)| {
        let n = x * y * z;
        (
            Just([x, y, z]),
            prop::collection::vec(prop::bool::weighted(density), n)
                .prop_map(|bits| bits.into_iter().map(|b| if b { 0.9 } else { 0.1 }).collect()),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn components_match_union_find((dims, values) in grid()) {
        let g = VoxelGrid::new(dims, [1.0; 3], values.clone()).unwrap();
        let organs = label_organs(&g, 0.5);
        let expected = oracle(dims, &values, 0.5);
        prop_assert_eq!(organs.len(), expected.len());
        for (k, (organ, want)) in organs.iter().zip(&expected).enumerate() {
            prop_assert_eq!(&organ.voxels, want);
            prop_assert_eq!(organ.size(), want.len());
            prop_assert_eq!(&organ.name, &format!("region-{}", k + 1));
        }
        // the components partition the above-threshold voxels
        let mut all: Vec<usize> = organs.iter().flat_map(|o| o.voxels.iter().copied()).collect();
        all.sort();
        let lit: Vec<usize> = (0..values.len()).filter(|&v| values[v] >= 0.5).collect();
        prop_assert_eq!(all, lit);
    }

    #[test]
    fn point_count_matches_threshold(
        (dims, values) in (1usize..=6, 1usize..=6, 1usize..=6).prop_flat_map(|(x, y, z)| {
            (Just([x, y, z]), prop::collection::vec(0.0f64..1.0, x * y * z))
        }),
        lo in 0.0f64..1.0,
        hi in 0.0f64..1.0,
    ) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let g = VoxelGrid::new(dims, [0.5, 1.0, 2.0], values.clone()).unwrap();
        let t = TransferTable::grayscale();
        let at_lo = voxels_to_points(&g, lo, &t);
        let at_hi = voxels_to_points(&g, hi, &t);
        prop_assert_eq!(at_lo.len(), values.iter().filter(|&&v| v >= lo).count());
        prop_assert!(at_hi.len() <= at_lo.len());
        for p in &at_lo.points {
            let v = g.voxel_at(&p.coord).unwrap();
            prop_assert_eq!(p.coord, g.center(v));
        }
    }
}

#[test]
fn corner_contact_is_two_components() {
    let mut values = vec![0.0; 8];
    values[0] = 1.0; // (0,0,0)
    values[7] = 1.0; // (1,1,1)
    let g = VoxelGrid::new([2, 2, 2], [1.0; 3], values).unwrap();
    assert_eq!(label_organs(&g, 0.5).len(), 2);
    // an edge-only contact is still two under face connectivity
    let mut values = vec![0.0; 8];
    values[0] = 1.0;
    values[3] = 1.0; // (1,1,0)
    let g = VoxelGrid::new([2, 2, 2], [1.0; 3], values).unwrap();
    assert_eq!(label_organs(&g, 0.5).len(), 2);
}

#[test]
fn threshold_is_inclusive() {
    let g = VoxelGrid::new([3, 1, 1], [1.0; 3], vec![0.5, 0.49, 0.5]).unwrap();
    let organs = label_organs(&g, 0.5);
    assert_eq!(
        organs.iter().map(|o| o.voxels.clone()).collect::<Vec<_>>(),
        vec![vec![0], vec![2]]
    );
}
