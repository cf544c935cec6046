//! Schema construction and validation, with cycle detection checked against
//! a reachability oracle.

use std::collections::BTreeSet;

use fls_core::model::names::*;
use fls_core::model::{animation_schema, core_schema, mri_schema, validate, Attrs, SchemaRegistry, ViolationKind};
use fls_core::{EntityId, ModelGraph};
use proptest::prelude::*;

fn obj(g: &mut ModelGraph, name: &str) -> EntityId {
    g.create_entity(OBJECTS, Attrs::new().with("name", name)).unwrap()
}

/// Number of strongly connected components with more than one node, found
/// by pairwise mutual reachability.
fn cyclic_components(n: usize, edges: &BTreeSet<(usize, usize)>) -> usize {
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    // Warshall closure
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut() {
            if row[k] {
                for (cell, &hop) in row.iter_mut().zip(&via) {
                    *cell |= hop;
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut count = 0;
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| j == i || (reach[i][j] && reach[j][i])).collect();
        for &j in &class {
            assigned[j] = true;
        }
        if class.len() > 1 {
            count += 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn cycles_match_reachability_oracle(
        n in 2usize..12,
        raw in prop::collection::vec((0usize..12, 0usize..12), 0..30),
    ) {
        let edges: BTreeSet<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
        let mut g = ModelGraph::new(core_schema());
        let ids: Vec<EntityId> = (0..n).map(|i| obj(&mut g, &format!("o{i}"))).collect();
        for &(a, b) in &edges {
            g.link(CONSISTS_OF, [(ROLE_WHOLE, ids[a].into()), (ROLE_PART, ids[b].into())], Attrs::new())
                .unwrap();
        }
        let report = validate(&g);
        prop_assert_eq!(report.of_kind(ViolationKind::ContainmentCycle).count(), cyclic_components(n, &edges));
    }
}

#[test]
fn shipped_schemas_build() {
    let registry = SchemaRegistry::with_builtins();
    for s in [core_schema(), animation_schema(), mri_schema()] {
        assert!(registry.get(s.name()).is_some());
    }
    assert!(mri_schema().entity_set(ORGANS).is_some());
    assert!(animation_schema().entity_set(KEYFRAME).is_some());
}

#[test]
fn flight_path_participation_is_total() {
    let mut g = ModelGraph::new(core_schema());
    let petal = obj(&mut g, "petal");
    let report = validate(&g);
    assert_eq!(report.of_kind(ViolationKind::TotalParticipation).count(), 1);
    assert!(!report.is_valid());

    let fls = g
        .create_entity(
            FLSS,
            Attrs::new()
                .with("nu", 1.0)
                .with("beta", 60.0)
                .with("force_n", 0.5)
                .with("omega", 30.0),
        )
        .unwrap();
    g.link(
        FLIGHT_PATHS,
        [(ROLE_OBJECT, petal.into()), (ROLE_FLS, fls.into())],
        Attrs::new(),
    )
    .unwrap();
    assert!(validate(&g).is_valid(), "{}", validate(&g));
}

#[test]
fn self_loops_are_rejected_at_link_time() {
    let mut g = ModelGraph::new(core_schema());
    let a = obj(&mut g, "a");
    assert!(g
        .link(
            CONSISTS_OF,
            [(ROLE_WHOLE, a.into()), (ROLE_PART, a.into())],
            Attrs::new()
        )
        .is_err());
}
