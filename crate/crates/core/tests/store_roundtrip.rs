//! Model text and flight-path binary round-trips, plus robustness against
//! corrupted input.

use fls_core::model::names::*;
use fls_core::model::{core_schema, AttrValue, Attrs, RecordRef, Scalar, SchemaRegistry};
use fls_core::pathgen::{FlightPathSet, FlightSegment};
use fls_core::store::{decode_flight_paths, encode_flight_paths, format_model, parse_model, read_model, write_model};
use fls_core::{ColorRGBA, Coordinate, EntityId, FlsSpec, FrameSequence, ModelGraph, Point, PointSet};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Words that exercise quoting: separators, escapes, unicode, empties.
const AWKWARD: &[&str] = &[
    "rose",
    "falling petal",
    "a=b",
    "say \"hi\"",
    "back\\slash",
    "line\nbreak",
    "tab\there",
    "[list],",
    "#hash",
    "",
    "ünïcödé ✿",
    "ctrl\u{7}",
];

fn word(rng: &mut StdRng) -> String {
    AWKWARD[rng.gen_range(0..AWKWARD.len())].to_string()
}

fn float(rng: &mut StdRng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(0..100) as f64,
        1 => rng.gen::<f64>(),
        2 => rng.gen_range(-1e6..1e6),
        _ => 0.1 + 0.2,
    }
}

fn color(rng: &mut StdRng) -> ColorRGBA {
    ColorRGBA::new(rng.gen(), rng.gen(), rng.gen(), rng.gen())
}

fn random_graph(seed: u64) -> ModelGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut g = ModelGraph::new(core_schema());
    let subject = g
        .create_entity(SUBJECT, Attrs::new().with("name", word(&mut rng)))
        .unwrap();
    let mut objects: Vec<EntityId> = Vec::new();
    for _ in 0..rng.gen_range(0..8) {
        let mut attrs = Attrs::new().with("name", word(&mut rng));
        if rng.gen_bool(0.3) {
            attrs.set("unilluminated", rng.gen::<bool>());
        }
        let id = g.create_entity(OBJECTS, attrs).unwrap();
        if rng.gen_bool(0.5) {
            let frames = (0..rng.gen_range(1..4))
                .map(|_| {
                    (0..rng.gen_range(0..4))
                        .map(|_| {
                            Point::new(
                                Coordinate::new(float(&mut rng), float(&mut rng), float(&mut rng)),
                                color(&mut rng),
                            )
                        })
                        .collect::<PointSet>()
                })
                .collect();
            let mut seq = FrameSequence::new([1.0, 24.0, 29.97][rng.gen_range(0..3)], frames);
            seq.t0 = float(&mut rng).abs();
            g.set_geometry(id, seq).unwrap();
        }
        objects.push(id);
    }
    // leave gaps in the id sequence
    if objects.len() > 2 && rng.gen_bool(0.5) {
        let victim = objects.remove(rng.gen_range(0..objects.len()));
        g.delete_entity(victim, true).unwrap();
    }
    for &o in &objects {
        if rng.gen_bool(0.5) {
            let s = rng.gen_range(0.0..10.0);
            g.link(
                CONTAINS,
                [(ROLE_SUBJECT, subject.into()), (ROLE_OBJECT, o.into())],
                Attrs::new().with("duration", (s, s + rng.gen_range(0.0..5.0))),
            )
            .unwrap();
        }
    }
    let mut rels = Vec::new();
    for _ in 0..rng.gen_range(0..6) {
        if objects.len() < 2 {
            break;
        }
        let a = objects[rng.gen_range(0..objects.len())];
        let b = objects[rng.gen_range(0..objects.len())];
        if a == b {
            continue;
        }
        let r = if rng.gen_bool(0.5) {
            g.link(
                CONSISTS_OF,
                [(ROLE_WHOLE, a.into()), (ROLE_PART, b.into())],
                Attrs::new(),
            )
        } else {
            let (x, y) = (float(&mut rng), float(&mut rng));
            let mut attrs = Attrs::new().with("duration", (x.min(y), x.max(y)));
            if rng.gen_bool(0.5) {
                attrs.set("description", word(&mut rng));
            }
            g.link(INTERACTIONS, [(ROLE_SOURCE, a.into()), (ROLE_TARGET, b.into())], attrs)
        };
        rels.push(r.unwrap());
    }
    for (i, &o) in objects.iter().enumerate() {
        if rng.gen_bool(0.4) {
            let fls = g
                .create_entity(
                    FLSS,
                    Attrs::new()
                        .with("nu", 1.5)
                        .with("beta", 60.0)
                        .with("force_n", 0.0)
                        .with("omega", 30.0)
                        .with("model", word(&mut rng))
                        .with("index", i as f64),
                )
                .unwrap();
            let n = rng.gen_range(0..4);
            let intervals = AttrValue::Many((0..n).map(|k| Scalar::Interval(k as f64, k as f64 + 0.5)).collect());
            let mut bindings = vec![(ROLE_OBJECT, RecordRef::from(o)), (ROLE_FLS, fls.into())];
            if let Some(&r) = rels.first() {
                if g.relationship(r).unwrap().set == INTERACTIONS {
                    bindings.push(("interaction", r.into()));
                }
            }
            g.link(FLIGHT_PATHS, bindings, Attrs::new().with("interval", intervals))
                .unwrap();
        }
    }
    for _ in 0..rng.gen_range(0..5) {
        let target: RecordRef = match (objects.is_empty(), rels.is_empty(), rng.gen_bool(0.5)) {
            (false, _, true) | (false, true, _) => objects[rng.gen_range(0..objects.len())].into(),
            (_, false, _) => rels[rng.gen_range(0..rels.len())].into(),
            _ => subject.into(),
        };
        g.add_annotation(
            target,
            &word(&mut rng),
            &word(&mut rng),
            &word(&mut rng),
            rng.gen_range(0..u64::MAX),
        )
        .unwrap();
    }
    g
}

fn random_paths(seed: u64) -> FlightPathSet {
    let mut rng = StdRng::seed_from_u64(seed);
    let fps = [1.0, 24.0, 30.0, 29.97][rng.gen_range(0..4)];
    let paths = (0..rng.gen_range(0..6))
        .map(|_| {
            // one timeline per FLS, dealt out to its segments
            let mut segs: Vec<FlightSegment> = (0..rng.gen_range(1..4))
                .map(|_| FlightSegment {
                    intervals: Vec::new(),
                    coord: Coordinate::new(float(&mut rng), float(&mut rng), float(&mut rng)),
                    color: color(&mut rng),
                })
                .collect();
            let mut t = rng.gen_range(0.0..2.0);
            for _ in 0..rng.gen_range(0..8) {
                let s = t;
                t += rng.gen_range(0.01..1.0);
                let k = rng.gen_range(0..segs.len());
                segs[k].intervals.push((s, t));
                if rng.gen_bool(0.5) {
                    t += rng.gen_range(0.01..1.0);
                }
            }
            segs.retain(|s| !s.intervals.is_empty());
            segs.sort_by(|a, b| a.intervals[0].0.total_cmp(&b.intervals[0].0));
            segs
        })
        .collect();
    FlightPathSet {
        fps,
        fls_spec: None,
        paths,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn model_text_is_a_fixed_point(seed in any::<u64>()) {
        let g = random_graph(seed);
        let registry = SchemaRegistry::with_builtins();
        let first = format_model(&g);
        let back = parse_model(&first, &registry).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.next_id(), g.next_id());
        prop_assert_eq!(format_model(&back), first);
    }

    #[test]
    fn flight_file_is_a_fixed_point(seed in any::<u64>()) {
        let set = random_paths(seed);
        let first = encode_flight_paths(&set).unwrap();
        let back = decode_flight_paths(&first).unwrap();
        prop_assert_eq!(back.fls_count(), set.fls_count());
        prop_assert_eq!(encode_flight_paths(&back).unwrap(), first);
        for (a, b) in set.paths.iter().zip(&back.paths) {
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(&x.intervals, &y.intervals);
                prop_assert_eq!(x.coord, y.coord);
                prop_assert!(x.color.max_channel_diff(&y.color) <= 0.5 / 255.0 + 1e-12);
            }
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = decode_flight_paths(&bytes);
    }

    #[test]
    fn mutated_flight_files_never_panic(seed in any::<u64>(), pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<prop::sample::Index>()) {
        let mut bytes = encode_flight_paths(&random_paths(seed)).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] = byte;
        let _ = decode_flight_paths(&bytes);
        bytes.truncate(cut.index(bytes.len()));
        let _ = decode_flight_paths(&bytes);
    }

    #[test]
    fn mutated_model_text_never_panics(seed in any::<u64>(), pos in any::<prop::sample::Index>(), junk in "[ -~\n]{0,12}") {
        let text = format_model(&random_graph(seed));
        let mut at = pos.index(text.len() + 1);
        while !text.is_char_boundary(at) {
            at -= 1;
        }
        let registry = SchemaRegistry::with_builtins();
        let _ = parse_model(&format!("{}{}{}", &text[..at], junk, &text[at..]), &registry);
        let _ = parse_model(&text[..at], &registry);
    }
}

#[test]
fn single_interval_file_is_seventy_bytes() {
    let set = FlightPathSet {
        fps: 24.0,
        fls_spec: Some(FlsSpec::new("mk1", 1.0, 60.0, 0.0, 30.0).unwrap()),
        paths: vec![vec![FlightSegment {
            intervals: vec![(0.0, 1.0)],
            coord: Coordinate::new(1.0, 2.0, 3.0),
            color: ColorRGBA::WHITE,
        }]],
    };
    assert_eq!(encode_flight_paths(&set).unwrap().len(), 70);
}

#[test]
fn files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.flsm");
    let g = random_graph(7);
    write_model(&g, &path, true).unwrap();
    let back = read_model(&path, &SchemaRegistry::with_builtins()).unwrap();
    assert_eq!(back, g);
    assert!(read_model(dir.path().join("missing.flsm"), &SchemaRegistry::with_builtins()).is_err());
}
