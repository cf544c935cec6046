//! Curve evaluation against closed forms, and sampling consistency across
//! frame rates.

use fls_core::animation::{add_keyframe, Channel, Handle, Keyframe};
use fls_core::interp::{default_tolerance, eval_bezier, eval_linear, sample_object};
use fls_core::model::names::OBJECTS;
use fls_core::model::{animation_schema, Attrs};
use fls_core::{ColorRGBA, Coordinate, FrameSequence, ModelGraph, Point, PointSet};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn linear_matches_closed_form_on_random_segments() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t0 = rng.gen_range(-10.0..10.0);
        let t1 = t0 + rng.gen_range(0.01..10.0);
        let (v0, v1) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let t = rng.gen_range(t0..=t1);
        let k0 = Keyframe::linear(Channel::PositionH, t0, v0);
        let k1 = Keyframe::linear(Channel::PositionH, t1, v1);
        let expected = v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        worst = worst.max((eval_linear(&k0, &k1, t).unwrap() - expected).abs());
    }
    assert!(worst <= 1e-12, "max error {worst}");
}

fn bezier_pair(t0: f64, v0: f64, t1: f64, v1: f64, out: Handle, inc: Handle) -> (Keyframe, Keyframe) {
    (
        Keyframe::bezier(Channel::PositionL, t0, v0, Handle::new(-out.dt, -out.dv), out),
        Keyframe::bezier(Channel::PositionL, t1, v1, inc, Handle::new(-inc.dt, -inc.dv)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bezier_hits_its_endpoints(
        t0 in -5.0f64..5.0, dt in 0.1f64..5.0, v0 in -5.0f64..5.0, v1 in -5.0f64..5.0,
        a in 0.0f64..1.0, b in 0.0f64..1.0, dv0 in -3.0f64..3.0, dv1 in -3.0f64..3.0,
    ) {
        let (k0, k1) = bezier_pair(t0, v0, t0 + dt, v1, Handle::new(a * dt, dv0), Handle::new(-b * dt, dv1));
        prop_assert_eq!(eval_bezier(&k0, &k1, k0.time, None).unwrap(), v0);
        prop_assert_eq!(eval_bezier(&k0, &k1, k1.time, None).unwrap(), v1);
    }

    #[test]
    fn collinear_handles_reduce_to_linear(
        t0 in -5.0f64..5.0, dt in 0.1f64..5.0, v0 in -5.0f64..5.0, v1 in -5.0f64..5.0,
    ) {
        let dv = v1 - v0;
        let (k0, k1) = bezier_pair(t0, v0, t0 + dt, v1, Handle::new(dt / 3.0, dv / 3.0), Handle::new(-dt / 3.0, -dv / 3.0));
        let l0 = Keyframe::linear(Channel::PositionL, t0, v0);
        let l1 = Keyframe::linear(Channel::PositionL, t0 + dt, v1);
        for i in 0..=100 {
            let t = t0 + dt * i as f64 / 100.0;
            let t = t.min(t0 + dt);
            let err = (eval_bezier(&k0, &k1, t, None).unwrap() - eval_linear(&l0, &l1, t).unwrap()).abs();
            prop_assert!(err <= 1e-9, "t={} err={}", t, err);
        }
    }
}

#[test]
fn symmetric_s_curve_midpoint() {
    let (k0, k1) = bezier_pair(0.0, 0.0, 1.0, 1.0, Handle::new(0.5, 0.0), Handle::new(-0.5, 0.0));
    let tol = default_tolerance(&k0, &k1);
    let mid = eval_bezier(&k0, &k1, 0.5, None).unwrap();
    assert!((mid - 0.5).abs() <= tol, "{mid}");
    // and it is monotone with flat ends
    assert!(eval_bezier(&k0, &k1, 0.05, None).unwrap() < 0.05);
    assert!(eval_bezier(&k0, &k1, 0.95, None).unwrap() > 0.95);
}

#[test]
fn doubling_the_rate_reproduces_shared_frames() {
    let mut g = ModelGraph::new(animation_schema());
    let petal = g.create_entity(OBJECTS, Attrs::new().with("name", "petal")).unwrap();
    let cloud: PointSet = [(0.0, 0.0, 0.0), (0.1, 0.05, 0.0), (-0.1, 0.02, 0.03)]
        .iter()
        .map(|&(l, h, d)| Point::new(Coordinate::new(l, h, d), ColorRGBA::new(0.9, 0.2, 0.3, 1.0)))
        .collect();
    g.set_geometry(petal, FrameSequence::new(24.0, vec![cloud])).unwrap();
    for (t, v) in [(0.0, 2.0), (1.3, 1.4), (2.1, 1.5), (3.7, 0.4), (5.0, 0.0)] {
        let k = Keyframe::bezier(Channel::PositionH, t, v, Handle::new(-0.3, 0.1), Handle::new(0.3, -0.1));
        add_keyframe(&mut g, petal, k, false).unwrap();
    }
    add_keyframe(&mut g, petal, Keyframe::linear(Channel::PositionL, 0.0, 0.0), false).unwrap();
    add_keyframe(&mut g, petal, Keyframe::linear(Channel::PositionL, 5.0, 0.7), false).unwrap();
    add_keyframe(&mut g, petal, Keyframe::linear(Channel::ColorA, 4.0, 1.0), false).unwrap();
    add_keyframe(&mut g, petal, Keyframe::linear(Channel::ColorA, 5.0, 0.0), false).unwrap();

    let slow = sample_object(&g, petal, 24.0, 0.0, 5.0).unwrap();
    let fast = sample_object(&g, petal, 48.0, 0.0, 5.0).unwrap();
    assert_eq!(slow.frames.len(), 121);
    assert_eq!(fast.frames.len(), 241);
    for (k, frame) in slow.frames.iter().enumerate() {
        assert_eq!(frame, &fast.frames[2 * k], "frame {k}");
    }
    // the keys themselves are hit
    let h_at = |k: usize| slow.frames[k].points[0].coord.h;
    assert_eq!(h_at(0), 2.0);
    assert_eq!(h_at(120), 0.0);
}
