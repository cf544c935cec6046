//! Frame and voxel text formats survive format -> parse unchanged.

use fls_core::ingest::{
    format_frames, format_voxels, parse_frames, parse_voxels, read_frames, write_frames, VoxelGrid,
};
use fls_core::{ColorRGBA, Coordinate, FrameSequence, Point, PointSet};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]
}

fn point() -> impl Strategy<Value = Point> {
    (
        any::<f64>(),
        -1e3f64..1e3,
        -1e-3f64..1e-3,
        unit(),
        unit(),
        unit(),
        unit(),
    )
        .prop_filter_map("finite", |(l, h, d, r, g, b, a)| {
            l.is_finite()
                .then(|| Point::new(Coordinate::new(l, h, d), ColorRGBA::new(r, g, b, a)))
        })
}

fn sequence() -> impl Strategy<Value = FrameSequence> {
    (
        prop::sample::select(vec![1.0, 24.0, 29.97, 120.0]),
        prop::collection::vec(prop::collection::vec(point(), 0..5).prop_map(PointSet::new), 0..5),
    )
        .prop_map(|(fps, frames)| FrameSequence::new(fps, frames))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frames_round_trip(seq in sequence()) {
        let text = format_frames(&seq);
        prop_assert_eq!(parse_frames(&text).unwrap(), seq);
    }

    #[test]
    fn voxels_round_trip(
        (dims, values) in (1usize..5, 1usize..5, 1usize..5).prop_flat_map(|(x, y, z)| {
            (Just([x, y, z]), prop::collection::vec(-1e6f64..1e6, x * y * z))
        }),
        spacing in prop::array::uniform3(0.001f64..10.0),
    ) {
        let g = VoxelGrid::new(dims, spacing, values).unwrap();
        prop_assert_eq!(parse_voxels(&format_voxels(&g)).unwrap(), g);
    }

    #[test]
    fn garbage_never_panics(text in "[ -~\n]{0,80}") {
        let _ = parse_frames(&text);
        let _ = parse_voxels(&text);
        let _ = parse_frames(&format!("fps 24\nframe 0\n{text}"));
        let _ = parse_voxels(&format!("dims 2 2 1 spacing 1 1 1\n{text}"));
    }
}

#[test]
fn frames_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("petal.frames");
    let seq = FrameSequence::new(
        24.0,
        vec![PointSet::new(vec![Point::new(
            Coordinate::new(0.0, 2.0, 0.0),
            ColorRGBA::WHITE,
        )])],
    );
    write_frames(&path, &seq).unwrap();
    assert_eq!(read_frames(&path).unwrap(), seq);
}

#[test]
fn rejected_inputs() {
    assert!(parse_frames("").is_err());
    assert!(parse_frames("fps 0\n").is_err());
    assert!(parse_frames("fps 24\n0 0 0 1 1 1 1\n").is_err());
    assert!(parse_frames("fps 24\nframe 1\n").is_err());
    assert!(parse_frames("fps 24\nframe 0\n0 0 0 1 1 1 2\n").is_err());
    assert!(parse_frames("fps 24\nframe 0\n0 0 NaN 1 1 1 1\n").is_err());
    assert!(parse_voxels("dims 2 2 1 spacing 1 1 1\n1 2 3\n").is_err());
    assert!(parse_voxels("dims 0 2 1 spacing 1 1 1\n").is_err());
}
