use std::collections::HashMap;

use crate::geom::{ColorRGBA, Coordinate, Point};

use super::FlightSegment;

/// Matching thresholds for coalescing: Euclidean coordinate distance in
/// meters and per-channel color difference. Zero means exact equality.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Eps {
    pub coord: f64,
    pub color: f64,
}

impl Eps {
    pub const EXACT: Eps = Eps { coord: 0.0, color: 0.0 };

    pub fn new(coord: f64, color: f64) -> Self {
        Self { coord, color }
    }

    fn matches(&self, seg: &FlightSegment, p: &Point) -> bool {
        seg.coord.distance(&p.coord) <= self.coord && seg.color.max_channel_diff(&p.color) <= self.color
    }
}

// -0.0 and 0.0 must hash alike since they compare equal.
fn norm_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

type StateKey = [u64; 7];

fn state_key(p: &Point) -> StateKey {
    let c = p.color.channels();
    [
        norm_bits(p.coord.l),
        norm_bits(p.coord.h),
        norm_bits(p.coord.d),
        norm_bits(c[0]),
        norm_bits(c[1]),
        norm_bits(c[2]),
        norm_bits(c[3]),
    ]
}

/// Groups `(start, end, point)` samples of one FLS into segments.
///
/// A sample joins the first existing segment whose state matches within
/// `eps`; otherwise it opens a new one. A sample that starts where the
/// segment's last interval ends (within `join_tol` seconds) extends that
/// interval instead of adding a new one.
pub(crate) fn coalesce_spans(samples: &[(f64, f64, Point)], eps: Eps, join_tol: f64) -> Vec<FlightSegment> {
    let mut segments: Vec<FlightSegment> = Vec::new();
    let mut exact: HashMap<StateKey, usize> = HashMap::new();
    let use_hash = eps.coord == 0.0 && eps.color == 0.0;
    for &(start, end, p) in samples {
        let found = if use_hash {
            exact.get(&state_key(&p)).copied()
        } else {
            segments.iter().position(|s| eps.matches(s, &p))
        };
        match found {
            Some(i) => {
                let intervals = &mut segments[i].intervals;
                let last = intervals.last_mut().expect("segments hold at least one interval");
                if start <= last.1 + join_tol {
                    last.1 = last.1.max(end);
                } else {
                    intervals.push((start, end));
                }
            }
            None => {
                if use_hash {
                    exact.insert(state_key(&p), segments.len());
                }
                segments.push(FlightSegment {
                    intervals: vec![(start, end)],
                    coord: p.coord,
                    color: p.color,
                });
            }
        }
    }
    segments.sort_by(|a, b| a.intervals[0].0.total_cmp(&b.intervals[0].0));
    segments
}

/// Coalesces time-sorted per-frame samples `(t, coord, color)` of one FLS.
/// Each sample covers `[t, t + 1/fps)`.
pub fn coalesce_intervals(samples: &[(f64, Coordinate, ColorRGBA)], fps: f64, eps: Eps) -> Vec<FlightSegment> {
    let dt = 1.0 / fps;
    let spans: Vec<(f64, f64, Point)> = samples.iter().map(|&(t, c, k)| (t, t + dt, Point::new(c, k))).collect();
    coalesce_spans(&spans, eps, 1e-9 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Coordinate = Coordinate::new(0.0, 0.0, 0.0);
    const Y: Coordinate = Coordinate::new(1.0, 0.0, 0.0);
    const W: ColorRGBA = ColorRGBA::WHITE;

    #[test]
    fn constant_samples_merge_into_one_interval() {
        let segs = coalesce_intervals(&[(0.0, X, W), (0.5, X, W)], 2.0, Eps::EXACT);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].intervals, vec![(0.0, 1.0)]);
    }

    #[test]
    fn returning_state_reuses_its_segment() {
        let segs = coalesce_intervals(&[(0.0, X, W), (0.5, Y, W), (1.0, X, W)], 2.0, Eps::EXACT);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].coord, X);
        assert_eq!(segs[0].intervals, vec![(0.0, 0.5), (1.0, 1.5)]);
        assert_eq!(segs[1].intervals, vec![(0.5, 1.0)]);
    }

    #[test]
    fn coordinate_threshold() {
        let eps = Eps::new(0.01, 0.0);
        let near = Coordinate::new(0.005, 0.0, 0.0);
        let far = Coordinate::new(0.02, 0.0, 0.0);
        assert_eq!(coalesce_intervals(&[(0.0, X, W), (1.0, near, W)], 1.0, eps).len(), 1);
        assert_eq!(coalesce_intervals(&[(0.0, X, W), (1.0, far, W)], 1.0, eps).len(), 2);
    }

    #[test]
    fn color_threshold_per_channel() {
        let eps = Eps::new(0.0, 0.1);
        let dim = ColorRGBA::new(1.0, 0.95, 1.0, 1.0);
        let off = ColorRGBA::new(1.0, 0.7, 1.0, 1.0);
        assert_eq!(coalesce_intervals(&[(0.0, X, W), (1.0, X, dim)], 1.0, eps).len(), 1);
        assert_eq!(coalesce_intervals(&[(0.0, X, W), (1.0, X, off)], 1.0, eps).len(), 2);
    }

    #[test]
    fn signed_zero_is_the_same_state() {
        let neg = Coordinate::new(-0.0, 0.0, 0.0);
        assert_eq!(
            coalesce_intervals(&[(0.0, X, W), (1.0, neg, W)], 1.0, Eps::EXACT).len(),
            1
        );
    }
}
