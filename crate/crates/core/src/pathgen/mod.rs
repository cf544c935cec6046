//! Compiling frame sequences into per-FLS flight paths.
//!
//! Consecutive frames are matched with [`assign`]; following the matches
//! from the first frame to the last gives each FLS one sample per frame.
//! Samples are then coalesced so that an FLS that revisits a state (same
//! coordinate and color) reuses one segment with several time intervals.

mod assign;
mod coalesce;
mod feasibility;

pub use assign::{
    assign, assign_with, greedy, hungarian, permutation_cost, AssignConfig, AssignMethod, Assignment,
    DEFAULT_EXACT_CUTOFF,
};
pub use coalesce::{coalesce_intervals, Eps};
pub use feasibility::{check_feasibility, FeasibilityReport, VelocityViolation};

use crate::geom::{frame_time, ColorRGBA, Coordinate, FlsSpec, FrameSequence, Point, PointSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error("frame sequence has an empty frame or no frames at all")]
    EmptyFrame,
    #[error("fps must be finite and > 0, got {0}")]
    InvalidFps(f64),
    #[error("frame {0} holds a non-finite coordinate or a color outside [0,1]")]
    InvalidPoint(usize),
}

/// One state of an FLS and every half-open interval `[start, end)` during
/// which it is held.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightSegment {
    pub intervals: Vec<(f64, f64)>,
    pub coord: Coordinate,
    pub color: ColorRGBA,
}

impl FlightSegment {
    pub fn is_lit(&self) -> bool {
        self.color.is_lit()
    }

    pub fn duration(&self) -> f64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn covers(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(s, e)| s <= t && t < e)
    }

    /// Intervals are non-empty, sorted and pairwise disjoint.
    pub fn is_well_formed(&self) -> bool {
        self.intervals
            .iter()
            .all(|(s, e)| s.is_finite() && e.is_finite() && s < e)
            && self.intervals.windows(2).all(|w| w[0].1 <= w[1].0)
    }
}

/// Flight paths of a swarm. `paths[i]` holds the segments of FLS `i`,
/// sorted by their first interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightPathSet {
    pub fps: f64,
    /// Capability record used at compile time. Not part of the binary
    /// flight file, so it is `None` after reading one back.
    pub fls_spec: Option<FlsSpec>,
    pub paths: Vec<Vec<FlightSegment>>,
}

/// Counts reported by `inspect`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub fls_count: usize,
    pub segment_count: usize,
    pub interval_count: usize,
    pub start: f64,
    pub end: f64,
    pub lit_time: f64,
}

impl FlightPathSet {
    pub fn fls_count(&self) -> usize {
        self.paths.len()
    }

    fn intervals(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.paths.iter().flatten().flat_map(|s| s.intervals.iter())
    }

    /// `(first start, last end)`, or `None` if no interval exists.
    pub fn time_range(&self) -> Option<(f64, f64)> {
        self.intervals().fold(None, |acc, &(s, e)| match acc {
            None => Some((s, e)),
            Some((lo, hi)) => Some((f64::min(lo, s), f64::max(hi, e))),
        })
    }

    pub fn span(&self) -> f64 {
        self.time_range().map_or(0.0, |(s, e)| e - s)
    }

    /// Number of frames on the grid `start + k / fps` covered by the paths.
    pub fn frame_count(&self) -> usize {
        self.time_range()
            .map_or(0, |(s, e)| ((e - s) * self.fps).round().max(0.0) as usize)
    }

    /// Total time FLSs spend lit, summed over FLSs.
    pub fn lit_time(&self) -> f64 {
        self.paths
            .iter()
            .flatten()
            .filter(|s| s.is_lit())
            .map(FlightSegment::duration)
            .sum()
    }

    /// State of FLS `fls` at time `t`, if one of its intervals covers `t`.
    pub fn sample_at(&self, fls: usize, t: f64) -> Option<Point> {
        self.paths
            .get(fls)?
            .iter()
            .find(|s| s.covers(t))
            .map(|s| Point::new(s.coord, s.color))
    }

    /// Per-FLS state at each frame of the grid; `None` where no interval
    /// covers the frame.
    pub(crate) fn frame_states(&self) -> Vec<Vec<Option<Point>>> {
        let Some((t0, _)) = self.time_range() else {
            return vec![Vec::new(); self.paths.len()];
        };
        let n = self.frame_count();
        let index = |t: f64| (((t - t0) * self.fps).round().max(0.0) as usize).min(n);
        self.paths
            .iter()
            .map(|segs| {
                let mut states = vec![None; n];
                for seg in segs {
                    for &(s, e) in &seg.intervals {
                        for slot in &mut states[index(s)..index(e)] {
                            *slot = Some(Point::new(seg.coord, seg.color));
                        }
                    }
                }
                states
            })
            .collect()
    }

    /// Rebuilds the frames: frame `k` holds every FLS state covering
    /// `start + k / fps`, in FLS order, dark FLSs included.
    pub fn reconstruct_frames(&self) -> FrameSequence {
        let t0 = self.time_range().map_or(0.0, |r| r.0);
        let states = self.frame_states();
        let n = self.frame_count();
        let frames = (0..n)
            .map(|k| states.iter().filter_map(|s| s[k]).collect::<PointSet>())
            .collect();
        FrameSequence {
            fps: self.fps,
            t0,
            frames,
        }
    }

    pub fn summary(&self) -> PathSummary {
        let (start, end) = self.time_range().unwrap_or((0.0, 0.0));
        PathSummary {
            fls_count: self.paths.len(),
            segment_count: self.paths.iter().map(Vec::len).sum(),
            interval_count: self.intervals().count(),
            start,
            end,
            lit_time: self.lit_time(),
        }
    }

    /// Every segment well formed and, per FLS, no two intervals overlap.
    pub fn is_well_formed(&self) -> bool {
        self.fps.is_finite()
            && self.fps > 0.0
            && self.paths.iter().all(|segs| {
                if !segs.iter().all(FlightSegment::is_well_formed) {
                    return false;
                }
                let mut all: Vec<(f64, f64)> = segs.iter().flat_map(|s| s.intervals.iter().copied()).collect();
                all.sort_by(|a, b| a.0.total_cmp(&b.0));
                all.windows(2).all(|w| w[0].1 <= w[1].0)
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompileOptions {
    pub assign: AssignConfig,
    pub eps: Eps,
}

impl From<AssignMethod> for CompileOptions {
    fn from(method: AssignMethod) -> Self {
        Self {
            assign: method.into(),
            eps: Eps::EXACT,
        }
    }
}

pub fn compile_flight_paths(
    frames: &FrameSequence,
    spec: &FlsSpec,
    method: AssignMethod,
) -> Result<FlightPathSet, PathError> {
    compile_flight_paths_with(frames, spec, &method.into())
}

pub fn compile_flight_paths_with(
    frames: &FrameSequence,
    spec: &FlsSpec,
    options: &CompileOptions,
) -> Result<FlightPathSet, PathError> {
    let tracks = chain_frames(frames, &options.assign)?;
    let fps = frames.fps;
    let join_tol = 1e-9 / fps;
    let paths = tracks
        .iter()
        .map(|track| {
            let spans: Vec<(f64, f64, Point)> = track
                .iter()
                .enumerate()
                .map(|(k, &p)| (frames.frame_time(k), frame_time(frames.t0, fps, k + 1), p))
                .collect();
            coalesce::coalesce_spans(&spans, options.eps, join_tol)
        })
        .collect();
    Ok(FlightPathSet {
        fps,
        fls_spec: Some(spec.clone()),
        paths,
    })
}

/// Follows assignments frame to frame. Returns one state per frame for each
/// FLS. FLSs introduced when a frame grows are backfilled with a dark copy of
/// their spawn point.
pub(crate) fn chain_frames(frames: &FrameSequence, config: &AssignConfig) -> Result<Vec<Vec<Point>>, PathError> {
    if !(frames.fps.is_finite() && frames.fps > 0.0) {
        return Err(PathError::InvalidFps(frames.fps));
    }
    if frames.frames.is_empty() || frames.frames.iter().any(PointSet::is_empty) {
        return Err(PathError::EmptyFrame);
    }
    if let Some(k) = frames.frames.iter().position(|f| !f.is_valid()) {
        return Err(PathError::InvalidPoint(k));
    }
    let mut tracks: Vec<Vec<Point>> = frames.frames[0].points.iter().map(|&p| vec![p]).collect();
    for (k, next) in frames.frames.iter().enumerate().skip(1) {
        let current: Vec<Point> = tracks.iter().map(|t| t[k - 1]).collect();
        let a = assign::assign_points(&current, &next.points, config)?;
        for (i, &j) in a.permutation.iter().enumerate() {
            if i >= tracks.len() {
                let spawn = a.sources[i];
                tracks.push(vec![spawn; k]);
            }
            tracks[i].push(a.targets[j]);
        }
    }
    Ok(tracks)
}
