//! F-curve evaluation and sampling of animated objects into frames.

use thiserror::Error;

use crate::animation::{self, AnimationError, Channel, FCurve, Interp, Keyframe};
use crate::geom::{frame_time, ColorRGBA, Coordinate, FrameSequence, Point, PointSet};
use crate::model::{EntityId, ModelGraph};

/// Bisection never needs more steps than this to exhaust f64 precision on
/// `[0, 1]`.
pub const MAX_BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("t={t} outside segment [{t0}, {t1}]")]
    OutOfSegment { t: f64, t0: f64, t1: f64 },
    #[error("object {0} has no geometry")]
    MissingGeometry(String),
    #[error("invalid sampling range: {0}")]
    InvalidRange(String),
    #[error(transparent)]
    Animation(#[from] AnimationError),
}

// negated comparisons so that NaN times are rejected too
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_segment(k0: &Keyframe, k1: &Keyframe, t: f64) -> Result<(), InterpError> {
    if !(k0.time < k1.time) || !(k0.time <= t && t <= k1.time) {
        return Err(InterpError::OutOfSegment {
            t,
            t0: k0.time,
            t1: k1.time,
        });
    }
    Ok(())
}

pub fn eval_linear(k0: &Keyframe, k1: &Keyframe, t: f64) -> Result<f64, InterpError> {
    check_segment(k0, k1, t)?;
    if t == k1.time {
        return Ok(k1.value);
    }
    Ok(k0.value + (k1.value - k0.value) * ((t - k0.time) / (k1.time - k0.time)))
}

/// Control points of the cubic between two keys, in `(time, value)`, with
/// handle times clamped into the segment so time is monotone in `u`.
pub fn bezier_controls(k0: &Keyframe, k1: &Keyframe) -> [(f64, f64); 4] {
    let span = k1.time - k0.time;
    let p0 = (k0.time, k0.value);
    let p3 = (k1.time, k1.value);
    let p1 = (
        k0.time + k0.handle_right.dt.clamp(0.0, span),
        k0.value + k0.handle_right.dv,
    );
    let p2 = (
        k1.time + k1.handle_left.dt.clamp(-span, 0.0),
        k1.value + k1.handle_left.dv,
    );
    [p0, p1, p2, p3]
}

fn cubic(c0: f64, c1: f64, c2: f64, c3: f64, u: f64) -> f64 {
    let v = 1.0 - u;
    v * v * v * c0 + 3.0 * v * v * u * c1 + 3.0 * v * u * u * c2 + u * u * u * c3
}

/// Default time tolerance for bezier evaluation on a segment.
pub fn default_tolerance(k0: &Keyframe, k1: &Keyframe) -> f64 {
    1e-9 * (k1.time - k0.time)
}

/// Evaluates the cubic Bezier segment at time `t`.
///
/// `x(u) = t` is solved by bisection until `|x(u) - t| <= tol` (at most
/// [`MAX_BISECTION_STEPS`] halvings); the final `u` is then interpolated
/// linearly inside the remaining bracket before `y(u)` is returned.
pub fn eval_bezier(k0: &Keyframe, k1: &Keyframe, t: f64, tol: Option<f64>) -> Result<f64, InterpError> {
    check_segment(k0, k1, t)?;
    if t == k0.time {
        return Ok(k0.value);
    }
    if t == k1.time {
        return Ok(k1.value);
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(k0, k1));
    let [p0, p1, p2, p3] = bezier_controls(k0, k1);
    let x = |u: f64| cubic(p0.0, p1.0, p2.0, p3.0, u);
    let y = |u: f64| cubic(p0.1, p1.1, p2.1, p3.1, u);

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (mut x_lo, mut x_hi) = (p0.0, p3.0);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let xm = x(mid);
        if xm < t {
            lo = mid;
            x_lo = xm;
        } else {
            hi = mid;
            x_hi = xm;
        }
        if (xm - t).abs() <= tol {
            break;
        }
    }
    let u = if x_hi > x_lo {
        lo + (hi - lo) * ((t - x_lo) / (x_hi - x_lo))
    } else {
        0.5 * (lo + hi)
    };
    Ok(y(u.clamp(lo, hi)))
}

/// Dispatches on the left key's interpolation mode.
pub fn eval_segment(k0: &Keyframe, k1: &Keyframe, t: f64) -> Result<f64, InterpError> {
    match k0.interp {
        Interp::Linear => eval_linear(k0, k1, t),
        Interp::Bezier => eval_bezier(k0, k1, t, None),
    }
}

/// Value of the curve at `t`, held constant before the first key and after
/// the last.
pub fn eval_channel(curve: &FCurve, t: f64) -> f64 {
    let keys = curve.keys();
    let first = &keys[0];
    let last = &keys[keys.len() - 1];
    if t <= first.time {
        return first.value;
    }
    if t >= last.time {
        return last.value;
    }
    // first index whose time exceeds t; t lies in [keys[i-1], keys[i])
    let i = keys.partition_point(|k| k.time <= t);
    let (k0, k1) = (&keys[i - 1], &keys[i]);
    if t == k0.time {
        return k0.value;
    }
    eval_segment(k0, k1, t).expect("t lies inside the segment")
}

/// All channel curves of one object, evaluated together.
#[derive(Debug, Clone)]
pub struct ObjectCurves {
    curves: Vec<(Channel, FCurve)>,
    color_active: [bool; 4],
}

impl ObjectCurves {
    pub fn load(graph: &ModelGraph, object: EntityId) -> Result<Self, AnimationError> {
        let mut curves = Vec::with_capacity(Channel::ALL.len());
        let mut color_active = [false; 4];
        for (i, ch) in Channel::ALL.into_iter().enumerate() {
            curves.push((ch, animation::curve(graph, object, ch)?));
            if ch.is_color() {
                color_active[i - 3] = animation::is_animated(graph, object, ch)?;
            }
        }
        Ok(Self { curves, color_active })
    }

    pub fn value(&self, ch: Channel, t: f64) -> f64 {
        let (_, c) = self
            .curves
            .iter()
            .find(|(c, _)| *c == ch)
            .expect("every channel is loaded");
        eval_channel(c, t)
    }

    /// Time of the last key over all channels.
    pub fn last_key_time(&self) -> f64 {
        self.curves.iter().map(|(_, c)| c.last_time()).fold(0.0, f64::max)
    }

    /// Applies translation, uniform scale and color factors at time `t`.
    ///
    /// Coordinates become `base * scale + offset`; each animated color
    /// channel multiplies the base channel, clamped to `[0, 1]`.
    pub fn transform(&self, base: &PointSet, t: f64) -> PointSet {
        let offset = Coordinate::new(
            self.value(Channel::PositionL, t),
            self.value(Channel::PositionH, t),
            self.value(Channel::PositionD, t),
        );
        let scale = self.value(Channel::Scale, t);
        let factors = [Channel::ColorR, Channel::ColorG, Channel::ColorB, Channel::ColorA].map(|c| self.value(c, t));
        base.points
            .iter()
            .map(|p| {
                let coord = Coordinate::new(
                    p.coord.l * scale + offset.l,
                    p.coord.h * scale + offset.h,
                    p.coord.d * scale + offset.d,
                );
                let mut ch = p.color.channels();
                for i in 0..4 {
                    if self.color_active[i] {
                        ch[i] = (ch[i] * factors[i]).clamp(0.0, 1.0);
                    }
                }
                Point::new(coord, ColorRGBA::new(ch[0], ch[1], ch[2], ch[3]))
            })
            .collect()
    }
}

/// Number of frames covering `[t_start, t_end]` at `fps`.
pub fn frame_count(t_start: f64, t_end: f64, fps: f64) -> usize {
    // the epsilon absorbs products like 0.3 * 10 = 2.9999999999999996
    ((t_end - t_start) * fps + 1e-9).floor() as usize + 1
}

/// Base frame of a geometry sequence in effect at time `t`.
fn geometry_frame(geometry: &FrameSequence, t: f64) -> &PointSet {
    let idx = ((t - geometry.t0) * geometry.fps + 1e-9).floor();
    let idx = if idx.is_finite() && idx > 0.0 { idx as usize } else { 0 };
    &geometry.frames[idx.min(geometry.frames.len() - 1)]
}

/// Samples an object's animated geometry at `fps` over `[t_start, t_end]`.
///
/// Frame `k` is taken at `t_start + k / fps`.
pub fn sample_object(
    graph: &ModelGraph,
    object: EntityId,
    fps: f64,
    t_start: f64,
    t_end: f64,
) -> Result<FrameSequence, InterpError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(InterpError::InvalidRange(format!("fps {fps} must be > 0")));
    }
    if !(t_start.is_finite() && t_end.is_finite() && t_start <= t_end) {
        return Err(InterpError::InvalidRange(format!("[{t_start}, {t_end}]")));
    }
    let geometry = graph
        .geometry(object)
        .filter(|g| g.frames.iter().any(|f| !f.is_empty()))
        .ok_or_else(|| InterpError::MissingGeometry(graph.format_entity(object)))?;
    let curves = ObjectCurves::load(graph, object)?;
    let frames = (0..frame_count(t_start, t_end, fps))
        .map(|k| {
            let t = frame_time(t_start, fps, k);
            curves.transform(geometry_frame(geometry, t), t)
        })
        .collect();
    Ok(FrameSequence {
        fps,
        t0: t_start,
        frames,
    })
}
