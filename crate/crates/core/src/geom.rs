//! Shared geometric value types: display coordinates, RGBA colors, point
//! sets and frame sequences.

use std::fmt;

/// A position inside the display volume, in meters.
///
/// `l` is length (patient-left positive for MRI data), `h` is height and `d`
/// is depth.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coordinate {
    pub l: f64,
    pub h: f64,
    pub d: f64,
}

impl Coordinate {
    pub const ORIGIN: Coordinate = Coordinate { l: 0.0, h: 0.0, d: 0.0 };

    pub const fn new(l: f64, h: f64, d: f64) -> Self {
        Self { l, h, d }
    }

    pub fn is_finite(&self) -> bool {
        self.l.is_finite() && self.h.is_finite() && self.d.is_finite()
    }

    pub fn distance_squared(&self, other: &Coordinate) -> f64 {
        let dl = self.l - other.l;
        let dh = self.h - other.h;
        let dd = self.d - other.d;
        dl * dl + dh * dh + dd * dd
    }

    pub fn distance(&self, other: &Coordinate) -> f64 {
        self.distance_squared(other).sqrt()
    }

    /// Largest per-axis difference.
    pub fn chebyshev(&self, other: &Coordinate) -> f64 {
        (self.l - other.l)
            .abs()
            .max((self.h - other.h).abs())
            .max((self.d - other.d).abs())
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.l, self.h, self.d)
    }
}

/// Light emitted by one FLS. Every channel lives in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorRGBA {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

impl ColorRGBA {
    pub const WHITE: ColorRGBA = ColorRGBA {
        r: 1.0,
        g: 1.0,
        b: 1.0,
        a: 1.0,
    };

    pub const fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Self { r, g, b, a }
    }

    pub fn gray(level: f64) -> Self {
        let v = level.clamp(0.0, 1.0);
        Self::new(v, v, v, 1.0)
    }

    pub fn channels(&self) -> [f64; 4] {
        [self.r, self.g, self.b, self.a]
    }

    pub fn is_valid(&self) -> bool {
        self.channels().iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c))
    }

    pub fn is_lit(&self) -> bool {
        self.a > 0.0
    }

    /// Same color with alpha forced to zero.
    pub fn dark(&self) -> Self {
        Self { a: 0.0, ..*self }
    }

    pub fn max_channel_diff(&self, other: &ColorRGBA) -> f64 {
        self.channels()
            .iter()
            .zip(other.channels().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Default for ColorRGBA {
    fn default() -> Self {
        Self::WHITE
    }
}

/// One illuminated point: where it is and what it shows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub coord: Coordinate,
    pub color: ColorRGBA,
}

impl Point {
    pub const fn new(coord: Coordinate, color: ColorRGBA) -> Self {
        Self { coord, color }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.points.iter().all(|p| p.coord.is_finite() && p.color.is_valid())
    }

    pub fn lit_count(&self) -> usize {
        self.points.iter().filter(|p| p.color.is_lit()).count()
    }
}

impl FromIterator<Point> for PointSet {
    fn from_iter<T: IntoIterator<Item = Point>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Point sets sampled at a fixed display rate, starting at `t0` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub fps: f64,
    pub t0: f64,
    pub frames: Vec<PointSet>,
}

impl FrameSequence {
    pub fn new(fps: f64, frames: Vec<PointSet>) -> Self {
        Self { fps, t0: 0.0, frames }
    }

    /// Start time of frame `k`. Computed as `t0 + k / fps` so that sampling
    /// grids at `fps` and `2 * fps` agree bit-for-bit on shared instants.
    pub fn frame_time(&self, k: usize) -> f64 {
        frame_time(self.t0, self.fps, k)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Seconds from the first frame start to the last frame end.
    pub fn span(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    pub fn is_valid(&self) -> bool {
        self.fps.is_finite() && self.fps > 0.0 && self.t0.is_finite() && self.frames.iter().all(PointSet::is_valid)
    }
}

pub(crate) fn frame_time(t0: f64, fps: f64, k: usize) -> f64 {
    t0 + k as f64 / fps
}

/// Capability record of one FLS model: max speed `nu` (m/s), flight time on a
/// full charge `beta` (s), maximum exertable force `force_n` (N) and battery
/// charging time `omega` (s).
#[derive(Debug, Clone, PartialEq)]
pub struct FlsSpec {
    pub id: String,
    pub nu: f64,
    pub beta: f64,
    pub force_n: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid FLS spec: {0}")]
pub struct InvalidFlsSpec(pub &'static str);

impl FlsSpec {
    pub fn new(id: impl Into<String>, nu: f64, beta: f64, force_n: f64, omega: f64) -> Result<Self, InvalidFlsSpec> {
        let spec = Self {
            id: id.into(),
            nu,
            beta,
            force_n,
            omega,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), InvalidFlsSpec> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(InvalidFlsSpec("nu must be > 0"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(InvalidFlsSpec("beta must be > 0"));
        }
        if !(self.force_n.is_finite() && self.force_n >= 0.0) {
            return Err(InvalidFlsSpec("force must be >= 0"));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(InvalidFlsSpec("omega must be > 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fls_spec_bounds() {
        assert!(FlsSpec::new("f", 1.0, 60.0, 0.0, 30.0).is_ok());
        assert!(FlsSpec::new("f", 0.0, 60.0, 1.0, 30.0).is_err());
        assert!(FlsSpec::new("f", 1.0, -1.0, 1.0, 30.0).is_err());
        assert!(FlsSpec::new("f", 1.0, 1.0, -0.5, 30.0).is_err());
        assert!(FlsSpec::new("f", 1.0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn frame_times_agree_across_doubled_rate() {
        for k in 0..500usize {
            assert_eq!(frame_time(0.25, 24.0, k), frame_time(0.25, 48.0, 2 * k));
        }
    }

    #[test]
    fn color_validity() {
        assert!(ColorRGBA::new(0.0, 1.0, 0.5, 1.0).is_valid());
        assert!(!ColorRGBA::new(0.0, 1.5, 0.5, 1.0).is_valid());
        assert!(!ColorRGBA::new(f64::NAN, 0.0, 0.0, 1.0).is_valid());
        assert!(!ColorRGBA::new(0.2, 0.2, 0.2, 1.0).dark().is_lit());
    }
}
