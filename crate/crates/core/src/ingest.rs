//! Text input formats.
//!
//! Frames file:
//!
//! ```text
//! fps 24
//! frame 0
//! 0.0 0.0 0.0 1 1 1 1
//! frame 1
//! ...
//! ```
//!
//! Each point line is `l h d r g b a`. Voxel file: a header
//! `dims nx ny nz spacing sx sy sz` followed by `nx*ny*nz` intensities,
//! x fastest. Lines starting with `#` are comments in both formats.

use std::fmt::Write as _;
use std::path::Path;

use crate::geom::{ColorRGBA, Coordinate, FrameSequence, Point, PointSet};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("line {line}: non-finite value")]
    NonFiniteValue { line: usize },
    #[error("expected {expected} voxel values, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("invalid voxel grid: {0}")]
    InvalidGrid(String),
}

impl IngestError {
    fn parse(line: usize, reason: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn number(tok: &str, line: usize) -> Result<f64, IngestError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| IngestError::parse(line, format!("not a number: '{tok}'")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IngestError::NonFiniteValue { line })
    }
}

pub fn read_frames(path: impl AsRef<Path>) -> Result<FrameSequence, IngestError> {
    parse_frames(&read_text(path.as_ref())?)
}

pub fn parse_frames(text: &str) -> Result<FrameSequence, IngestError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(IngestError::MissingHeader)?;
    let fps = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["fps", v] => number(v, hline)?,
        _ => return Err(IngestError::MissingHeader),
    };
    if fps <= 0.0 {
        return Err(IngestError::parse(hline, "fps must be > 0"));
    }
    let mut frames: Vec<PointSet> = Vec::new();
    for (line, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] == "frame" {
            let [_, idx] = toks[..] else {
                return Err(IngestError::parse(line, "expected 'frame <index>'"));
            };
            let idx: usize = idx
                .parse()
                .map_err(|_| IngestError::parse(line, format!("bad frame index '{idx}'")))?;
            if idx != frames.len() {
                return Err(IngestError::parse(
                    line,
                    format!("frame {idx} out of order, expected {}", frames.len()),
                ));
            }
            frames.push(PointSet::default());
            continue;
        }
        let Some(frame) = frames.last_mut() else {
            return Err(IngestError::parse(line, "point before the first frame"));
        };
        if toks.len() != 7 {
            return Err(IngestError::parse(
                line,
                format!("expected 7 values, found {}", toks.len()),
            ));
        }
        let mut v = [0.0; 7];
        for (slot, tok) in v.iter_mut().zip(&toks) {
            *slot = number(tok, line)?;
        }
        let [l, h, d, r, g, b, a] = v;
        for (name, c) in [("red", r), ("green", g), ("blue", b), ("alpha", a)] {
            if !(0.0..=1.0).contains(&c) {
                return Err(IngestError::parse(line, format!("{name} out of [0,1]")));
            }
        }
        frame
            .points
            .push(Point::new(Coordinate::new(l, h, d), ColorRGBA::new(r, g, b, a)));
    }
    Ok(FrameSequence::new(fps, frames))
}

/// Inverse of [`parse_frames`]; numbers use the shortest representation
/// that reads back to the same value.
pub fn format_frames(seq: &FrameSequence) -> String {
    let mut out = format!("fps {}\n", seq.fps);
    for (k, frame) in seq.frames.iter().enumerate() {
        let _ = writeln!(out, "frame {k}");
        for p in &frame.points {
            let c = &p.color;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                p.coord.l, p.coord.h, p.coord.d, c.r, c.g, c.b, c.a
            );
        }
    }
    out
}

pub fn write_frames(path: impl AsRef<Path>, seq: &FrameSequence) -> Result<(), IngestError> {
    write_text(path.as_ref(), &format_frames(seq))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IngestError> {
    std::fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Dense scalar grid, x fastest: index = i + nx * (j + ny * k).
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    /// meters per voxel along l, h, d
    pub spacing: [f64; 3],
    pub intensities: Vec<f64>,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], intensities: Vec<f64>) -> Result<Self, IngestError> {
        if dims.contains(&0) {
            return Err(IngestError::InvalidGrid("dims must be > 0".into()));
        }
        if !spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(IngestError::InvalidGrid("spacing must be > 0".into()));
        }
        let expected = dims.iter().product();
        if intensities.len() != expected {
            return Err(IngestError::CountMismatch {
                expected,
                found: intensities.len(),
            });
        }
        if intensities.iter().any(|v| !v.is_finite()) {
            return Err(IngestError::InvalidGrid("non-finite intensity".into()));
        }
        Ok(Self {
            dims,
            spacing,
            intensities,
        })
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn position(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn get(&self, ijk: [usize; 3]) -> f64 {
        self.intensities[self.index(ijk)]
    }

    pub fn center(&self, idx: usize) -> Coordinate {
        let [i, j, k] = self.position(idx);
        let [sx, sy, sz] = self.spacing;
        Coordinate::new((i as f64 + 0.5) * sx, (j as f64 + 0.5) * sy, (k as f64 + 0.5) * sz)
    }

    /// Linear index of the voxel containing `p`. Voxel cells are half-open,
    /// so the far faces of the grid are outside.
    pub fn voxel_at(&self, p: &Coordinate) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for (axis, v) in [p.l, p.h, p.d].into_iter().enumerate() {
            let f = (v / self.spacing[axis]).floor();
            if !(f >= 0.0 && f < self.dims[axis] as f64) {
                return None;
            }
            ijk[axis] = f as usize;
        }
        Some(self.index(ijk))
    }

    /// Indices of the up to six face neighbours of `idx`.
    pub fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let pos = self.position(idx);
        (0..3).flat_map(move |axis| {
            let mut out = [None, None];
            if pos[axis] > 0 {
                let mut p = pos;
                p[axis] -= 1;
                out[0] = Some(self.index(p));
            }
            if pos[axis] + 1 < self.dims[axis] {
                let mut p = pos;
                p[axis] += 1;
                out[1] = Some(self.index(p));
            }
            out.into_iter().flatten()
        })
    }
}

pub fn read_voxels(path: impl AsRef<Path>) -> Result<VoxelGrid, IngestError> {
    parse_voxels(&read_text(path.as_ref())?)
}

pub fn parse_voxels(text: &str) -> Result<VoxelGrid, IngestError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(IngestError::MissingHeader)?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let ["dims", nx, ny, nz, "spacing", sx, sy, sz] = toks[..] else {
        return Err(IngestError::MissingHeader);
    };
    let mut dims = [0usize; 3];
    for (slot, tok) in dims.iter_mut().zip([nx, ny, nz]) {
        *slot = tok
            .parse()
            .map_err(|_| IngestError::parse(hline, format!("bad dimension '{tok}'")))?;
        if *slot == 0 {
            return Err(IngestError::parse(hline, "dims must be > 0"));
        }
    }
    let mut spacing = [0.0; 3];
    for (slot, tok) in spacing.iter_mut().zip([sx, sy, sz]) {
        *slot = number(tok, hline)?;
        if *slot <= 0.0 {
            return Err(IngestError::parse(hline, "spacing must be > 0"));
        }
    }
    let mut values = Vec::with_capacity(dims.iter().product());
    for (line, l) in lines {
        for tok in l.split_whitespace() {
            values.push(number(tok, line)?);
        }
    }
    VoxelGrid::new(dims, spacing, values)
}

pub fn format_voxels(grid: &VoxelGrid) -> String {
    let [nx, ny, nz] = grid.dims;
    let [sx, sy, sz] = grid.spacing;
    let mut out = format!("dims {nx} {ny} {nz} spacing {sx} {sy} {sz}\n");
    for row in grid.intensities.chunks(nx) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_voxels(path: impl AsRef<Path>, grid: &VoxelGrid) -> Result<(), IngestError> {
    write_text(path.as_ref(), &format_voxels(grid))
}

/// Scans taken `dt` seconds apart over the same grid layout.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSequence {
    pub frames: Vec<VoxelGrid>,
    pub dt: f64,
}

impl VoxelSequence {
    pub fn new(frames: Vec<VoxelGrid>, dt: f64) -> Result<Self, IngestError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(IngestError::InvalidGrid("dt must be > 0".into()));
        }
        if let Some(first) = frames.first() {
            if frames
                .iter()
                .any(|g| g.dims != first.dims || g.spacing != first.spacing)
            {
                return Err(IngestError::InvalidGrid("scans differ in dims or spacing".into()));
            }
        }
        Ok(Self { frames, dt })
    }
}

/// Maps intensities to colors. Rows are half-open `[lo, hi)` ranges;
/// intensities outside every row use grayscale.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransferTable {
    rows: Vec<(f64, f64, ColorRGBA)>,
}

impl TransferTable {
    pub fn grayscale() -> Self {
        Self::default()
    }

    pub fn new(mut rows: Vec<(f64, f64, ColorRGBA)>) -> Result<Self, String> {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (lo, hi, c) in &rows {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(format!("bad range [{lo}, {hi})"));
            }
            if !c.is_valid() {
                return Err(format!("color for [{lo}, {hi}) outside [0,1]"));
            }
        }
        if rows.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err("overlapping ranges".into());
        }
        Ok(Self { rows })
    }

    /// Lines of `lo hi r g b a`.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut rows = Vec::new();
        for (line, l) in content_lines(text) {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 6 {
                return Err(IngestError::parse(line, "expected 'lo hi r g b a'"));
            }
            let mut v = [0.0; 6];
            for (slot, tok) in v.iter_mut().zip(&toks) {
                *slot = number(tok, line)?;
            }
            rows.push((v[0], v[1], ColorRGBA::new(v[2], v[3], v[4], v[5])));
        }
        Self::new(rows).map_err(|reason| IngestError::parse(0, reason))
    }

    pub fn color_of(&self, intensity: f64) -> ColorRGBA {
        self.rows
            .iter()
            .find(|(lo, hi, _)| *lo <= intensity && intensity < *hi)
            .map(|r| r.2)
            .unwrap_or_else(|| ColorRGBA::gray(intensity))
    }
}

/// One point per voxel with intensity `>= threshold`, at the voxel center.
pub fn voxels_to_points(grid: &VoxelGrid, threshold: f64, transfer: &TransferTable) -> PointSet {
    grid.intensities
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= threshold)
        .map(|(idx, &v)| Point::new(grid.center(idx), transfer.color_of(v)))
        .collect()
}
