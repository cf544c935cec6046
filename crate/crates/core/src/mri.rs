//! Scan ingestion for the MRI schema: organ labelling by connected
//! components, intensity-to-stiffness lookup and population of the graph.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use crate::geom::{ColorRGBA, Coordinate, FlsSpec, FrameSequence, Point, PointSet};
use crate::ingest::{read_text, IngestError, TransferTable, VoxelGrid, VoxelSequence};
use crate::model::builtin::names::*;
use crate::model::{AttrValue, Attrs, EntityId, ModelError, ModelGraph, RecordRef, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum MriError {
    #[error("point {0} lies outside the voxel grid")]
    OutOfBounds(Coordinate),
    #[error("no stiffness row covers intensity {0}")]
    UnmappedIntensity(f64),
    #[error("duplicate disease '{0}'")]
    DuplicateDisease(String),
    #[error("invalid stiffness table: {0}")]
    InvalidTable(String),
    #[error("scan sequence has no frames")]
    EmptySequence,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A connected region of above-threshold voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct OrganRecord {
    pub name: String,
    /// Linear voxel indices, ascending.
    pub voxels: Vec<usize>,
    pub diseases: Vec<String>,
    pub centroid: Coordinate,
    pub mean_intensity: f64,
}

impl OrganRecord {
    pub fn size(&self) -> usize {
        self.voxels.len()
    }

    pub fn add_disease(&mut self, disease: impl Into<String>) -> Result<(), MriError> {
        let disease = disease.into();
        if self.diseases.contains(&disease) {
            return Err(MriError::DuplicateDisease(disease));
        }
        self.diseases.push(disease);
        Ok(())
    }
}

/// 6-connected components of voxels with intensity `>= threshold`, ordered
/// by their smallest voxel index and named `region-1`, `region-2`, ...
pub fn label_organs(grid: &VoxelGrid, threshold: f64) -> Vec<OrganRecord> {
    let above: Vec<bool> = grid.intensities.iter().map(|&v| v >= threshold).collect();
    let mut seen = vec![false; grid.len()];
    let mut organs = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..grid.len() {
        if !above[seed] || seen[seed] {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        let mut voxels = Vec::new();
        while let Some(v) = queue.pop_front() {
            voxels.push(v);
            for n in grid.neighbours(v) {
                if above[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        voxels.sort_unstable();
        let count = voxels.len() as f64;
        let (mut l, mut h, mut d, mut sum) = (0.0, 0.0, 0.0, 0.0);
        for &v in &voxels {
            let c = grid.center(v);
            l += c.l;
            h += c.h;
            d += c.d;
            sum += grid.intensities[v];
        }
        organs.push(OrganRecord {
            name: format!("region-{}", organs.len() + 1),
            voxels,
            diseases: Vec::new(),
            centroid: Coordinate::new(l / count, h / count, d / count),
            mean_intensity: sum / count,
        });
    }
    organs
}

/// Intensity ranges `[lo, hi)` mapped to newtons.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StiffnessTable {
    rows: Vec<(f64, f64, f64)>,
}

impl StiffnessTable {
    pub fn new(mut rows: Vec<(f64, f64, f64)>) -> Result<Self, MriError> {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(lo, hi, n) in &rows {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(MriError::InvalidTable(format!("bad range [{lo}, {hi})")));
            }
            if !(n.is_finite() && n >= 0.0) {
                return Err(MriError::InvalidTable(format!("negative stiffness {n}")));
            }
        }
        if rows.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(MriError::InvalidTable("overlapping ranges".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(f64, f64, f64)] {
        &self.rows
    }

    /// One `lo hi newtons` row per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, MriError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            match vals {
                Ok(v) if v.len() == 3 => rows.push((v[0], v[1], v[2])),
                _ => {
                    return Err(IngestError::Parse {
                        line: i + 1,
                        reason: "expected 'lo hi newtons'".into(),
                    }
                    .into())
                }
            }
        }
        Self::new(rows)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, MriError> {
        Self::parse(&read_text(path.as_ref())?)
    }

    pub fn lookup(&self, intensity: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|(lo, hi, _)| *lo <= intensity && intensity < *hi)
            .map(|r| r.2)
    }
}

/// Stiffness felt when touching the voxel that contains `p`.
pub fn stiffness_at(grid: &VoxelGrid, table: &StiffnessTable, p: &Coordinate) -> Result<f64, MriError> {
    let idx = grid.voxel_at(p).ok_or(MriError::OutOfBounds(*p))?;
    let v = grid.intensities[idx];
    table.lookup(v).ok_or(MriError::UnmappedIntensity(v))
}

/// Whether an FLS of this model can exert the given resistance.
pub fn renderable_by(spec: &FlsSpec, stiffness: f64) -> bool {
    stiffness <= spec.force_n
}

/// Either one structural scan or a timed series of scans.
#[derive(Debug, Clone, Copy)]
pub enum ScanInput<'a> {
    Structural(&'a VoxelGrid),
    Sequence(&'a VoxelSequence),
}

#[derive(Debug, Clone)]
pub struct ScanOptions<'a> {
    pub threshold: f64,
    pub transfer: TransferTable,
    pub stiffness: Option<&'a StiffnessTable>,
    pub algorithm_name: String,
}

impl Default for ScanOptions<'_> {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            transfer: TransferTable::grayscale(),
            stiffness: None,
            algorithm_name: "connected-components".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome {
    pub patient: EntityId,
    pub equipment: EntityId,
    pub organs: Vec<EntityId>,
    /// Whole-scan point frames, one per scan at `1/dt` fps; only for
    /// sequences.
    pub frames: Option<FrameSequence>,
}

/// Populates an MRI-schema graph from a scan.
///
/// Organs are labelled on the first scan. Each organ gets a Contains link
/// to the patient over the scan's duration, an Annotated By link to the
/// labelling algorithm, and per-scan geometry made of its voxels: lit where
/// the intensity reaches the threshold, dark otherwise. Every lit voxel of
/// the first scan is also recorded as a 3D Coordinates entity; colors are
/// recorded once per distinct value.
pub fn ingest_scan(
    graph: &mut ModelGraph,
    scan: ScanInput<'_>,
    patient: Attrs,
    equipment: Attrs,
    options: &ScanOptions<'_>,
) -> Result<ScanOutcome, MriError> {
    let (grids, fps): (Vec<&VoxelGrid>, f64) = match scan {
        ScanInput::Structural(g) => (vec![g], 1.0),
        ScanInput::Sequence(s) => (s.frames.iter().collect(), 1.0 / s.dt),
    };
    let first = *grids.first().ok_or(MriError::EmptySequence)?;
    let span = grids.len() as f64 / fps;

    let patient_id = graph.create_entity(PATIENT, patient)?;
    let equipment_id = graph.create_entity(IMAGING_EQUIPMENT, equipment)?;
    graph.link(
        SCANS,
        [
            ("equipment", RecordRef::Entity(equipment_id)),
            ("patient", RecordRef::Entity(patient_id)),
        ],
        Attrs::new(),
    )?;
    let labeller = graph.create_entity(
        ORGAN_ANNOTATION,
        Attrs::new()
            .with("name", options.algorithm_name.as_str())
            .with("kind", "organ-annotation"),
    )?;

    let mut organs = Vec::new();
    for record in label_organs(first, options.threshold) {
        let frames: Vec<PointSet> = grids
            .iter()
            .map(|g| {
                record
                    .voxels
                    .iter()
                    .map(|&v| {
                        let i = g.intensities[v];
                        let color = options.transfer.color_of(i);
                        let color = if i >= options.threshold { color } else { color.dark() };
                        Point::new(g.center(v), color)
                    })
                    .collect()
            })
            .collect();
        let lit = frames.iter().any(|f| f.lit_count() > 0);
        let mut attrs = Attrs::new()
            .with("name", record.name.as_str())
            .with("geometry", AttrValue::many(record.voxels.iter().map(|&v| v as f64)))
            .with("size", record.size() as f64)
            .with("centroid_l", record.centroid.l)
            .with("centroid_h", record.centroid.h)
            .with("centroid_d", record.centroid.d)
            .with("mean_intensity", record.mean_intensity);
        if let Some(n) = options.stiffness.and_then(|t| t.lookup(record.mean_intensity)) {
            attrs.set("stiffness", n);
        }
        if !lit {
            attrs.set("unilluminated", true);
        }
        let organ = graph.create_entity(ORGANS, attrs)?;
        graph.link(
            CONTAINS,
            [
                (ROLE_SUBJECT, RecordRef::Entity(patient_id)),
                (ROLE_OBJECT, RecordRef::Entity(organ)),
            ],
            Attrs::new().with("duration", Scalar::Interval(0.0, span)),
        )?;
        graph.link(
            ANNOTATED_BY,
            [
                (ROLE_OBJECT, RecordRef::Entity(organ)),
                (ROLE_ALGORITHM, RecordRef::Entity(labeller)),
            ],
            Attrs::new(),
        )?;
        graph.set_geometry(organ, FrameSequence::new(fps, frames))?;
        organs.push(organ);
    }

    let points = crate::ingest::voxels_to_points(first, options.threshold, &options.transfer);
    let mut colors: BTreeMap<[u64; 4], EntityId> = BTreeMap::new();
    for p in &points.points {
        graph.create_entity(
            COORDINATES,
            Attrs::new()
                .with("l", p.coord.l)
                .with("h", p.coord.h)
                .with("d", p.coord.d),
        )?;
        let key = p.color.channels().map(f64::to_bits);
        if let std::collections::btree_map::Entry::Vacant(slot) = colors.entry(key) {
            slot.insert(graph.create_entity(COLORS, color_attrs(&p.color))?);
        }
    }

    let frames = match scan {
        ScanInput::Structural(_) => None,
        ScanInput::Sequence(_) => Some(FrameSequence::new(
            fps,
            grids
                .iter()
                .map(|g| crate::ingest::voxels_to_points(g, options.threshold, &options.transfer))
                .collect(),
        )),
    };
    Ok(ScanOutcome {
        patient: patient_id,
        equipment: equipment_id,
        organs,
        frames,
    })
}

fn color_attrs(c: &ColorRGBA) -> Attrs {
    Attrs::new().with("r", c.r).with("g", c.g).with("b", c.b).with("a", c.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{mri_schema, validate, ViolationKind};

    fn grid(dims: [usize; 3], lit: &[usize]) -> VoxelGrid {
        let mut v = vec![0.0; dims.iter().product()];
        for &i in lit {
            v[i] = 1.0;
        }
        VoxelGrid::new(dims, [1.0; 3], v).unwrap()
    }

    #[test]
    fn disjoint_singletons() {
        let g = grid([3, 1, 1], &[0, 2]);
        let organs = label_organs(&g, 0.5);
        assert_eq!(organs.len(), 2);
        assert!(organs.iter().all(|o| o.size() == 1));
        assert_eq!(organs[1].name, "region-2");
        assert_eq!(organs[1].centroid, Coordinate::new(2.5, 0.5, 0.5));
    }

    #[test]
    fn nothing_above_threshold() {
        assert!(label_organs(&grid([2, 2, 2], &[]), 0.5).is_empty());
    }

    #[test]
    fn corner_contact_is_not_connected() {
        // (0,0,0) and (1,1,0) share an edge only; (1,1,1) touches (1,1,0) by a face
        let g = grid([2, 2, 2], &[0, 3, 7]);
        let organs = label_organs(&g, 0.5);
        assert_eq!(organs.len(), 2);
        assert_eq!(organs[0].voxels, vec![0]);
        assert_eq!(organs[1].voxels, vec![3, 7]);
    }

    #[test]
    fn diseases_are_unique() {
        let mut o = label_organs(&grid([1, 1, 1], &[0]), 0.5).remove(0);
        o.add_disease("cyst").unwrap();
        o.add_disease("lesion").unwrap();
        assert!(matches!(o.add_disease("cyst"), Err(MriError::DuplicateDisease(_))));
        assert_eq!(o.diseases.len(), 2);
    }

    #[test]
    fn stiffness_lookup() {
        let g = VoxelGrid::new([2, 1, 1], [1.0; 3], vec![0.8, 0.2]).unwrap();
        let t = StiffnessTable::parse("# lo hi N\n0.5 1.0 3.0\n").unwrap();
        assert_eq!(stiffness_at(&g, &t, &Coordinate::new(0.5, 0.5, 0.5)).unwrap(), 3.0);
        assert!(matches!(
            stiffness_at(&g, &t, &Coordinate::new(5.0, 0.5, 0.5)),
            Err(MriError::OutOfBounds(_))
        ));
        assert!(matches!(
            stiffness_at(&g, &t, &Coordinate::new(1.5, 0.5, 0.5)),
            Err(MriError::UnmappedIntensity(v)) if v == 0.2
        ));
        assert!(StiffnessTable::new(vec![(0.0, 1.0, 1.0), (0.5, 2.0, 1.0)]).is_err());
        assert!(StiffnessTable::new(vec![(0.0, 1.0, -1.0)]).is_err());
    }

    #[test]
    fn force_limit_is_inclusive() {
        let spec = FlsSpec::new("f", 1.0, 1.0, 5.0, 1.0).unwrap();
        assert!(renderable_by(&spec, 3.0));
        assert!(renderable_by(&spec, 5.0));
        assert!(!renderable_by(&spec, 7.5));
    }

    fn patient() -> Attrs {
        Attrs::new().with("name", "anon")
    }

    fn scanner() -> Attrs {
        Attrs::new().with("name", "scanner")
    }

    #[test]
    fn structural_scan_populates_graph() {
        let mut g = ModelGraph::new(mri_schema());
        let grid = grid([3, 1, 1], &[0, 2]);
        let table = StiffnessTable::new(vec![(0.5, 2.0, 3.0)]).unwrap();
        let opts = ScanOptions {
            stiffness: Some(&table),
            ..ScanOptions::default()
        };
        let out = ingest_scan(&mut g, ScanInput::Structural(&grid), patient(), scanner(), &opts).unwrap();
        assert_eq!(out.organs.len(), 2);
        assert!(out.frames.is_none());
        for &o in &out.organs {
            let linked = g.incident(RecordRef::Entity(o)).into_iter().any(|r| {
                let rel = g.relationship(r).unwrap();
                rel.set == CONTAINS && rel.bindings[ROLE_SUBJECT] == RecordRef::Entity(out.patient)
            });
            assert!(linked);
            assert_eq!(g.entity(o).unwrap().attrs.number("stiffness"), Some(3.0));
            assert_eq!(g.geometry(o).unwrap().frames[0].len(), 1);
        }
        assert_eq!(g.entities_in(COORDINATES).count(), 2);
        assert_eq!(g.entities_in(COLORS).count(), 1);
        // organs still need flight paths
        let report = validate(&g);
        assert_eq!(report.of_kind(ViolationKind::TotalParticipation).count(), 2);
    }

    #[test]
    fn sequence_scan_yields_frames() {
        let mut g = ModelGraph::new(mri_schema());
        let a = grid([2, 1, 1], &[0]);
        let b = grid([2, 1, 1], &[0, 1]);
        let seq = VoxelSequence::new(vec![a.clone(), b, a], 0.5).unwrap();
        let out = ingest_scan(
            &mut g,
            ScanInput::Sequence(&seq),
            patient(),
            scanner(),
            &ScanOptions::default(),
        )
        .unwrap();
        let frames = out.frames.unwrap();
        assert_eq!(frames.fps, 2.0);
        assert_eq!(frames.frames.len(), 3);
        assert_eq!(frames.frames[1].len(), 2);
        let geom = g.geometry(out.organs[0]).unwrap();
        assert_eq!(geom.frames.len(), 3);
        let dur = g
            .relationships_in(CONTAINS)
            .next()
            .unwrap()
            .1
            .attrs
            .interval("duration");
        assert_eq!(dur, Some((0.0, 1.5)));
    }

    #[test]
    fn empty_scan_gives_patient_only() {
        let mut g = ModelGraph::new(mri_schema());
        let out = ingest_scan(
            &mut g,
            ScanInput::Structural(&grid([2, 2, 2], &[])),
            patient(),
            scanner(),
            &ScanOptions::default(),
        )
        .unwrap();
        assert!(out.organs.is_empty());
        assert!(g.entity(out.patient).is_some());
        assert!(validate(&g).is_valid());
    }

    #[test]
    fn dark_transfer_marks_organ_unilluminated() {
        let mut g = ModelGraph::new(mri_schema());
        let opts = ScanOptions {
            transfer: TransferTable::new(vec![(0.5, 2.0, ColorRGBA::new(1.0, 0.0, 0.0, 0.0))]).unwrap(),
            ..ScanOptions::default()
        };
        let out = ingest_scan(
            &mut g,
            ScanInput::Structural(&grid([1, 1, 1], &[0])),
            patient(),
            scanner(),
            &opts,
        )
        .unwrap();
        assert_eq!(
            g.entity(out.organs[0]).unwrap().attrs.boolean("unilluminated"),
            Some(true)
        );
        let report = validate(&g);
        assert!(report.is_valid());
        assert!(!report.notices.is_empty());
    }
}
