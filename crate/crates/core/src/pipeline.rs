//! Compiles every object of a model into one flight-path set and records the
//! result in the graph as FLS entities and Flight Paths relationships.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::geom::{FlsSpec, InvalidFlsSpec};
use crate::interp::{sample_object, InterpError, ObjectCurves};
use crate::model::names::*;
use crate::model::{AttrValue, Attrs, EntityId, ModelError, ModelGraph, RecordRef, Scalar};
use crate::pathgen::{
    check_feasibility, compile_flight_paths_with, CompileOptions, FeasibilityReport, FlightPathSet, PathError,
};
use crate::query::parts_of;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Spec(#[from] InvalidFlsSpec),
    #[error("fps must be finite and > 0, got {0}")]
    InvalidFps(f64),
    #[error("{object}: {source}")]
    Sampling {
        object: String,
        #[source]
        source: InterpError,
    },
    #[error("{object}: {source}")]
    Paths {
        object: String,
        #[source]
        source: PathError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledModel {
    pub paths: FlightPathSet,
    pub feasibility: FeasibilityReport,
    /// FLS index range owned by each object with its own geometry.
    pub owners: Vec<(EntityId, Range<usize>)>,
    /// FLS entity for each path index.
    pub fls_entities: Vec<EntityId>,
}

/// Coverage of a list of half-open intervals, with touching ones merged.
fn merged(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (s, e) in intervals {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Compiles all illuminated objects with geometry at `fps`.
///
/// Any previous compilation (FLS entities and Flight Paths links) is
/// removed first. Each object is sampled from 0 until its last keyframe or
/// the end of its geometry sequence, whichever is later, and gets its own
/// FLSs. Composite objects without geometry are linked to the FLSs of their
/// transitive parts. Objects flagged `unilluminated` are skipped.
pub fn compile_model(
    graph: &mut ModelGraph,
    fps: f64,
    spec: &FlsSpec,
    options: &CompileOptions,
) -> Result<CompiledModel, PipelineError> {
    spec.check()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(PipelineError::InvalidFps(fps));
    }
    let object_set = graph.object_set()?.to_string();

    let stale: Vec<EntityId> = graph.entities_in(FLSS).map(|(id, _)| id).collect();
    for id in stale {
        graph.delete_entity(id, true)?;
    }
    let stale: Vec<_> = graph.relationships_in(FLIGHT_PATHS).map(|(id, _)| id).collect();
    for id in stale {
        if graph.relationship(id).is_some() {
            graph.delete_relationship(id, true)?;
        }
    }

    let objects: Vec<(EntityId, bool)> = graph
        .entities_in(&object_set)
        .map(|(id, e)| (id, e.attrs.boolean("unilluminated") == Some(true)))
        .collect();
    let mut all_paths = Vec::new();
    let mut owners = Vec::new();
    for &(id, dark) in &objects {
        let Some(geom) = graph.geometry(id) else { continue };
        if dark {
            continue;
        }
        let name = graph.format_entity(id);
        let geom_end = geom.t0 + (geom.frames.len().saturating_sub(1)) as f64 / geom.fps;
        let curves = ObjectCurves::load(graph, id).map_err(|e| PipelineError::Sampling {
            object: name.clone(),
            source: e.into(),
        })?;
        let t_end = curves.last_key_time().max(geom_end).max(0.0);
        let frames = sample_object(graph, id, fps, 0.0, t_end).map_err(|source| PipelineError::Sampling {
            object: name.clone(),
            source,
        })?;
        let set = compile_flight_paths_with(&frames, spec, options)
            .map_err(|source| PipelineError::Paths { object: name, source })?;
        let start = all_paths.len();
        all_paths.extend(set.paths);
        owners.push((id, start..all_paths.len()));
    }

    let mut fls_entities = Vec::with_capacity(all_paths.len());
    for i in 0..all_paths.len() {
        let attrs = Attrs::new()
            .with("nu", spec.nu)
            .with("beta", spec.beta)
            .with("force_n", spec.force_n)
            .with("omega", spec.omega)
            .with("model", spec.id.as_str())
            .with("index", i as f64);
        fls_entities.push(graph.create_entity(FLSS, attrs)?);
    }

    let mut owned: BTreeMap<EntityId, Range<usize>> = owners.iter().cloned().collect();
    // composites borrow the FLSs of their parts
    let mut borrowed: BTreeMap<EntityId, Vec<usize>> = BTreeMap::new();
    for &(id, dark) in &objects {
        if dark || owned.contains_key(&id) {
            continue;
        }
        let parts = parts_of(graph, id, true).map_err(|e| match e {
            crate::query::QueryError::Model(m) => PipelineError::Model(m),
            other => PipelineError::Model(ModelError::UnknownId(other.to_string())),
        })?;
        let flss: Vec<usize> = parts
            .iter()
            .filter_map(|p| owned.get(p))
            .flat_map(Clone::clone)
            .collect();
        if !flss.is_empty() {
            borrowed.insert(id, flss);
        }
    }

    let mut links: Vec<(EntityId, usize)> = Vec::new();
    for (id, range) in std::mem::take(&mut owned) {
        links.extend(range.map(|i| (id, i)));
    }
    for (id, flss) in borrowed {
        links.extend(flss.into_iter().map(|i| (id, i)));
    }
    links.sort();
    for (object, i) in links {
        let intervals = merged(all_paths[i].iter().flat_map(|s| s.intervals.iter().copied()).collect());
        graph.link(
            FLIGHT_PATHS,
            [
                (ROLE_OBJECT, RecordRef::Entity(object)),
                (ROLE_FLS, RecordRef::Entity(fls_entities[i])),
            ],
            Attrs::new().with(
                "interval",
                AttrValue::Many(intervals.into_iter().map(|(s, e)| Scalar::Interval(s, e)).collect()),
            ),
        )?;
    }

    let paths = FlightPathSet {
        fps,
        fls_spec: Some(spec.clone()),
        paths: all_paths,
    };
    let feasibility = check_feasibility(&paths, spec);
    Ok(CompiledModel {
        paths,
        feasibility,
        owners,
        fls_entities,
    })
}
