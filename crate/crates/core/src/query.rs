//! Content-based retrieval over a model graph and its compiled flight paths.
//!
//! All intervals are half-open `[start, end)`. Results are id-sorted unless
//! noted otherwise.

use std::collections::BTreeSet;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::geom::Coordinate;
use crate::model::names::*;
use crate::model::{AnnotationId, EntityId, ModelError, ModelGraph, RecordRef, RelId};
use crate::pathgen::FlightPathSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0} has no lit flight paths at the requested time")]
    NotCompiled(String),
    #[error("bad query: {0}")]
    Syntax(String),
}

fn require_entity(graph: &ModelGraph, id: EntityId) -> Result<(), QueryError> {
    if graph.entity(id).is_none() {
        return Err(ModelError::UnknownId(format!("{}", id.0)).into());
    }
    Ok(())
}

fn bound(graph: &ModelGraph, rel: RelId, role: &str) -> Option<RecordRef> {
    graph.relationship(rel)?.bindings.get(role).copied()
}

/// Relationships of `set` in which `id` fills `role`, with the record bound
/// to `other`.
fn neighbours(graph: &ModelGraph, set: &str, id: EntityId, role: &str, other: &str) -> Vec<(RelId, RecordRef)> {
    graph
        .incident(id.into())
        .into_iter()
        .filter(|&r| graph.relationship(r).is_some_and(|x| x.set == set))
        .filter(|&r| bound(graph, r, role) == Some(id.into()))
        .filter_map(|r| Some((r, bound(graph, r, other)?)))
        .collect()
}

fn direct_parts(graph: &ModelGraph, whole: EntityId) -> Vec<EntityId> {
    let set: BTreeSet<EntityId> = neighbours(graph, CONSISTS_OF, whole, ROLE_WHOLE, ROLE_PART)
        .into_iter()
        .filter_map(|(_, r)| match r {
            RecordRef::Entity(e) => Some(e),
            RecordRef::Rel(_) => None,
        })
        .collect();
    set.into_iter().collect()
}

/// Consists-Of children of `object`; with `transitive`, every descendant in
/// breadth-first order, id-sorted within each level.
pub fn parts_of(graph: &ModelGraph, object: EntityId, transitive: bool) -> Result<Vec<EntityId>, QueryError> {
    require_entity(graph, object)?;
    if !transitive {
        return Ok(direct_parts(graph, object));
    }
    let mut seen = BTreeSet::from([object]);
    let mut out = Vec::new();
    let mut level = vec![object];
    while !level.is_empty() {
        let mut next = BTreeSet::new();
        for &w in &level {
            for p in direct_parts(graph, w) {
                if seen.insert(p) {
                    next.insert(p);
                }
            }
        }
        level = next.into_iter().collect();
        out.extend(&level);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionRecord {
    pub id: RelId,
    pub source: EntityId,
    pub target: EntityId,
    pub interaction_id: Option<String>,
    pub duration: (f64, f64),
    pub description: Option<String>,
}

/// Interactions with `object` as source or target whose duration
/// `[s, e)` overlaps the window: `s <= t1 && t0 < e`.
pub fn interactions_during(
    graph: &ModelGraph,
    object: EntityId,
    t0: f64,
    t1: f64,
) -> Result<Vec<InteractionRecord>, QueryError> {
    require_entity(graph, object)?;
    if t0 > t1 {
        return Err(QueryError::Syntax(format!("window start {t0} after end {t1}")));
    }
    let mut out = Vec::new();
    for r in graph.incident(object.into()) {
        let rel = graph.relationship(r).expect("incident ids exist");
        if rel.set != INTERACTIONS {
            continue;
        }
        let (Some(RecordRef::Entity(source)), Some(RecordRef::Entity(target))) = (
            rel.bindings.get(ROLE_SOURCE).copied(),
            rel.bindings.get(ROLE_TARGET).copied(),
        ) else {
            continue;
        };
        let Some((s, e)) = rel.attrs.interval("duration") else {
            continue;
        };
        if s <= t1 && t0 < e {
            out.push(InteractionRecord {
                id: r,
                source,
                target,
                interaction_id: rel.attrs.text("interaction_id").map(str::to_string),
                duration: (s, e),
                description: rel.attrs.text("description").map(str::to_string),
            });
        }
    }
    out.sort_by_key(|i| i.id);
    Ok(out)
}

/// Objects the subject contains at `t`: Contains duration `enter <= t < exit`.
pub fn contained_at(graph: &ModelGraph, subject: EntityId, t: f64) -> Result<Vec<EntityId>, QueryError> {
    require_entity(graph, subject)?;
    let found: BTreeSet<EntityId> = neighbours(graph, CONTAINS, subject, ROLE_SUBJECT, ROLE_OBJECT)
        .into_iter()
        .filter(|(r, _)| {
            graph
                .relationship(*r)
                .and_then(|x| x.attrs.interval("duration"))
                .is_some_and(|(enter, exit)| enter <= t && t < exit)
        })
        .filter_map(|(_, o)| match o {
            RecordRef::Entity(e) => Some(e),
            RecordRef::Rel(_) => None,
        })
        .collect();
    Ok(found.into_iter().collect())
}

/// Path indices of the FLSs assigned to `object` through Flight Paths.
pub fn fls_indices(graph: &ModelGraph, object: EntityId) -> Vec<usize> {
    let set: BTreeSet<usize> = neighbours(graph, FLIGHT_PATHS, object, ROLE_OBJECT, ROLE_FLS)
        .into_iter()
        .filter_map(|(_, f)| graph.attrs_of(f)?.number("index"))
        .filter(|i| *i >= 0.0 && i.fract() == 0.0)
        .map(|i| i as usize)
        .collect();
    set.into_iter().collect()
}

/// Lit FLS positions of `object` at `t`.
pub fn lit_points_at(graph: &ModelGraph, paths: &FlightPathSet, object: EntityId, t: f64) -> Vec<Coordinate> {
    fls_indices(graph, object)
        .into_iter()
        .filter_map(|i| paths.sample_at(i, t))
        .filter(|p| p.color.is_lit())
        .map(|p| p.coord)
        .collect()
}

fn centroid(points: &[Coordinate]) -> Option<Coordinate> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let s = points.iter().fold(Coordinate::ORIGIN, |a, p| {
        Coordinate::new(a.l + p.l, a.h + p.h, a.d + p.d)
    });
    Some(Coordinate::new(s.l / n, s.h / n, s.d / n))
}

/// Objects whose lit-point centroid at `t` lies strictly inside the
/// axis-aligned box of the container's lit points. The container and its
/// transitive parts are never reported.
pub fn hidden_in(
    graph: &ModelGraph,
    paths: &FlightPathSet,
    container: EntityId,
    t: f64,
) -> Result<Vec<EntityId>, QueryError> {
    require_entity(graph, container)?;
    let walls = lit_points_at(graph, paths, container, t);
    if walls.is_empty() {
        return Err(QueryError::NotCompiled(graph.format_entity(container)));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for p in &walls {
        for (axis, v) in [p.l, p.h, p.d].into_iter().enumerate() {
            lo[axis] = lo[axis].min(v);
            hi[axis] = hi[axis].max(v);
        }
    }
    let excluded: BTreeSet<EntityId> = parts_of(graph, container, true)?
        .into_iter()
        .chain([container])
        .collect();
    let object_set = graph.object_set()?.to_string();
    let mut out = Vec::new();
    for (id, _) in graph.entities_in(&object_set) {
        if excluded.contains(&id) {
            continue;
        }
        let Some(c) = centroid(&lit_points_at(graph, paths, id, t)) else {
            continue;
        };
        let inside = [c.l, c.h, c.d]
            .into_iter()
            .enumerate()
            .all(|(axis, v)| lo[axis] < v && v < hi[axis]);
        if inside {
            out.push(id);
        }
    }
    Ok(out)
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Attaches a key/value note to any entity or relationship, stamped with
/// the current time.
pub fn annotate(
    graph: &mut ModelGraph,
    target: RecordRef,
    key: &str,
    value: &str,
    author: &str,
) -> Result<AnnotationId, QueryError> {
    Ok(graph.add_annotation(target, key, value, author, now_millis())?)
}

/// Targets carrying an annotation with exactly `key` and, if given, `value`.
pub fn find_by_annotation(graph: &ModelGraph, key: &str, value: Option<&str>) -> Vec<RecordRef> {
    let found: BTreeSet<RecordRef> = graph
        .annotations()
        .filter(|(_, a)| a.key == key && value.is_none_or(|v| a.value == v))
        .map(|(_, a)| a.target)
        .collect();
    found.into_iter().collect()
}

/// Organs whose disease list contains `name` exactly.
pub fn organs_with_disease(graph: &ModelGraph, name: &str) -> Result<Vec<EntityId>, QueryError> {
    let has_disease = graph
        .schema()
        .entity_attributes(ORGANS)
        .is_some_and(|defs| defs.iter().any(|d| d.name == "disease"));
    if !has_disease {
        return Err(graph.mismatch("an Organs set with a disease attribute").into());
    }
    Ok(graph
        .entities_in(ORGANS)
        .filter(|(_, e)| {
            e.attrs
                .get("disease")
                .is_some_and(|v| v.scalars().iter().any(|s| s.as_text() == Some(name)))
        })
        .map(|(id, _)| id)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticRecord {
    pub id: EntityId,
    pub sound_id: String,
    pub pitch: Option<f64>,
    pub db: Option<f64>,
    pub frequency: Option<f64>,
    pub trigger: Option<String>,
    pub time: Option<f64>,
}

/// Sounds linked to `object` by Make Noise with exactly this trigger.
pub fn triggered_sounds(
    graph: &ModelGraph,
    object: EntityId,
    trigger: &str,
) -> Result<Vec<AcousticRecord>, QueryError> {
    require_entity(graph, object)?;
    let mut out = Vec::new();
    for (r, sound) in neighbours(graph, MAKE_NOISE, object, ROLE_OBJECT, ROLE_ACOUSTIC) {
        let link = &graph.relationship(r).expect("neighbour ids exist").attrs;
        if link.text("trigger") != Some(trigger) {
            continue;
        }
        let (RecordRef::Entity(id), Some(a)) = (sound, graph.attrs_of(sound)) else {
            continue;
        };
        out.push(AcousticRecord {
            id,
            sound_id: a.text("sound_id").unwrap_or_default().to_string(),
            pitch: a.number("pitch"),
            db: a.number("db"),
            frequency: a.number("frequency"),
            trigger: Some(trigger.to_string()),
            time: link.number("time"),
        });
    }
    out.sort_by_key(|a| a.id);
    out.dedup_by_key(|a| a.id);
    Ok(out)
}

/// The line grammar accepted by the command-line `query` verb.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    PartsOf { object: String, transitive: bool },
    InteractionsOf { object: String, t0: f64, t1: f64 },
    ContainedAt { subject: String, t: f64 },
    HiddenIn { container: String, t: f64 },
    FindAnnotated { key: String, value: Option<String> },
    OrgansWith { disease: String },
    SoundsOf { object: String, trigger: String },
}

pub const QUERY_GRAMMAR: &str = "\
parts-of <id> [transitive]
interactions-of <id> <t0> <t1>
contained-at <subject-id> <t>
hidden-in <container-id> <t>        (needs compiled flight paths)
find-annotated <key> [<value>]
organs-with <disease>
sounds-of <id> <trigger>";

/// Splits on whitespace; double quotes group words.
fn words(line: &str) -> Result<Vec<String>, QueryError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut any = false;
    for c in line.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            c if c.is_whitespace() && !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => {
                cur.push(c);
                any = true;
            }
        }
    }
    if quoted {
        return Err(QueryError::Syntax("unterminated quote".into()));
    }
    if any {
        out.push(cur);
    }
    Ok(out)
}

fn time(s: &str) -> Result<f64, QueryError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| QueryError::Syntax(format!("not a time: '{s}'")))
}

impl std::str::FromStr for Query {
    type Err = QueryError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let w = words(line)?;
        let w: Vec<&str> = w.iter().map(String::as_str).collect();
        let q = match w[..] {
            ["parts-of", id] => Query::PartsOf {
                object: id.into(),
                transitive: false,
            },
            ["parts-of", id, "transitive"] => Query::PartsOf {
                object: id.into(),
                transitive: true,
            },
            ["interactions-of", id, t0, t1] => Query::InteractionsOf {
                object: id.into(),
                t0: time(t0)?,
                t1: time(t1)?,
            },
            ["contained-at", id, t] => Query::ContainedAt {
                subject: id.into(),
                t: time(t)?,
            },
            ["hidden-in", id, t] => Query::HiddenIn {
                container: id.into(),
                t: time(t)?,
            },
            ["find-annotated", key] => Query::FindAnnotated {
                key: key.into(),
                value: None,
            },
            ["find-annotated", key, value] => Query::FindAnnotated {
                key: key.into(),
                value: Some(value.into()),
            },
            ["organs-with", d] => Query::OrgansWith { disease: d.into() },
            ["sounds-of", id, trigger] => Query::SoundsOf {
                object: id.into(),
                trigger: trigger.into(),
            },
            _ => {
                return Err(QueryError::Syntax(format!(
                    "'{line}'; expected one of:\n{QUERY_GRAMMAR}"
                )))
            }
        };
        Ok(q)
    }
}

impl Query {
    pub fn needs_paths(&self) -> bool {
        matches!(self, Query::HiddenIn { .. })
    }

    /// Runs the query and renders one result per line.
    pub fn run(&self, graph: &ModelGraph, paths: Option<&FlightPathSet>) -> Result<Vec<String>, QueryError> {
        let ids = |v: Vec<EntityId>| v.into_iter().map(|e| graph.format_entity(e)).collect();
        Ok(match self {
            Query::PartsOf { object, transitive } => ids(parts_of(graph, graph.parse_entity(object)?, *transitive)?),
            Query::InteractionsOf { object, t0, t1 } => {
                interactions_during(graph, graph.parse_entity(object)?, *t0, *t1)?
                    .into_iter()
                    .map(|i| {
                        let mut line = format!(
                            "{} source={} target={} duration=[{:?},{:?})",
                            graph.format_ref(i.id.into()),
                            graph.format_entity(i.source),
                            graph.format_entity(i.target),
                            i.duration.0,
                            i.duration.1
                        );
                        if let Some(d) = &i.description {
                            line.push_str(&format!(" description={d:?}"));
                        }
                        line
                    })
                    .collect()
            }
            Query::ContainedAt { subject, t } => ids(contained_at(graph, graph.parse_entity(subject)?, *t)?),
            Query::HiddenIn { container, t } => {
                let paths = paths.ok_or_else(|| QueryError::NotCompiled(container.clone()))?;
                ids(hidden_in(graph, paths, graph.parse_entity(container)?, *t)?)
            }
            Query::FindAnnotated { key, value } => find_by_annotation(graph, key, value.as_deref())
                .into_iter()
                .map(|r| graph.format_ref(r))
                .collect(),
            Query::OrgansWith { disease } => ids(organs_with_disease(graph, disease)?),
            Query::SoundsOf { object, trigger } => triggered_sounds(graph, graph.parse_entity(object)?, trigger)?
                .into_iter()
                .map(|a| format!("{} sound_id={:?}", graph.format_entity(a.id), a.sound_id))
                .collect(),
        })
    }
}
