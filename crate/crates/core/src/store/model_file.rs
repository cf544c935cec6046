//! Text serialization of a [`ModelGraph`].
//!
//! ```text
//! flsm 1 schema core next 6
//! entity FLSs fls:2 beta=60.0 force_n=1.0 model=mk1 nu=1.0 omega=30.0
//! entity Objects obj:1 name=petal
//! geom obj:1 fps=24.0 t0=0.0 frames=1
//! pt obj:1 0 0.0 0.0 0.0 1.0 1.0 1.0 1.0
//! rel "Flight Paths" fp:3 fls=fls:2 object=obj:1 interval=[0.0..1.0]
//! ann ann:4 obj:1 mood=calm author=ana ts=0
//! ```
//!
//! Records are sorted by kind, then set name, then id; attributes and role
//! bindings by name. Numbers use the shortest form that reads back to the
//! same bits, so writing a graph that was read from a file reproduces the
//! file byte for byte.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::text::{push_word, tokenize, Atom, Item, Value};
use super::StoreError;
use crate::geom::{ColorRGBA, Coordinate, FrameSequence, Point, PointSet};
use crate::model::schema::SetRef;
use crate::model::{
    validate, AnnotationId, AnnotationRecord, AttrDef, AttrKind, AttrValue, Attrs, Entity, EntityId, ModelGraph,
    RecordRef, RelId, Relationship, Scalar, SchemaRegistry,
};

pub const MODEL_MAGIC: &str = "flsm";
pub const MODEL_VERSION: u32 = 1;

// guards allocation on hostile input
const MAX_FRAMES: usize = 1 << 24;

fn push_scalar(out: &mut String, s: &Scalar) {
    match s {
        Scalar::Text(t) => push_word(out, t),
        Scalar::Number(v) => {
            let _ = write!(out, "{v:?}");
        }
        Scalar::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Scalar::Interval(a, b) => {
            let _ = write!(out, "{a:?}..{b:?}");
        }
    }
}

fn push_attrs(out: &mut String, attrs: &Attrs) {
    for (name, value) in attrs.iter() {
        out.push(' ');
        push_word(out, name);
        out.push('=');
        match value {
            AttrValue::One(s) => push_scalar(out, s),
            AttrValue::Many(items) => {
                out.push('[');
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    push_scalar(out, s);
                }
                out.push(']');
            }
        }
    }
}

/// Serializes `graph` deterministically.
pub fn format_model(graph: &ModelGraph) -> String {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    let _ = write!(out, " {MODEL_VERSION} schema ");
    push_word(&mut out, graph.schema().name());
    let _ = writeln!(out, " next {}", graph.next_id());

    let mut entities: Vec<(&str, EntityId, &Entity)> =
        graph.entities().map(|(id, e)| (e.set.as_str(), id, e)).collect();
    entities.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)));
    for (set, id, e) in entities {
        out.push_str("entity ");
        push_word(&mut out, set);
        let _ = write!(out, " {}", graph.format_entity(id));
        push_attrs(&mut out, &e.attrs);
        out.push('\n');
    }

    for (id, seq) in graph.geometries() {
        let r = graph.format_entity(id);
        let _ = writeln!(
            out,
            "geom {r} fps={:?} t0={:?} frames={}",
            seq.fps,
            seq.t0,
            seq.frames.len()
        );
        for (k, frame) in seq.frames.iter().enumerate() {
            for p in &frame.points {
                let (c, k2) = (p.coord, p.color);
                let _ = writeln!(
                    out,
                    "pt {r} {k} {:?} {:?} {:?} {:?} {:?} {:?} {:?}",
                    c.l, c.h, c.d, k2.r, k2.g, k2.b, k2.a
                );
            }
        }
    }

    let mut rels: Vec<(&str, RelId, &Relationship)> =
        graph.relationships().map(|(id, r)| (r.set.as_str(), id, r)).collect();
    rels.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)));
    for (set, id, rel) in rels {
        out.push_str("rel ");
        push_word(&mut out, set);
        let _ = write!(out, " {}", graph.format_ref(id.into()));
        for (role, target) in &rel.bindings {
            out.push(' ');
            push_word(&mut out, role);
            let _ = write!(out, "={}", graph.format_ref(*target));
        }
        push_attrs(&mut out, &rel.attrs);
        out.push('\n');
    }

    for (id, ann) in graph.annotations() {
        let _ = write!(out, "ann ann:{} {} ", id.0, graph.format_ref(ann.target));
        push_word(&mut out, &ann.key);
        out.push('=');
        push_word(&mut out, &ann.value);
        out.push_str(" author=");
        push_word(&mut out, &ann.author);
        let _ = writeln!(out, " ts={}", ann.created_at);
    }
    out
}

/// Writes the model to `path`. Unless `allow_invalid` is set (draft saves),
/// the graph must pass validation first.
pub fn write_model(graph: &ModelGraph, path: impl AsRef<Path>, allow_invalid: bool) -> Result<(), StoreError> {
    if !allow_invalid {
        let report = validate(graph);
        if !report.is_valid() {
            return Err(StoreError::InvalidModel(Box::new(report)));
        }
    }
    let path = path.as_ref();
    std::fs::write(path, format_model(graph)).map_err(|e| StoreError::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>, registry: &SchemaRegistry) -> Result<ModelGraph, StoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_model(&text, registry)
}

/// `prefix:n` split into its parts.
fn split_ref(s: &str) -> Option<(&str, u64)> {
    let (p, n) = s.split_once(':')?;
    if p.is_empty() || n.starts_with('+') {
        return None;
    }
    Some((p, n.parse().ok()?))
}

fn parse_f64(s: &str) -> Option<f64> {
    // `{:?}` never writes a leading '+' or 'infinity'
    if s.starts_with('+') || s.eq_ignore_ascii_case("infinity") || s.eq_ignore_ascii_case("-infinity") {
        return None;
    }
    s.parse().ok()
}

fn typed_scalar(kind: AttrKind, atom: &Atom) -> Result<Scalar, String> {
    let bare = |what: &str| -> Result<&str, String> {
        if atom.quoted {
            Err(format!("{what} must not be quoted"))
        } else {
            Ok(atom.text.as_str())
        }
    };
    match kind {
        AttrKind::Text => Ok(Scalar::Text(atom.text.clone())),
        AttrKind::Number => {
            let t = bare("a number")?;
            parse_f64(t)
                .map(Scalar::Number)
                .ok_or_else(|| format!("not a number: '{t}'"))
        }
        AttrKind::Bool => match bare("a boolean")? {
            "true" => Ok(Scalar::Bool(true)),
            "false" => Ok(Scalar::Bool(false)),
            t => Err(format!("not a boolean: '{t}'")),
        },
        AttrKind::Interval => {
            let t = bare("an interval")?;
            t.split_once("..")
                .and_then(|(a, b)| Some(Scalar::Interval(parse_f64(a)?, parse_f64(b)?)))
                .ok_or_else(|| format!("not an interval: '{t}'"))
        }
    }
}

fn typed_value(def: &AttrDef, v: &Value) -> Result<AttrValue, String> {
    match v {
        Value::Atom(a) => typed_scalar(def.kind, a).map(AttrValue::One),
        Value::List(items) => items
            .iter()
            .map(|a| typed_scalar(def.kind, a))
            .collect::<Result<Vec<_>, _>>()
            .map(AttrValue::Many),
    }
}

fn bare_word(item: Option<&Item>) -> Option<&str> {
    match item {
        Some(Item::Word(a)) => Some(&a.text),
        _ => None,
    }
}

fn pair<'a>(item: Option<&'a Item>, key: &str) -> Option<&'a Atom> {
    match item {
        Some(Item::Pair(k, Value::Atom(a))) if k == key => Some(a),
        _ => None,
    }
}

struct PendingRel {
    line: usize,
    id: RelId,
    set: String,
    bindings: Vec<(String, String)>,
    attrs: Attrs,
}

struct PendingAnn {
    line: usize,
    id: AnnotationId,
    target: String,
    record: AnnotationRecord,
}

struct PendingGeom {
    line: usize,
    entity: String,
    fps: f64,
    t0: f64,
    frames: Vec<PointSet>,
}

pub fn parse_model(text: &str, registry: &SchemaRegistry) -> Result<ModelGraph, StoreError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| StoreError::parse(1, "missing header"))?;
    let head = tokenize(header).map_err(|e| StoreError::parse(hline, e))?;
    let words: Vec<&str> = head.iter().map(|i| bare_word(Some(i)).unwrap_or("=")).collect();
    let (schema_name, next) = match words[..] {
        [MODEL_MAGIC, ver, "schema", name, "next", next] => {
            if ver != MODEL_VERSION.to_string() {
                return Err(StoreError::parse(hline, format!("unsupported model version {ver}")));
            }
            let next: u64 = next.parse().map_err(|_| StoreError::parse(hline, "bad next id"))?;
            (name, next)
        }
        _ => return Err(StoreError::parse(hline, "expected 'flsm 1 schema <name> next <n>'")),
    };
    let schema = registry
        .get(schema_name)
        .ok_or_else(|| StoreError::UnknownSchemaReference(schema_name.to_string()))?;
    let mut graph = ModelGraph::new(schema.clone());

    // id -> prefix of the record that owns it
    let mut owners: HashMap<u64, String> = HashMap::new();
    let mut claim = |line: usize, id: u64, prefix: &str| -> Result<(), StoreError> {
        if id == 0 || owners.insert(id, prefix.to_string()).is_some() {
            return Err(StoreError::parse(line, "duplicate id"));
        }
        Ok(())
    };
    let mut rels = Vec::new();
    let mut anns = Vec::new();
    let mut geoms: Vec<PendingGeom> = Vec::new();
    let mut geom_index: BTreeMap<String, usize> = BTreeMap::new();

    for (line, raw) in lines {
        let err = |reason: String| StoreError::parse(line, reason);
        let items = tokenize(raw).map_err(err)?;
        let kind = bare_word(items.first()).ok_or_else(|| err("missing record kind".into()))?;
        match kind {
            "entity" | "rel" => {
                let set = match items.get(1) {
                    Some(Item::Word(a)) => a.text.clone(),
                    _ => return Err(err("missing set name".into())),
                };
                let rref = bare_word(items.get(2)).ok_or_else(|| err("missing id".into()))?;
                let (prefix, id) = split_ref(rref).ok_or_else(|| err(format!("bad id '{rref}'")))?;
                let (defs, rel_def) = match (kind, schema.set(&set)) {
                    ("entity", Some(SetRef::Entity(_))) => (schema.entity_attributes(&set).unwrap_or(&[]), None),
                    ("rel", Some(SetRef::Rel(r))) => (r.attributes.as_slice(), Some(r)),
                    _ => return Err(StoreError::UnknownSchemaReference(set)),
                };
                if schema.prefix_of(&set) != Some(prefix) {
                    return Err(err(format!("id '{rref}' does not carry the prefix of '{set}'")));
                }
                claim(line, id, prefix)?;
                let mut attrs = Attrs::new();
                let mut bindings = Vec::new();
                for item in &items[3..] {
                    let Item::Pair(key, value) = item else {
                        return Err(err("expected key=value".into()));
                    };
                    if let Some(role) = rel_def.and_then(|r| r.role_def(key)) {
                        let Value::Atom(a) = value else {
                            return Err(err(format!("role '{}' takes one id", role.name)));
                        };
                        bindings.push((key.clone(), a.text.clone()));
                        continue;
                    }
                    let def = defs
                        .iter()
                        .find(|d| &d.name == key)
                        .ok_or_else(|| err(format!("unknown attribute '{key}' for '{set}'")))?;
                    if attrs.get(key).is_some() {
                        return Err(err(format!("attribute '{key}' given twice")));
                    }
                    attrs.set(key.clone(), typed_value(def, value).map_err(err)?);
                }
                if kind == "entity" {
                    graph.insert_entity_raw(EntityId(id), Entity { set, attrs });
                } else {
                    rels.push(PendingRel {
                        line,
                        id: RelId(id),
                        set,
                        bindings,
                        attrs,
                    });
                }
            }
            "geom" => {
                let target = bare_word(items.get(1)).ok_or_else(|| err("missing entity id".into()))?;
                let num = |key: &str, idx: usize| {
                    pair(items.get(idx), key)
                        .filter(|a| !a.quoted)
                        .and_then(|a| parse_f64(&a.text))
                        .ok_or_else(|| err(format!("expected {key}=<number>")))
                };
                let fps = num("fps", 2)?;
                let t0 = num("t0", 3)?;
                let frames: usize = pair(items.get(4), "frames")
                    .and_then(|a| a.text.parse().ok())
                    .ok_or_else(|| err("expected frames=<count>".into()))?;
                if items.len() != 5 {
                    return Err(err("unexpected trailing items".into()));
                }
                if geom_index.insert(target.to_string(), geoms.len()).is_some() {
                    return Err(err(format!("second geometry for '{target}'")));
                }
                if frames > MAX_FRAMES {
                    return Err(err(format!("more than {MAX_FRAMES} frames")));
                }
                geoms.push(PendingGeom {
                    line,
                    entity: target.to_string(),
                    fps,
                    t0,
                    frames: vec![PointSet::default(); frames],
                });
            }
            "pt" => {
                let target = bare_word(items.get(1)).ok_or_else(|| err("missing entity id".into()))?;
                let g = geom_index
                    .get(target)
                    .map(|&i| &mut geoms[i])
                    .ok_or_else(|| err(format!("point before geometry of '{target}'")))?;
                let frame: usize = bare_word(items.get(2))
                    .and_then(|s| s.parse().ok())
                    .filter(|&k| k < g.frames.len())
                    .ok_or_else(|| err("bad frame index".into()))?;
                let vals: Option<Vec<f64>> = items[3..]
                    .iter()
                    .map(|i| match i {
                        Item::Word(a) if !a.quoted => parse_f64(&a.text),
                        _ => None,
                    })
                    .collect();
                let v = vals
                    .filter(|v| v.len() == 7)
                    .ok_or_else(|| err("expected 7 numbers".into()))?;
                g.frames[frame].points.push(Point::new(
                    Coordinate::new(v[0], v[1], v[2]),
                    ColorRGBA::new(v[3], v[4], v[5], v[6]),
                ));
            }
            "ann" => {
                let aref = bare_word(items.get(1)).ok_or_else(|| err("missing annotation id".into()))?;
                let id = match split_ref(aref) {
                    Some(("ann", id)) => id,
                    _ => return Err(err(format!("bad annotation id '{aref}'"))),
                };
                claim(line, id, "ann")?;
                let target = bare_word(items.get(2)).ok_or_else(|| err("missing target".into()))?;
                let (key, value) = match items.get(3) {
                    Some(Item::Pair(k, Value::Atom(v))) => (k.clone(), v.text.clone()),
                    _ => return Err(err("expected key=value".into())),
                };
                let author = pair(items.get(4), "author").ok_or_else(|| err("expected author=".into()))?;
                let ts: u64 = pair(items.get(5), "ts")
                    .filter(|a| !a.quoted)
                    .and_then(|a| a.text.parse().ok())
                    .ok_or_else(|| err("expected ts=<millis>".into()))?;
                if items.len() != 6 {
                    return Err(err("unexpected trailing items".into()));
                }
                anns.push(PendingAnn {
                    line,
                    id: AnnotationId(id),
                    target: target.to_string(),
                    record: AnnotationRecord {
                        target: RecordRef::Entity(EntityId(0)),
                        key,
                        value,
                        author: author.text.clone(),
                        created_at: ts,
                    },
                });
            }
            other => return Err(err(format!("unknown record kind '{other}'"))),
        }
    }

    // References are resolved once every id is known, since relationships
    // may bind other relationships.
    let resolve = |line: usize, text: &str| -> Result<RecordRef, StoreError> {
        let bad = || StoreError::parse(line, format!("unknown id '{text}'"));
        let (prefix, id) = split_ref(text).ok_or_else(bad)?;
        if owners.get(&id).map(String::as_str) != Some(prefix) {
            return Err(bad());
        }
        match schema.set_by_prefix(prefix) {
            Some(SetRef::Entity(_)) => Ok(RecordRef::Entity(EntityId(id))),
            Some(SetRef::Rel(_)) => Ok(RecordRef::Rel(RelId(id))),
            None => Err(bad()),
        }
    };
    for r in rels {
        let mut bindings = BTreeMap::new();
        for (role, target) in r.bindings {
            let t = resolve(r.line, &target)?;
            if bindings.insert(role.clone(), t).is_some() {
                return Err(StoreError::parse(r.line, format!("role '{role}' bound twice")));
            }
        }
        graph.insert_rel_raw(
            r.id,
            Relationship {
                set: r.set,
                bindings,
                attrs: r.attrs,
            },
        );
    }
    for a in anns {
        let mut record = a.record;
        record.target = resolve(a.line, &a.target)?;
        graph.insert_annotation_raw(a.id, record);
    }
    for g in geoms {
        let id = match resolve(g.line, &g.entity)? {
            RecordRef::Entity(e) => e,
            RecordRef::Rel(_) => return Err(StoreError::parse(g.line, "geometry must belong to an entity")),
        };
        graph.geometry.insert(
            id,
            FrameSequence {
                fps: g.fps,
                t0: g.t0,
                frames: g.frames,
            },
        );
    }
    if owners.keys().any(|&id| id >= next) {
        return Err(StoreError::parse(hline, "next id must exceed every record id"));
    }
    graph.set_next_id(next);
    Ok(graph)
}
