//! Keyframes, per-channel F-curves and the other records of the animation
//! schema.
//!
//! Keyframes live in the graph as `Keyframe` entities linked to their object
//! through `Has Keyframe`. An [`FCurve`] is the time-sorted view of one
//! object's keys on one channel.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::names::*;
use crate::model::{Attrs, EntityId, ModelError, ModelGraph, RecordRef};

/// Animatable property of an object. Vector properties are split into
/// scalar channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    PositionL,
    PositionH,
    PositionD,
    ColorR,
    ColorG,
    ColorB,
    ColorA,
    Scale,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::PositionL,
        Channel::PositionH,
        Channel::PositionD,
        Channel::ColorR,
        Channel::ColorG,
        Channel::ColorB,
        Channel::ColorA,
        Channel::Scale,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::PositionL => "position.l",
            Channel::PositionH => "position.h",
            Channel::PositionD => "position.d",
            Channel::ColorR => "color.r",
            Channel::ColorG => "color.g",
            Channel::ColorB => "color.b",
            Channel::ColorA => "color.a",
            Channel::Scale => "scale",
        }
    }

    /// Value of an unanimated channel: no translation, unit scale, and
    /// color factors of one (base colors unchanged).
    pub fn identity(&self) -> f64 {
        match self {
            Channel::PositionL | Channel::PositionH | Channel::PositionD => 0.0,
            _ => 1.0,
        }
    }

    pub fn is_color(&self) -> bool {
        matches!(
            self,
            Channel::ColorR | Channel::ColorG | Channel::ColorB | Channel::ColorA
        )
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = AnimationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| AnimationError::UnknownChannel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interp {
    Linear,
    Bezier,
}

impl Interp {
    pub fn name(&self) -> &'static str {
        match self {
            Interp::Linear => "linear",
            Interp::Bezier => "bezier",
        }
    }
}

impl FromStr for Interp {
    type Err = AnimationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Interp::Linear),
            "bezier" => Ok(Interp::Bezier),
            other => Err(AnimationError::InvalidKeyframe(format!(
                "unknown interpolation '{other}'"
            ))),
        }
    }
}

/// Bezier control offset `(dt, dv)` relative to its key.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Handle {
    pub dt: f64,
    pub dv: f64,
}

impl Handle {
    pub const fn new(dt: f64, dv: f64) -> Self {
        Self { dt, dv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub time: f64,
    pub channel: Channel,
    pub value: f64,
    /// Interpolation of the segment that starts at this key.
    pub interp: Interp,
    pub handle_left: Handle,
    pub handle_right: Handle,
}

impl Keyframe {
    pub fn linear(channel: Channel, time: f64, value: f64) -> Self {
        Self {
            time,
            channel,
            value,
            interp: Interp::Linear,
            handle_left: Handle::default(),
            handle_right: Handle::default(),
        }
    }

    pub fn bezier(channel: Channel, time: f64, value: f64, left: Handle, right: Handle) -> Self {
        Self {
            time,
            channel,
            value,
            interp: Interp::Bezier,
            handle_left: left,
            handle_right: right,
        }
    }

    pub fn check(&self) -> Result<(), AnimationError> {
        let finite = [
            self.time,
            self.value,
            self.handle_left.dt,
            self.handle_left.dv,
            self.handle_right.dt,
            self.handle_right.dv,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(AnimationError::InvalidKeyframe("non-finite component".into()));
        }
        if self.time < 0.0 {
            return Err(AnimationError::InvalidKeyframe("time must be >= 0".into()));
        }
        if self.interp == Interp::Bezier && (self.handle_right.dt < 0.0 || self.handle_left.dt > 0.0) {
            return Err(AnimationError::InvalidKeyframe(
                "bezier handles must point outward in time".into(),
            ));
        }
        Ok(())
    }

    fn to_attrs(self) -> Attrs {
        Attrs::new()
            .with("time", self.time)
            .with("channel", self.channel.name())
            .with("value", self.value)
            .with("interp", self.interp.name())
            .with("hl_dt", self.handle_left.dt)
            .with("hl_dv", self.handle_left.dv)
            .with("hr_dt", self.handle_right.dt)
            .with("hr_dv", self.handle_right.dv)
    }

    fn from_attrs(attrs: &Attrs) -> Result<Self, AnimationError> {
        let num = |n: &str| attrs.number(n).unwrap_or(0.0);
        let time = attrs
            .number("time")
            .ok_or_else(|| AnimationError::InvalidKeyframe("missing time".into()))?;
        let value = attrs
            .number("value")
            .ok_or_else(|| AnimationError::InvalidKeyframe("missing value".into()))?;
        Ok(Self {
            time,
            channel: attrs.text("channel").unwrap_or_default().parse()?,
            value,
            interp: attrs.text("interp").unwrap_or("linear").parse()?,
            handle_left: Handle::new(num("hl_dt"), num("hl_dv")),
            handle_right: Handle::new(num("hr_dt"), num("hr_dv")),
        })
    }
}

/// Keys of one channel of one object, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct FCurve {
    pub object: EntityId,
    pub channel: Channel,
    keys: Vec<Keyframe>,
}

impl FCurve {
    /// Sorts `keys` by time. Fails on an empty list, on a key from another
    /// channel, or on two keys sharing a time.
    pub fn new(object: EntityId, channel: Channel, mut keys: Vec<Keyframe>) -> Result<Self, AnimationError> {
        if keys.is_empty() {
            return Err(AnimationError::InvalidKeyframe("curve needs at least one key".into()));
        }
        if let Some(k) = keys.iter().find(|k| k.channel != channel) {
            return Err(AnimationError::InvalidKeyframe(format!(
                "key on {} in {channel} curve",
                k.channel
            )));
        }
        for k in &keys {
            k.check()?;
        }
        keys.sort_by(|a, b| a.time.total_cmp(&b.time));
        if let Some(w) = keys.windows(2).find(|w| w[0].time >= w[1].time) {
            return Err(AnimationError::DuplicateKeyTime(w[1].time));
        }
        Ok(Self { object, channel, keys })
    }

    pub fn constant(object: EntityId, channel: Channel, value: f64) -> Self {
        Self {
            object,
            channel,
            keys: vec![Keyframe::linear(channel, 0.0, value)],
        }
    }

    pub fn keys(&self) -> &[Keyframe] {
        &self.keys
    }

    pub fn times(&self) -> Vec<f64> {
        self.keys.iter().map(|k| k.time).collect()
    }

    pub fn first_time(&self) -> f64 {
        self.keys[0].time
    }

    pub fn last_time(&self) -> f64 {
        self.keys[self.keys.len() - 1].time
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnimationError {
    #[error("a key already exists at t={0}")]
    DuplicateKeyTime(f64),
    #[error("unknown channel '{0}'")]
    UnknownChannel(String),
    #[error("invalid keyframe: {0}")]
    InvalidKeyframe(String),
    #[error("{0} is not an object")]
    NotAnObject(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type KeyframeId = EntityId;

fn require_object(graph: &ModelGraph, object: EntityId) -> Result<(), AnimationError> {
    let set = graph.object_set()?;
    match graph.entity(object) {
        Some(e) if graph.schema().is_subset_of(&e.set, set) => Ok(()),
        Some(_) => Err(AnimationError::NotAnObject(graph.format_entity(object))),
        None => Err(ModelError::UnknownId(format!("{}", object.0)).into()),
    }
}

/// All keyframe entities of `object`, in id order.
pub fn keyframes_of(graph: &ModelGraph, object: EntityId) -> Result<Vec<(KeyframeId, Keyframe)>, AnimationError> {
    if graph.schema().rel_set(HAS_KEYFRAME).is_none() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (_, rel) in graph.relationships_in(HAS_KEYFRAME) {
        if rel.bindings.get(ROLE_OBJECT) != Some(&RecordRef::Entity(object)) {
            continue;
        }
        let Some(RecordRef::Entity(kid)) = rel.bindings.get(ROLE_KEYFRAME).copied() else {
            continue;
        };
        if let Some(e) = graph.entity(kid) {
            out.push((kid, Keyframe::from_attrs(&e.attrs)?));
        }
    }
    out.sort_by_key(|(id, _)| *id);
    Ok(out)
}

/// Inserts a key into the object's curve for `key.channel`. A key already
/// present at exactly the same time is replaced only when `replace` is set.
pub fn add_keyframe(
    graph: &mut ModelGraph,
    object: EntityId,
    key: Keyframe,
    replace: bool,
) -> Result<KeyframeId, AnimationError> {
    require_object(graph, object)?;
    if graph.schema().entity_set(KEYFRAME).is_none() {
        return Err(ModelError::SchemaMismatch {
            schema: graph.schema().name().to_string(),
            missing: "a Keyframe entity set".into(),
        }
        .into());
    }
    key.check()?;
    let clash = keyframes_of(graph, object)?
        .into_iter()
        .find(|(_, k)| k.channel == key.channel && k.time == key.time);
    if let Some((old, _)) = clash {
        if !replace {
            return Err(AnimationError::DuplicateKeyTime(key.time));
        }
        graph.delete_entity(old, true)?;
    }
    let id = graph.create_entity(KEYFRAME, key.to_attrs())?;
    graph.link(
        HAS_KEYFRAME,
        [(ROLE_OBJECT, object.into()), (ROLE_KEYFRAME, id.into())],
        Attrs::new(),
    )?;
    Ok(id)
}

/// Curve of `channel` (by name) for `object`.
pub fn channel_of(graph: &ModelGraph, object: EntityId, channel: &str) -> Result<FCurve, AnimationError> {
    curve(graph, object, channel.parse()?)
}

/// Curve of `channel` for `object`. Without keys, a one-key constant curve
/// holding the object's static attribute for that channel (or the channel
/// identity when the attribute is absent).
pub fn curve(graph: &ModelGraph, object: EntityId, channel: Channel) -> Result<FCurve, AnimationError> {
    let entity = graph
        .entity(object)
        .ok_or_else(|| ModelError::UnknownId(format!("{}", object.0)))?;
    let keys: Vec<Keyframe> = keyframes_of(graph, object)?
        .into_iter()
        .map(|(_, k)| k)
        .filter(|k| k.channel == channel)
        .collect();
    if keys.is_empty() {
        let value = entity
            .attrs
            .number(channel.name())
            .unwrap_or_else(|| channel.identity());
        return Ok(FCurve::constant(object, channel, value));
    }
    FCurve::new(object, channel, keys)
}

/// True when the object has at least one key on `channel` or a static value
/// for it.
pub fn is_animated(graph: &ModelGraph, object: EntityId, channel: Channel) -> Result<bool, AnimationError> {
    let keyed = keyframes_of(graph, object)?.iter().any(|(_, k)| k.channel == channel);
    let static_value = graph
        .entity(object)
        .is_some_and(|e| e.attrs.number(channel.name()).is_some());
    Ok(keyed || static_value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthoringToolRecord {
    pub name: String,
    pub model: String,
    pub software_specifications: String,
}

pub fn add_authoring_tool(graph: &mut ModelGraph, tool: &AuthoringToolRecord) -> Result<EntityId, AnimationError> {
    if tool.name.is_empty() {
        return Err(ModelError::InvalidAttributeValue {
            attr: "name".into(),
            reason: "must be nonempty".into(),
        }
        .into());
    }
    Ok(graph.create_entity(
        AUTHORING_TOOL,
        Attrs::new()
            .with("name", tool.name.as_str())
            .with("model", tool.model.as_str())
            .with("software_specifications", tool.software_specifications.as_str()),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Rendering,
    Interpolation,
    Annotation,
    Other,
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Rendering => "rendering",
            AlgorithmKind::Interpolation => "interpolation",
            AlgorithmKind::Annotation => "annotation",
            AlgorithmKind::Other => "other",
        }
    }
}

/// A registry identifier for an algorithm, placed in the entity set that
/// matches its kind.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRecord {
    pub id: String,
    pub kind: AlgorithmKind,
    /// Authoring Tool Algorithms entity this one derives from.
    pub derived_from: Option<EntityId>,
}

/// Entity set an algorithm of `kind` belongs to in the graph's schema.
pub fn algorithm_set(graph: &ModelGraph, kind: AlgorithmKind) -> Result<&'static str, ModelError> {
    let schema = graph.schema();
    let base = [DERIVED_ALGORITHMS, ALGORITHMS]
        .into_iter()
        .find(|s| schema.entity_set(s).is_some())
        .ok_or_else(|| graph.mismatch("an algorithms entity set"))?;
    let specific = match kind {
        AlgorithmKind::Rendering => Some(RENDERING),
        AlgorithmKind::Interpolation => Some(INTERPOLATION),
        AlgorithmKind::Annotation => Some(ORGAN_ANNOTATION),
        AlgorithmKind::Other => None,
    };
    match specific {
        None => Ok(base),
        Some(s) if schema.is_subset_of(s, base) && schema.entity_set(s).is_some() => Ok(s),
        Some(s) => Err(graph.mismatch(&format!("a '{s}' algorithms subclass"))),
    }
}

pub fn add_algorithm(graph: &mut ModelGraph, alg: &AlgorithmRecord) -> Result<EntityId, AnimationError> {
    let set = algorithm_set(graph, alg.kind)?;
    let id = graph.create_entity(
        set,
        Attrs::new().with("name", alg.id.as_str()).with("kind", alg.kind.name()),
    )?;
    if let Some(source) = alg.derived_from {
        graph.link(
            DERIVED_FROM,
            [("derived", id.into()), ("source", source.into())],
            Attrs::new(),
        )?;
    }
    Ok(id)
}
