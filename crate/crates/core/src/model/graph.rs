use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::schema::{SchemaHandle, SetRef};
use super::value::{check_attrs, AttrProblem, Attrs};
use crate::geom::FrameSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotationId(pub u64);

/// Something a role or an annotation can point at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecordRef {
    Entity(EntityId),
    Rel(RelId),
}

impl RecordRef {
    pub fn raw(&self) -> u64 {
        match self {
            RecordRef::Entity(e) => e.0,
            RecordRef::Rel(r) => r.0,
        }
    }
}

impl From<EntityId> for RecordRef {
    fn from(id: EntityId) -> Self {
        RecordRef::Entity(id)
    }
}

impl From<RelId> for RecordRef {
    fn from(id: RelId) -> Self {
        RecordRef::Rel(id)
    }
}

pub const ANNOTATION_PREFIX: &str = "ann";

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub set: String,
    pub attrs: Attrs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relationship {
    pub set: String,
    pub bindings: BTreeMap<String, RecordRef>,
    pub attrs: Attrs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub target: RecordRef,
    pub key: String,
    pub value: String,
    pub author: String,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown set '{0}'")]
    UnknownSet(String),
    #[error("'{0}' is not a relationship set")]
    NotARelationshipSet(String),
    #[error("'{0}' is not an entity set")]
    NotAnEntitySet(String),
    #[error("unknown attribute '{attr}' for set '{set}'")]
    UnknownAttribute { set: String, attr: String },
    #[error("attribute '{attr}' expects {expected}")]
    AttributeTypeMismatch { attr: String, expected: String },
    #[error("missing required attribute '{0}'")]
    MissingRequiredAttribute(String),
    #[error("attribute '{attr}' {reason}")]
    InvalidAttributeValue { attr: String, reason: String },
    #[error("attribute '{0}' holds duplicate values")]
    DuplicateValue(String),
    #[error("at least one of {} is required", .0.join("/"))]
    MissingOneOf(Vec<String>),
    #[error("relationship set '{set}' has no role '{role}'")]
    UnknownRole { set: String, role: String },
    #[error("missing binding for role '{0}'")]
    MissingRole(String),
    #[error("role '{role}' expects {expected}, got {found}")]
    RoleTypeMismatch {
        role: String,
        expected: String,
        found: String,
    },
    #[error("a record cannot be linked to itself through '{0}'")]
    SelfLoop(String),
    #[error("unknown id '{0}'")]
    UnknownId(String),
    #[error("{0} incident record(s) reference this entity")]
    HasIncidentRelationships(usize),
    #[error("graph schema '{schema}' lacks {missing}")]
    SchemaMismatch { schema: String, missing: String },
}

impl ModelError {
    fn from_problem(set: &str, p: AttrProblem) -> Self {
        match p {
            AttrProblem::Unknown(attr) => ModelError::UnknownAttribute {
                set: set.to_string(),
                attr,
            },
            AttrProblem::Missing(a) => ModelError::MissingRequiredAttribute(a),
            AttrProblem::TypeMismatch { name, expected } => ModelError::AttributeTypeMismatch { attr: name, expected },
            AttrProblem::Invalid { name, reason } => ModelError::InvalidAttributeValue { attr: name, reason },
            AttrProblem::Duplicate { name } => ModelError::DuplicateValue(name),
            AttrProblem::MissingOneOf(v) => ModelError::MissingOneOf(v),
        }
    }
}

/// Typed instance graph over one schema.
///
/// Entities, relationships and annotations share one id counter; ids are
/// never reused. Mutation is single-writer; call [`ModelGraph::snapshot`] to
/// hand an immutable copy to readers on other threads.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    schema: SchemaHandle,
    pub(crate) entities: BTreeMap<EntityId, Entity>,
    pub(crate) relationships: BTreeMap<RelId, Relationship>,
    pub(crate) annotations: BTreeMap<AnnotationId, AnnotationRecord>,
    /// Base geometry of objects: one frame for static point clouds, several
    /// for precomputed mesh sequences.
    pub(crate) geometry: BTreeMap<EntityId, FrameSequence>,
    pub(crate) next_id: u64,
}

impl PartialEq for ModelGraph {
    fn eq(&self, other: &Self) -> bool {
        self.schema.name() == other.schema.name()
            && self.entities == other.entities
            && self.relationships == other.relationships
            && self.annotations == other.annotations
            && self.geometry == other.geometry
    }
}

impl ModelGraph {
    pub fn new(schema: SchemaHandle) -> Self {
        Self {
            schema,
            entities: BTreeMap::new(),
            relationships: BTreeMap::new(),
            annotations: BTreeMap::new(),
            geometry: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn schema(&self) -> &SchemaHandle {
        &self.schema
    }

    pub fn snapshot(&self) -> Arc<ModelGraph> {
        Arc::new(self.clone())
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(&id)
    }

    pub fn relationship(&self, id: RelId) -> Option<&Relationship> {
        self.relationships.get(&id)
    }

    pub fn annotation(&self, id: AnnotationId) -> Option<&AnnotationRecord> {
        self.annotations.get(&id)
    }

    pub fn entities(&self) -> impl Iterator<Item = (EntityId, &Entity)> {
        self.entities.iter().map(|(k, v)| (*k, v))
    }

    pub fn relationships(&self) -> impl Iterator<Item = (RelId, &Relationship)> {
        self.relationships.iter().map(|(k, v)| (*k, v))
    }

    pub fn annotations(&self) -> impl Iterator<Item = (AnnotationId, &AnnotationRecord)> {
        self.annotations.iter().map(|(k, v)| (*k, v))
    }

    /// Entities whose set is `set` or a descendant of it, in id order.
    pub fn entities_in<'a>(&'a self, set: &'a str) -> impl Iterator<Item = (EntityId, &'a Entity)> + 'a {
        self.entities()
            .filter(move |(_, e)| self.schema.is_subset_of(&e.set, set))
    }

    pub fn relationships_in<'a>(&'a self, set: &'a str) -> impl Iterator<Item = (RelId, &'a Relationship)> + 'a {
        self.relationships().filter(move |(_, r)| r.set == set)
    }

    pub fn contains_ref(&self, r: RecordRef) -> bool {
        match r {
            RecordRef::Entity(e) => self.entities.contains_key(&e),
            RecordRef::Rel(id) => self.relationships.contains_key(&id),
        }
    }

    pub fn set_of(&self, r: RecordRef) -> Option<&str> {
        match r {
            RecordRef::Entity(e) => self.entities.get(&e).map(|x| x.set.as_str()),
            RecordRef::Rel(id) => self.relationships.get(&id).map(|x| x.set.as_str()),
        }
    }

    pub fn attrs_of(&self, r: RecordRef) -> Option<&Attrs> {
        match r {
            RecordRef::Entity(e) => self.entities.get(&e).map(|x| &x.attrs),
            RecordRef::Rel(id) => self.relationships.get(&id).map(|x| &x.attrs),
        }
    }

    /// External form `<set-prefix>:<n>`, e.g. `obj:7`. Unknown records fall
    /// back to `?:<n>`.
    pub fn format_ref(&self, r: RecordRef) -> String {
        let prefix = self.set_of(r).and_then(|s| self.schema.prefix_of(s)).unwrap_or("?");
        format!("{prefix}:{}", r.raw())
    }

    pub fn format_entity(&self, id: EntityId) -> String {
        self.format_ref(id.into())
    }

    /// Parses `<prefix>:<n>` and checks that the record exists and its set
    /// carries that prefix.
    pub fn parse_ref(&self, text: &str) -> Result<RecordRef, ModelError> {
        let unknown = || ModelError::UnknownId(text.to_string());
        let (prefix, num) = text.split_once(':').ok_or_else(unknown)?;
        let n: u64 = num.parse().map_err(|_| unknown())?;
        let r = if self.entities.contains_key(&EntityId(n)) {
            RecordRef::Entity(EntityId(n))
        } else if self.relationships.contains_key(&RelId(n)) {
            RecordRef::Rel(RelId(n))
        } else {
            return Err(unknown());
        };
        let set = self.set_of(r).ok_or_else(unknown)?;
        if self.schema.prefix_of(set) != Some(prefix) {
            return Err(unknown());
        }
        Ok(r)
    }

    pub fn parse_entity(&self, text: &str) -> Result<EntityId, ModelError> {
        match self.parse_ref(text)? {
            RecordRef::Entity(e) => Ok(e),
            RecordRef::Rel(_) => Err(ModelError::UnknownId(text.to_string())),
        }
    }

    pub fn parse_annotation(&self, text: &str) -> Result<AnnotationId, ModelError> {
        let id = text
            .strip_prefix("ann:")
            .and_then(|n| n.parse().ok())
            .map(AnnotationId)
            .filter(|id| self.annotations.contains_key(id));
        id.ok_or_else(|| ModelError::UnknownId(text.to_string()))
    }

    pub fn create_entity(&mut self, set: &str, attrs: Attrs) -> Result<EntityId, ModelError> {
        let defs = self
            .schema
            .entity_attributes(set)
            .ok_or_else(|| match self.schema.set(set) {
                Some(SetRef::Rel(_)) => ModelError::NotAnEntitySet(set.to_string()),
                _ => ModelError::UnknownSet(set.to_string()),
            })?;
        if let Some(p) = check_attrs(defs, &attrs, &[]).into_iter().next() {
            return Err(ModelError::from_problem(set, p));
        }
        let id = EntityId(self.fresh_id());
        self.entities.insert(
            id,
            Entity {
                set: set.to_string(),
                attrs,
            },
        );
        Ok(id)
    }

    /// Replaces one attribute of an entity after checking the result.
    pub fn set_entity_attr(
        &mut self,
        id: EntityId,
        name: &str,
        value: impl Into<super::value::AttrValue>,
    ) -> Result<(), ModelError> {
        let entity = self
            .entities
            .get(&id)
            .ok_or_else(|| ModelError::UnknownId(format!("{}", id.0)))?;
        let mut attrs = entity.attrs.clone();
        attrs.set(name, value);
        let defs = self.schema.entity_attributes(&entity.set).expect("entity set exists");
        if let Some(p) = check_attrs(defs, &attrs, &[]).into_iter().next() {
            return Err(ModelError::from_problem(&entity.set, p));
        }
        self.entities.get_mut(&id).expect("checked above").attrs = attrs;
        Ok(())
    }

    fn describe_ref(&self, r: RecordRef) -> String {
        match self.set_of(r) {
            Some(set) => format!("{} in '{set}'", self.format_ref(r)),
            None => format!("missing record {}", r.raw()),
        }
    }

    pub fn link<'a, I>(&mut self, rel_set: &str, bindings: I, attrs: Attrs) -> Result<RelId, ModelError>
    where
        I: IntoIterator<Item = (&'a str, RecordRef)>,
    {
        let def = self
            .schema
            .rel_set(rel_set)
            .ok_or_else(|| match self.schema.set(rel_set) {
                Some(SetRef::Entity(_)) => ModelError::NotARelationshipSet(rel_set.to_string()),
                _ => ModelError::UnknownSet(rel_set.to_string()),
            })?;
        let mut bound = BTreeMap::new();
        for (role, target) in bindings {
            let role_def = def.role_def(role).ok_or_else(|| ModelError::UnknownRole {
                set: rel_set.to_string(),
                role: role.to_string(),
            })?;
            if !self.contains_ref(target) {
                return Err(ModelError::UnknownId(self.describe_ref(target)));
            }
            if !self.ref_fits(target, &role_def.target) {
                return Err(ModelError::RoleTypeMismatch {
                    role: role.to_string(),
                    expected: format!("'{}'", role_def.target),
                    found: self.describe_ref(target),
                });
            }
            bound.insert(role.to_string(), target);
        }
        for role in &def.roles {
            if !role.optional && !bound.contains_key(&role.name) {
                return Err(ModelError::MissingRole(role.name.clone()));
            }
        }
        if def.acyclic {
            let a = bound.get(&def.roles[0].name);
            let b = bound.get(&def.roles[1].name);
            if a.is_some() && a == b {
                return Err(ModelError::SelfLoop(rel_set.to_string()));
            }
        }
        if let Some(p) = check_attrs(&def.attributes, &attrs, &def.require_any)
            .into_iter()
            .next()
        {
            return Err(ModelError::from_problem(rel_set, p));
        }
        let id = RelId(self.fresh_id());
        self.relationships.insert(
            id,
            Relationship {
                set: rel_set.to_string(),
                bindings: bound,
                attrs,
            },
        );
        Ok(id)
    }

    /// Whether record `r` may fill a role targeting set `target`: entities
    /// through Is-A substitution, relationships (aggregation) by exact set.
    pub(crate) fn ref_fits(&self, r: RecordRef, target: &str) -> bool {
        match r {
            RecordRef::Entity(e) => self
                .entities
                .get(&e)
                .is_some_and(|x| self.schema.is_subset_of(&x.set, target)),
            RecordRef::Rel(id) => self.relationships.get(&id).is_some_and(|x| x.set == target),
        }
    }

    /// Relationships binding `r` in any role, in id order.
    pub fn incident(&self, r: RecordRef) -> Vec<RelId> {
        self.relationships
            .iter()
            .filter(|(_, rel)| rel.bindings.values().any(|b| *b == r))
            .map(|(id, _)| *id)
            .collect()
    }

    fn annotations_on(&self, targets: &BTreeSet<RecordRef>) -> Vec<AnnotationId> {
        self.annotations
            .iter()
            .filter(|(_, a)| targets.contains(&a.target))
            .map(|(id, _)| *id)
            .collect()
    }

    /// Removes an entity. With `cascade`, every relationship binding it
    /// (transitively through aggregation) and every annotation on a removed
    /// record goes too; the return value counts all removed records.
    pub fn delete_entity(&mut self, id: EntityId, cascade: bool) -> Result<usize, ModelError> {
        if !self.entities.contains_key(&id) {
            return Err(ModelError::UnknownId(format!("{}", id.0)));
        }
        self.delete_record(RecordRef::Entity(id), cascade)
    }

    pub fn delete_relationship(&mut self, id: RelId, cascade: bool) -> Result<usize, ModelError> {
        if !self.relationships.contains_key(&id) {
            return Err(ModelError::UnknownId(format!("{}", id.0)));
        }
        self.delete_record(RecordRef::Rel(id), cascade)
    }

    fn delete_record(&mut self, root: RecordRef, cascade: bool) -> Result<usize, ModelError> {
        let mut doomed = BTreeSet::from([root]);
        let mut frontier = vec![root];
        while let Some(r) = frontier.pop() {
            for rel in self.incident(r) {
                if doomed.insert(RecordRef::Rel(rel)) {
                    frontier.push(RecordRef::Rel(rel));
                }
            }
        }
        let anns = self.annotations_on(&doomed);
        let incident = doomed.len() - 1 + anns.len();
        if !cascade && incident > 0 {
            return Err(ModelError::HasIncidentRelationships(incident));
        }
        for r in &doomed {
            match r {
                RecordRef::Entity(e) => {
                    self.entities.remove(e);
                    self.geometry.remove(e);
                }
                RecordRef::Rel(id) => {
                    self.relationships.remove(id);
                }
            }
        }
        for a in &anns {
            self.annotations.remove(a);
        }
        Ok(doomed.len() + anns.len())
    }

    pub fn add_annotation(
        &mut self,
        target: RecordRef,
        key: &str,
        value: &str,
        author: &str,
        created_at: u64,
    ) -> Result<AnnotationId, ModelError> {
        if !self.contains_ref(target) {
            return Err(ModelError::UnknownId(format!("{}", target.raw())));
        }
        let id = AnnotationId(self.fresh_id());
        self.annotations.insert(
            id,
            AnnotationRecord {
                target,
                key: key.to_string(),
                value: value.to_string(),
                author: author.to_string(),
                created_at,
            },
        );
        Ok(id)
    }

    /// Attaches base geometry to an entity, replacing any previous one.
    pub fn set_geometry(&mut self, id: EntityId, frames: FrameSequence) -> Result<(), ModelError> {
        if !self.entities.contains_key(&id) {
            return Err(ModelError::UnknownId(format!("{}", id.0)));
        }
        self.geometry.insert(id, frames);
        Ok(())
    }

    pub fn geometry(&self, id: EntityId) -> Option<&FrameSequence> {
        self.geometry.get(&id)
    }

    pub fn geometries(&self) -> impl Iterator<Item = (EntityId, &FrameSequence)> {
        self.geometry.iter().map(|(k, v)| (*k, v))
    }

    /// Entity set filling the `object` role of Flight Paths: `Objects` in the
    /// core and animation schemas, `Organs` in the MRI schema.
    pub fn object_set(&self) -> Result<&str, ModelError> {
        self.schema
            .role_target(super::builtin::names::FLIGHT_PATHS, super::builtin::names::ROLE_OBJECT)
            .ok_or_else(|| self.mismatch("a Flight Paths relationship set"))
    }

    pub(crate) fn mismatch(&self, missing: &str) -> ModelError {
        ModelError::SchemaMismatch {
            schema: self.schema.name().to_string(),
            missing: missing.to_string(),
        }
    }

    /// Entity with the given `name` attribute in `set`, lowest id first.
    pub fn find_by_name(&self, set: &str, name: &str) -> Option<EntityId> {
        self.entities_in(set)
            .find(|(_, e)| e.attrs.text("name") == Some(name))
            .map(|(id, _)| id)
    }

    // Raw inserts for the model-file reader, which must load drafts that
    // would fail link-time checks. The caller validates afterwards.

    pub(crate) fn insert_entity_raw(&mut self, id: EntityId, entity: Entity) {
        self.entities.insert(id, entity);
    }

    pub(crate) fn insert_rel_raw(&mut self, id: RelId, rel: Relationship) {
        self.relationships.insert(id, rel);
    }

    pub(crate) fn insert_annotation_raw(&mut self, id: AnnotationId, ann: AnnotationRecord) {
        self.annotations.insert(id, ann);
    }

    pub(crate) fn set_next_id(&mut self, next: u64) {
        self.next_id = next;
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
