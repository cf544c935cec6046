//! Schema definitions for the entity-relationship metamodel.
//!
//! A schema is plain data: entity sets with attribute definitions and an
//! optional Is-A parent, and relationship sets whose roles point at entity
//! sets or (for aggregation) at other relationship sets. [`Schema::new`]
//! checks the definition once and builds the lookup tables the graph needs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttrKind {
    Text,
    Number,
    Bool,
    /// A `(start, end)` pair of seconds with `start <= end`.
    Interval,
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttrKind::Text => "text",
            AttrKind::Number => "number",
            AttrKind::Bool => "bool",
            AttrKind::Interval => "interval",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Multiplicity {
    Single,
    Multi,
}

/// Range restriction applied to numbers and to both ends of intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    NonNegative,
    Positive,
    UnitInterval,
}

impl Constraint {
    pub fn admits(&self, v: f64) -> bool {
        match self {
            Constraint::NonNegative => v >= 0.0,
            Constraint::Positive => v > 0.0,
            Constraint::UnitInterval => (0.0..=1.0).contains(&v),
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Constraint::NonNegative => "must be >= 0",
            Constraint::Positive => "must be > 0",
            Constraint::UnitInterval => "must lie in [0,1]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttrDef {
    pub name: String,
    pub kind: AttrKind,
    pub multiplicity: Multiplicity,
    pub required: bool,
    pub allow_duplicates: bool,
    pub constraint: Option<Constraint>,
}

impl AttrDef {
    pub fn new(name: impl Into<String>, kind: AttrKind) -> Self {
        Self {
            name: name.into(),
            kind,
            multiplicity: Multiplicity::Single,
            required: false,
            allow_duplicates: false,
            constraint: None,
        }
    }

    pub fn text(name: impl Into<String>) -> Self {
        Self::new(name, AttrKind::Text)
    }

    pub fn number(name: impl Into<String>) -> Self {
        Self::new(name, AttrKind::Number)
    }

    pub fn boolean(name: impl Into<String>) -> Self {
        Self::new(name, AttrKind::Bool)
    }

    pub fn interval(name: impl Into<String>) -> Self {
        Self::new(name, AttrKind::Interval)
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self
    }

    pub fn multi(mut self) -> Self {
        self.multiplicity = Multiplicity::Multi;
        self
    }

    pub fn allow_duplicates(mut self) -> Self {
        self.allow_duplicates = true;
        self
    }

    pub fn constrained(mut self, c: Constraint) -> Self {
        self.constraint = Some(c);
        self
    }

    pub fn is_multi(&self) -> bool {
        self.multiplicity == Multiplicity::Multi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntitySetDef {
    pub name: String,
    /// External id prefix, e.g. `obj` in `obj:7`.
    pub prefix: String,
    pub attributes: Vec<AttrDef>,
    pub parent: Option<String>,
}

impl EntitySetDef {
    pub fn new(name: impl Into<String>, prefix: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            prefix: prefix.into(),
            attributes: Vec::new(),
            parent: None,
        }
    }

    pub fn attr(mut self, def: AttrDef) -> Self {
        self.attributes.push(def);
        self
    }

    pub fn is_a(mut self, parent: impl Into<String>) -> Self {
        self.parent = Some(parent.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Participation {
    Partial,
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleDef {
    pub name: String,
    /// Name of an entity set, or of a relationship set for aggregation.
    pub target: String,
    pub participation: Participation,
    /// Optional roles may be left unbound on an instance.
    pub optional: bool,
}

impl RoleDef {
    pub fn new(name: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            target: target.into(),
            participation: Participation::Partial,
            optional: false,
        }
    }

    pub fn total(mut self) -> Self {
        self.participation = Participation::Total;
        self
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelSetDef {
    pub name: String,
    pub prefix: String,
    pub roles: Vec<RoleDef>,
    pub attributes: Vec<AttrDef>,
    /// The first role "owns" the second; the induced graph must stay acyclic
    /// and an instance may not bind the same record to both roles.
    pub acyclic: bool,
    /// At least one of these attributes must be present on every instance.
    pub require_any: Vec<String>,
}

impl RelSetDef {
    pub fn new(name: impl Into<String>, prefix: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            prefix: prefix.into(),
            roles: Vec::new(),
            attributes: Vec::new(),
            acyclic: false,
            require_any: Vec::new(),
        }
    }

    pub fn role(mut self, role: RoleDef) -> Self {
        self.roles.push(role);
        self
    }

    pub fn attr(mut self, def: AttrDef) -> Self {
        self.attributes.push(def);
        self
    }

    pub fn acyclic(mut self) -> Self {
        self.acyclic = true;
        self
    }

    pub fn require_any<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.require_any = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn role_def(&self, name: &str) -> Option<&RoleDef> {
        self.roles.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaDef {
    pub name: String,
    pub entity_sets: Vec<EntitySetDef>,
    pub relationship_sets: Vec<RelSetDef>,
}

impl SchemaDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entity_sets: Vec::new(),
            relationship_sets: Vec::new(),
        }
    }

    pub fn entity(mut self, def: EntitySetDef) -> Self {
        self.entity_sets.push(def);
        self
    }

    pub fn relationship(mut self, def: RelSetDef) -> Self {
        self.relationship_sets.push(def);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("duplicate set name '{0}'")]
    DuplicateSetName(String),
    #[error("duplicate id prefix '{0}'")]
    DuplicatePrefix(String),
    #[error("duplicate attribute '{attr}' in set '{set}'")]
    DuplicateAttribute { set: String, attr: String },
    #[error("duplicate role '{role}' in relationship set '{set}'")]
    DuplicateRole { set: String, role: String },
    #[error("role '{role}' of '{set}' targets undeclared set '{target}'")]
    UnknownRoleTarget { set: String, role: String, target: String },
    #[error("entity set '{set}' declares unknown parent '{parent}'")]
    UnknownParent { set: String, parent: String },
    #[error("Is-A cycle through {}", .0.join(" -> "))]
    IsACycle(Vec<String>),
    #[error("acyclic relationship set '{0}' needs two roles over the same target")]
    BadAcyclicSet(String),
    #[error("'{attr}' in require_any of '{set}' is not a declared attribute")]
    UnknownRequiredAttribute { set: String, attr: String },
}

/// A checked schema with lookup tables.
#[derive(Debug)]
pub struct Schema {
    def: SchemaDef,
    entity_index: BTreeMap<String, usize>,
    rel_index: BTreeMap<String, usize>,
    /// Ancestors of each entity set, nearest first (excluding the set itself).
    ancestors: BTreeMap<String, Vec<String>>,
    /// Effective attributes of each entity set, inherited ones first.
    entity_attrs: BTreeMap<String, Vec<AttrDef>>,
}

/// Shared, immutable reference to a registered schema.
pub type SchemaHandle = Arc<Schema>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetRef<'a> {
    Entity(&'a EntitySetDef),
    Rel(&'a RelSetDef),
}

impl Schema {
    pub fn new(def: SchemaDef) -> Result<Self, SchemaError> {
        let mut names = BTreeSet::new();
        let mut prefixes = BTreeSet::new();
        for (name, prefix) in def
            .entity_sets
            .iter()
            .map(|e| (&e.name, &e.prefix))
            .chain(def.relationship_sets.iter().map(|r| (&r.name, &r.prefix)))
        {
            if !names.insert(name.clone()) {
                return Err(SchemaError::DuplicateSetName(name.clone()));
            }
            if !prefixes.insert(prefix.clone()) {
                return Err(SchemaError::DuplicatePrefix(prefix.clone()));
            }
        }
        let entity_index: BTreeMap<_, _> = def
            .entity_sets
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.clone(), i))
            .collect();
        let rel_index: BTreeMap<_, _> = def
            .relationship_sets
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i))
            .collect();

        for e in &def.entity_sets {
            if let Some(p) = &e.parent {
                if !entity_index.contains_key(p) {
                    return Err(SchemaError::UnknownParent {
                        set: e.name.clone(),
                        parent: p.clone(),
                    });
                }
            }
        }

        let parent_of = |name: &str| -> Option<&String> {
            entity_index.get(name).and_then(|&i| def.entity_sets[i].parent.as_ref())
        };
        let mut ancestors = BTreeMap::new();
        for e in &def.entity_sets {
            let mut chain = vec![e.name.clone()];
            let mut cur = parent_of(&e.name);
            let mut up = Vec::new();
            while let Some(p) = cur {
                if chain.contains(p) {
                    chain.push(p.clone());
                    return Err(SchemaError::IsACycle(chain));
                }
                chain.push(p.clone());
                up.push(p.clone());
                cur = parent_of(p);
            }
            ancestors.insert(e.name.clone(), up);
        }

        let mut entity_attrs = BTreeMap::new();
        for e in &def.entity_sets {
            let mut attrs: Vec<AttrDef> = Vec::new();
            let lineage = ancestors[&e.name].iter().rev().chain(std::iter::once(&e.name));
            for set in lineage {
                for a in &def.entity_sets[entity_index[set]].attributes {
                    if attrs.iter().any(|x| x.name == a.name) {
                        return Err(SchemaError::DuplicateAttribute {
                            set: e.name.clone(),
                            attr: a.name.clone(),
                        });
                    }
                    attrs.push(a.clone());
                }
            }
            entity_attrs.insert(e.name.clone(), attrs);
        }

        for r in &def.relationship_sets {
            let mut seen = BTreeSet::new();
            for role in &r.roles {
                if !seen.insert(&role.name) {
                    return Err(SchemaError::DuplicateRole {
                        set: r.name.clone(),
                        role: role.name.clone(),
                    });
                }
                if !names.contains(&role.target) {
                    return Err(SchemaError::UnknownRoleTarget {
                        set: r.name.clone(),
                        role: role.name.clone(),
                        target: role.target.clone(),
                    });
                }
            }
            let mut attr_names = BTreeSet::new();
            for a in &r.attributes {
                if !attr_names.insert(&a.name) {
                    return Err(SchemaError::DuplicateAttribute {
                        set: r.name.clone(),
                        attr: a.name.clone(),
                    });
                }
            }
            for req in &r.require_any {
                if !attr_names.contains(req) {
                    return Err(SchemaError::UnknownRequiredAttribute {
                        set: r.name.clone(),
                        attr: req.clone(),
                    });
                }
            }
            if r.acyclic && (r.roles.len() < 2 || r.roles[0].target != r.roles[1].target) {
                return Err(SchemaError::BadAcyclicSet(r.name.clone()));
            }
        }

        Ok(Self {
            def,
            entity_index,
            rel_index,
            ancestors,
            entity_attrs,
        })
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn def(&self) -> &SchemaDef {
        &self.def
    }

    pub fn entity_set(&self, name: &str) -> Option<&EntitySetDef> {
        self.entity_index.get(name).map(|&i| &self.def.entity_sets[i])
    }

    pub fn rel_set(&self, name: &str) -> Option<&RelSetDef> {
        self.rel_index.get(name).map(|&i| &self.def.relationship_sets[i])
    }

    pub fn set(&self, name: &str) -> Option<SetRef<'_>> {
        self.entity_set(name)
            .map(SetRef::Entity)
            .or_else(|| self.rel_set(name).map(SetRef::Rel))
    }

    pub fn prefix_of(&self, set: &str) -> Option<&str> {
        match self.set(set)? {
            SetRef::Entity(e) => Some(&e.prefix),
            SetRef::Rel(r) => Some(&r.prefix),
        }
    }

    pub fn set_by_prefix(&self, prefix: &str) -> Option<SetRef<'_>> {
        self.def
            .entity_sets
            .iter()
            .find(|e| e.prefix == prefix)
            .map(SetRef::Entity)
            .or_else(|| {
                self.def
                    .relationship_sets
                    .iter()
                    .find(|r| r.prefix == prefix)
                    .map(SetRef::Rel)
            })
    }

    /// Effective attributes of an entity set, including inherited ones.
    pub fn entity_attributes(&self, set: &str) -> Option<&[AttrDef]> {
        self.entity_attrs.get(set).map(Vec::as_slice)
    }

    pub fn ancestors(&self, set: &str) -> &[String] {
        self.ancestors.get(set).map(Vec::as_slice).unwrap_or(&[])
    }

    /// True if `set` equals `ancestor` or descends from it through Is-A.
    pub fn is_subset_of(&self, set: &str, ancestor: &str) -> bool {
        set == ancestor || self.ancestors(set).iter().any(|a| a == ancestor)
    }

    /// Entity set targeted by the first role of the named relationship set
    /// whose role name matches, e.g. the set bound to `object` in Flight Paths.
    pub fn role_target(&self, rel_set: &str, role: &str) -> Option<&str> {
        self.rel_set(rel_set)?.role_def(role).map(|r| r.target.as_str())
    }
}

/// Named collection of schemas. Starts with the shipped built-ins.
#[derive(Debug, Clone)]
pub struct SchemaRegistry {
    schemas: BTreeMap<String, SchemaHandle>,
}

impl Default for SchemaRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl SchemaRegistry {
    pub fn empty() -> Self {
        Self {
            schemas: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        for def in [
            super::builtin::core_schema_def(),
            super::builtin::animation_schema_def(),
            super::builtin::mri_schema_def(),
        ] {
            reg.register(def).expect("built-in schema must be well-formed");
        }
        reg
    }

    /// Checks and registers a schema. Registering a second schema under an
    /// existing name fails with [`SchemaError::DuplicateSetName`].
    pub fn register(&mut self, def: SchemaDef) -> Result<SchemaHandle, SchemaError> {
        if self.schemas.contains_key(&def.name) {
            return Err(SchemaError::DuplicateSetName(def.name));
        }
        let handle = Arc::new(Schema::new(def)?);
        self.schemas.insert(handle.name().to_string(), Arc::clone(&handle));
        Ok(handle)
    }

    pub fn get(&self, name: &str) -> Option<SchemaHandle> {
        self.schemas.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schemas.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn algorithms() -> SchemaDef {
        SchemaDef::new("algo")
            .entity(EntitySetDef::new("Algorithms", "alg").attr(AttrDef::text("name")))
            .entity(EntitySetDef::new("Rendering", "rnd").is_a("Algorithms"))
    }

    #[test]
    fn is_a_chain_accepted_and_inherits() {
        let s = Schema::new(algorithms()).unwrap();
        assert!(s.is_subset_of("Rendering", "Algorithms"));
        assert!(!s.is_subset_of("Algorithms", "Rendering"));
        assert_eq!(s.entity_attributes("Rendering").unwrap()[0].name, "name");
    }

    #[test]
    fn is_a_two_cycle_rejected() {
        let mut def = algorithms();
        def.entity_sets[0].parent = Some("Rendering".into());
        assert!(matches!(Schema::new(def), Err(SchemaError::IsACycle(_))));
    }

    #[test]
    fn unknown_role_target() {
        let def = SchemaDef::new("x")
            .entity(EntitySetDef::new("Objects", "obj"))
            .relationship(
                RelSetDef::new("Haunts", "h")
                    .role(RoleDef::new("who", "Objects"))
                    .role(RoleDef::new("ghost", "Ghost")),
            );
        assert!(matches!(
            Schema::new(def),
            Err(SchemaError::UnknownRoleTarget { target, .. }) if target == "Ghost"
        ));
    }

    #[test]
    fn duplicate_names_and_prefixes() {
        let def = SchemaDef::new("x")
            .entity(EntitySetDef::new("A", "a"))
            .entity(EntitySetDef::new("A", "b"));
        assert_eq!(Schema::new(def).unwrap_err(), SchemaError::DuplicateSetName("A".into()));
        let def = SchemaDef::new("x")
            .entity(EntitySetDef::new("A", "a"))
            .relationship(RelSetDef::new("R", "a"));
        assert_eq!(Schema::new(def).unwrap_err(), SchemaError::DuplicatePrefix("a".into()));
    }

    #[test]
    fn aggregation_target_is_a_relationship_set() {
        let def = SchemaDef::new("x")
            .entity(EntitySetDef::new("A", "a"))
            .relationship(RelSetDef::new("R", "r").role(RoleDef::new("x", "A")))
            .relationship(RelSetDef::new("S", "s").role(RoleDef::new("agg", "R")));
        let s = Schema::new(def).unwrap();
        assert!(matches!(s.set("R"), Some(SetRef::Rel(_))));
    }

    #[test]
    fn registry_rejects_reregistration() {
        let mut reg = SchemaRegistry::with_builtins();
        let core = reg.get("core").unwrap();
        assert!(core.entity_set("Objects").is_some());
        let again = super::super::builtin::core_schema_def();
        assert_eq!(
            reg.register(again).unwrap_err(),
            SchemaError::DuplicateSetName("core".into())
        );
    }
}
