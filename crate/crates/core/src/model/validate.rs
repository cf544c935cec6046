use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::graph::{ModelGraph, RecordRef};
use super::schema::Participation;
use super::value::{check_attrs, AttrProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    UnknownSet,
    TotalParticipation,
    DanglingReference,
    RoleTypeMismatch,
    MissingRole,
    Multiplicity,
    MissingAttribute,
    InvalidAttribute,
    UnknownAttribute,
    DuplicateValue,
    MissingOneOf,
    SelfLoop,
    ContainmentCycle,
    DanglingAnnotation,
}

impl ViolationKind {
    pub fn label(&self) -> &'static str {
        match self {
            ViolationKind::UnknownSet => "unknown set",
            ViolationKind::TotalParticipation => "total participation",
            ViolationKind::DanglingReference => "dangling reference",
            ViolationKind::RoleTypeMismatch => "role type mismatch",
            ViolationKind::MissingRole => "missing role",
            ViolationKind::Multiplicity => "multiplicity",
            ViolationKind::MissingAttribute => "missing attribute",
            ViolationKind::InvalidAttribute => "invalid attribute",
            ViolationKind::UnknownAttribute => "unknown attribute",
            ViolationKind::DuplicateValue => "duplicate value",
            ViolationKind::MissingOneOf => "missing attribute",
            ViolationKind::SelfLoop => "self loop",
            ViolationKind::ContainmentCycle => "containment cycle",
            ViolationKind::DanglingAnnotation => "dangling annotation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// External id of the offending record, when there is a single one.
    pub record: Option<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.label(), self.message)?;
        if let Some(r) = &self.record {
            write!(f, " ({r})")?;
        }
        Ok(())
    }
}

/// Outcome of [`validate`]. Notices are informational and do not make the
/// graph invalid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notices: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn of_kind(&self, kind: ViolationKind) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        for n in &self.notices {
            writeln!(f, "note: {n}")?;
        }
        write!(f, "{} violations", self.violations.len())
    }
}

fn problem_kind(p: &AttrProblem) -> ViolationKind {
    match p {
        AttrProblem::Unknown(_) => ViolationKind::UnknownAttribute,
        AttrProblem::Missing(_) => ViolationKind::MissingAttribute,
        AttrProblem::TypeMismatch { .. } => ViolationKind::Multiplicity,
        AttrProblem::Invalid { .. } => ViolationKind::InvalidAttribute,
        AttrProblem::Duplicate { .. } => ViolationKind::DuplicateValue,
        AttrProblem::MissingOneOf(_) => ViolationKind::MissingOneOf,
    }
}

/// Checks every schema constraint over the whole graph and lists all
/// violations in a deterministic order. Pure: the graph is not touched.
pub fn validate(graph: &ModelGraph) -> ValidationReport {
    let schema = graph.schema();
    let mut report = ValidationReport::default();
    let push = |report: &mut ValidationReport, kind, record: Option<String>, message: String| {
        report.violations.push(Violation { kind, record, message })
    };

    for (id, e) in graph.entities() {
        let name = graph.format_entity(id);
        let Some(defs) = schema.entity_attributes(&e.set) else {
            push(
                &mut report,
                ViolationKind::UnknownSet,
                Some(name),
                format!("'{}'", e.set),
            );
            continue;
        };
        for p in check_attrs(defs, &e.attrs, &[]) {
            push(&mut report, problem_kind(&p), Some(name.clone()), p.to_string());
        }
    }

    // role name -> set of records bound in it, per relationship set
    let mut participation: BTreeMap<(&str, &str), BTreeSet<RecordRef>> = BTreeMap::new();
    for (id, rel) in graph.relationships() {
        let name = graph.format_ref(id.into());
        let Some(def) = schema.rel_set(&rel.set) else {
            push(
                &mut report,
                ViolationKind::UnknownSet,
                Some(name),
                format!("'{}'", rel.set),
            );
            continue;
        };
        for (role, target) in &rel.bindings {
            let Some(role_def) = def.role_def(role) else {
                push(
                    &mut report,
                    ViolationKind::MissingRole,
                    Some(name.clone()),
                    format!("'{}' has no role '{role}'", rel.set),
                );
                continue;
            };
            if !graph.contains_ref(*target) {
                push(
                    &mut report,
                    ViolationKind::DanglingReference,
                    Some(name.clone()),
                    format!("role '{role}' points at missing record {}", target.raw()),
                );
            } else if !graph.ref_fits(*target, &role_def.target) {
                push(
                    &mut report,
                    ViolationKind::RoleTypeMismatch,
                    Some(name.clone()),
                    format!(
                        "role '{role}' expects '{}', got {}",
                        role_def.target,
                        graph.format_ref(*target)
                    ),
                );
            } else {
                participation
                    .entry((def.name.as_str(), role_def.name.as_str()))
                    .or_default()
                    .insert(*target);
            }
        }
        for role in &def.roles {
            if !role.optional && !rel.bindings.contains_key(&role.name) {
                push(
                    &mut report,
                    ViolationKind::MissingRole,
                    Some(name.clone()),
                    format!("role '{}' unbound", role.name),
                );
            }
        }
        if def.acyclic {
            let a = rel.bindings.get(&def.roles[0].name);
            if a.is_some() && a == rel.bindings.get(&def.roles[1].name) {
                push(
                    &mut report,
                    ViolationKind::SelfLoop,
                    Some(name.clone()),
                    format!("'{}' links a record to itself", rel.set),
                );
            }
        }
        for p in check_attrs(&def.attributes, &rel.attrs, &def.require_any) {
            push(&mut report, problem_kind(&p), Some(name.clone()), p.to_string());
        }
    }

    for def in &schema.def().relationship_sets {
        for role in def.roles.iter().filter(|r| r.participation == Participation::Total) {
            let bound = participation.get(&(def.name.as_str(), role.name.as_str()));
            let Some(_) = schema.entity_set(&role.target) else {
                continue;
            };
            for (id, e) in graph.entities_in(&role.target) {
                if bound.is_some_and(|b| b.contains(&RecordRef::Entity(id))) {
                    continue;
                }
                let name = graph.format_entity(id);
                if e.attrs.boolean("unilluminated") == Some(true) {
                    report.notices.push(format!(
                        "{name} is unilluminated; exempt from {}⇄{}",
                        role.target, def.name
                    ));
                    continue;
                }
                push(
                    &mut report,
                    ViolationKind::TotalParticipation,
                    Some(name),
                    format!("{}⇄{}", role.target, def.name),
                );
            }
        }
    }

    for def in schema.def().relationship_sets.iter().filter(|d| d.acyclic) {
        for cycle in cycles_in(graph, &def.name, &def.roles[0].name, &def.roles[1].name) {
            let members: Vec<String> = cycle.iter().map(|r| graph.format_ref(*r)).collect();
            push(
                &mut report,
                ViolationKind::ContainmentCycle,
                None,
                format!("'{}' through {}", def.name, members.join(", ")),
            );
        }
    }

    for (id, a) in graph.annotations() {
        if !graph.contains_ref(a.target) {
            push(
                &mut report,
                ViolationKind::DanglingAnnotation,
                Some(format!("ann:{}", id.0)),
                format!("target {} is missing", a.target.raw()),
            );
        }
    }

    report
}

/// Strongly connected components of size > 1 in the `from -> to` graph of
/// one relationship set, each sorted, ordered by smallest member.
fn cycles_in(graph: &ModelGraph, set: &str, from: &str, to: &str) -> Vec<Vec<RecordRef>> {
    let mut g = DiGraph::<RecordRef, ()>::new();
    let mut nodes = BTreeMap::new();
    let mut node = |g: &mut DiGraph<RecordRef, ()>, r: RecordRef| *nodes.entry(r).or_insert_with(|| g.add_node(r));
    for (_, rel) in graph.relationships_in(set) {
        if let (Some(a), Some(b)) = (rel.bindings.get(from), rel.bindings.get(to)) {
            if a != b {
                let (na, nb) = (node(&mut g, *a), node(&mut g, *b));
                g.add_edge(na, nb, ());
            }
        }
    }
    let mut cycles: Vec<Vec<RecordRef>> = tarjan_scc(&g)
        .into_iter()
        .filter(|scc| scc.len() > 1)
        .map(|scc| {
            let mut members: Vec<RecordRef> = scc.into_iter().map(|n| g[n]).collect();
            members.sort();
            members
        })
        .collect();
    cycles.sort();
    cycles
}
