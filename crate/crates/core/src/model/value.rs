use std::collections::BTreeMap;
use std::fmt;

use super::schema::{AttrDef, AttrKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Text(String),
    Number(f64),
    Bool(bool),
    Interval(f64, f64),
}

impl Scalar {
    pub fn kind(&self) -> AttrKind {
        match self {
            Scalar::Text(_) => AttrKind::Text,
            Scalar::Number(_) => AttrKind::Number,
            Scalar::Bool(_) => AttrKind::Bool,
            Scalar::Interval(..) => AttrKind::Interval,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Scalar::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_interval(&self) -> Option<(f64, f64)> {
        match self {
            Scalar::Interval(a, b) => Some((*a, *b)),
            _ => None,
        }
    }

    /// Bitwise identity, so that `-0.0` and `0.0` are distinct and NaN equals
    /// itself. Used for duplicate detection in multi-valued attributes.
    pub(crate) fn same_as(&self, other: &Scalar) -> bool {
        match (self, other) {
            (Scalar::Number(a), Scalar::Number(b)) => a.to_bits() == b.to_bits(),
            (Scalar::Interval(a0, a1), Scalar::Interval(b0, b1)) => {
                a0.to_bits() == b0.to_bits() && a1.to_bits() == b1.to_bits()
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Text(s) => f.write_str(s),
            Scalar::Number(v) => write!(f, "{v}"),
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Interval(a, b) => write!(f, "[{a}, {b})"),
        }
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.to_string())
    }
}

impl From<String> for Scalar {
    fn from(s: String) -> Self {
        Scalar::Text(s)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

impl From<(f64, f64)> for Scalar {
    fn from((a, b): (f64, f64)) -> Self {
        Scalar::Interval(a, b)
    }
}

/// A single value or an ordered list, matching the attribute's multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    One(Scalar),
    Many(Vec<Scalar>),
}

impl AttrValue {
    pub fn many<I, T>(items: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Scalar>,
    {
        AttrValue::Many(items.into_iter().map(Into::into).collect())
    }

    pub fn as_one(&self) -> Option<&Scalar> {
        match self {
            AttrValue::One(s) => Some(s),
            AttrValue::Many(_) => None,
        }
    }

    pub fn as_many(&self) -> Option<&[Scalar]> {
        match self {
            AttrValue::Many(v) => Some(v),
            AttrValue::One(_) => None,
        }
    }

    /// All scalars, regardless of multiplicity.
    pub fn scalars(&self) -> &[Scalar] {
        match self {
            AttrValue::One(s) => std::slice::from_ref(s),
            AttrValue::Many(v) => v,
        }
    }
}

impl<T: Into<Scalar>> From<T> for AttrValue {
    fn from(v: T) -> Self {
        AttrValue::One(v.into())
    }
}

/// Attribute map of one entity or relationship, ordered by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Attrs(pub BTreeMap<String, AttrValue>);

impl Attrs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<AttrValue>) -> Self {
        self.0.insert(name.into(), value.into());
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: impl Into<AttrValue>) {
        self.0.insert(name.into(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&AttrValue> {
        self.0.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<AttrValue> {
        self.0.remove(name)
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        self.get(name)?.as_one()?.as_text()
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        self.get(name)?.as_one()?.as_number()
    }

    pub fn boolean(&self, name: &str) -> Option<bool> {
        self.get(name)?.as_one()?.as_bool()
    }

    pub fn interval(&self, name: &str) -> Option<(f64, f64)> {
        self.get(name)?.as_one()?.as_interval()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &AttrValue)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<AttrValue>> FromIterator<(K, V)> for Attrs {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Attrs(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// One way an attribute map fails its definitions.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrProblem {
    Unknown(String),
    Missing(String),
    /// Wrong scalar kind or wrong multiplicity.
    TypeMismatch {
        name: String,
        expected: String,
    },
    Invalid {
        name: String,
        reason: String,
    },
    Duplicate {
        name: String,
    },
    MissingOneOf(Vec<String>),
}

impl fmt::Display for AttrProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrProblem::Unknown(n) => write!(f, "undeclared attribute '{n}'"),
            AttrProblem::Missing(n) => write!(f, "missing required attribute '{n}'"),
            AttrProblem::TypeMismatch { name, expected } => {
                write!(f, "attribute '{name}' expects {expected}")
            }
            AttrProblem::Invalid { name, reason } => write!(f, "attribute '{name}' {reason}"),
            AttrProblem::Duplicate { name } => {
                write!(f, "attribute '{name}' holds duplicate values")
            }
            AttrProblem::MissingOneOf(names) => {
                write!(f, "at least one of {} is required", names.join("/"))
            }
        }
    }
}

fn check_scalar(def: &AttrDef, s: &Scalar) -> Option<AttrProblem> {
    if s.kind() != def.kind {
        return Some(AttrProblem::TypeMismatch {
            name: def.name.clone(),
            expected: def.kind.to_string(),
        });
    }
    let invalid = |reason: String| {
        Some(AttrProblem::Invalid {
            name: def.name.clone(),
            reason,
        })
    };
    match s {
        Scalar::Number(v) => {
            if !v.is_finite() {
                return invalid("must be finite".into());
            }
            if let Some(c) = def.constraint {
                if !c.admits(*v) {
                    return invalid(c.describe().into());
                }
            }
        }
        Scalar::Interval(a, b) => {
            if !(a.is_finite() && b.is_finite()) {
                return invalid("must be finite".into());
            }
            if a > b {
                return invalid(format!("interval start {a} exceeds end {b}"));
            }
            if let Some(c) = def.constraint {
                if !c.admits(*a) || !c.admits(*b) {
                    return invalid(c.describe().into());
                }
            }
        }
        Scalar::Text(_) | Scalar::Bool(_) => {}
    }
    None
}

/// Checks `attrs` against `defs`, returning every problem found in a stable
/// order: declared attributes first (in definition order), then undeclared
/// names, then the any-of group.
pub fn check_attrs(defs: &[AttrDef], attrs: &Attrs, require_any: &[String]) -> Vec<AttrProblem> {
    let mut problems = Vec::new();
    for def in defs {
        let Some(value) = attrs.get(&def.name) else {
            if def.required {
                problems.push(AttrProblem::Missing(def.name.clone()));
            }
            continue;
        };
        match (def.is_multi(), value) {
            (false, AttrValue::One(s)) => problems.extend(check_scalar(def, s)),
            (true, AttrValue::Many(items)) => {
                if let Some(p) = items.iter().find_map(|s| check_scalar(def, s)) {
                    problems.push(p);
                } else if !def.allow_duplicates {
                    let dup = items
                        .iter()
                        .enumerate()
                        .any(|(i, a)| items[..i].iter().any(|b| a.same_as(b)));
                    if dup {
                        problems.push(AttrProblem::Duplicate { name: def.name.clone() });
                    }
                }
            }
            (multi, _) => problems.push(AttrProblem::TypeMismatch {
                name: def.name.clone(),
                expected: if multi {
                    format!("a list of {}", def.kind)
                } else {
                    format!("a single {}", def.kind)
                },
            }),
        }
    }
    for name in attrs.0.keys() {
        if !defs.iter().any(|d| &d.name == name) {
            problems.push(AttrProblem::Unknown(name.clone()));
        }
    }
    if !require_any.is_empty() && !require_any.iter().any(|n| attrs.get(n).is_some()) {
        problems.push(AttrProblem::MissingOneOf(require_any.to_vec()));
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::schema::Constraint;

    #[test]
    fn multiplicity_mismatch_is_type_mismatch() {
        let defs = [AttrDef::text("disease").multi()];
        let attrs = Attrs::new().with("disease", "glioma");
        assert!(matches!(
            check_attrs(&defs, &attrs, &[])[..],
            [AttrProblem::TypeMismatch { .. }]
        ));
    }

    #[test]
    fn duplicates_only_where_allowed() {
        let no_dup = [AttrDef::text("disease").multi()];
        let attrs = Attrs::new().with("disease", AttrValue::many(["a", "b", "a"]));
        assert_eq!(
            check_attrs(&no_dup, &attrs, &[]),
            vec![AttrProblem::Duplicate { name: "disease".into() }]
        );
        let dup_ok = [AttrDef::interval("interval").multi().allow_duplicates()];
        let attrs = Attrs::new().with("interval", AttrValue::many([(0.0, 1.0), (0.0, 1.0)]));
        assert!(check_attrs(&dup_ok, &attrs, &[]).is_empty());
    }

    #[test]
    fn constraints_and_intervals() {
        let defs = [
            AttrDef::number("nu").constrained(Constraint::Positive),
            AttrDef::interval("duration").constrained(Constraint::NonNegative),
        ];
        let attrs = Attrs::new().with("nu", 0.0).with("duration", (3.0, 1.0));
        let problems = check_attrs(&defs, &attrs, &[]);
        assert_eq!(problems.len(), 2);
        let attrs = Attrs::new().with("nu", 2.0).with("duration", (-1.0, 1.0));
        assert_eq!(check_attrs(&defs, &attrs, &[]).len(), 1);
    }

    #[test]
    fn require_any_group() {
        let defs = [AttrDef::number("time"), AttrDef::text("trigger")];
        let group = vec!["time".to_string(), "trigger".to_string()];
        assert_eq!(
            check_attrs(&defs, &Attrs::new(), &group),
            vec![AttrProblem::MissingOneOf(group.clone())]
        );
        let attrs = Attrs::new().with("trigger", "pat");
        assert!(check_attrs(&defs, &attrs, &group).is_empty());
    }
}
