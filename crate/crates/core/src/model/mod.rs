//! Entity-relationship metamodel: schemas as data, a typed instance graph,
//! and on-demand constraint validation.

pub mod builtin;
mod graph;
pub mod schema;
mod validate;
mod value;

pub use builtin::{animation_schema_def, core_schema_def, mri_schema_def, names};
pub use graph::{
    AnnotationId, AnnotationRecord, Entity, EntityId, ModelError, ModelGraph, RecordRef, RelId, Relationship,
    ANNOTATION_PREFIX,
};
pub use schema::{
    AttrDef, AttrKind, Constraint, EntitySetDef, Multiplicity, Participation, RelSetDef, RoleDef, Schema, SchemaDef,
    SchemaError, SchemaHandle, SchemaRegistry,
};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};
pub use value::{check_attrs, AttrProblem, AttrValue, Attrs, Scalar};

/// Checks `def` and makes it available for graph construction.
pub fn register_schema(registry: &mut SchemaRegistry, def: SchemaDef) -> Result<SchemaHandle, SchemaError> {
    registry.register(def)
}

fn builtin(name: &str) -> SchemaHandle {
    SchemaRegistry::with_builtins().get(name).expect("built-in schema")
}

pub fn core_schema() -> SchemaHandle {
    builtin(builtin::CORE)
}

pub fn animation_schema() -> SchemaHandle {
    builtin(builtin::ANIMATION)
}

pub fn mri_schema() -> SchemaHandle {
    builtin(builtin::MRI)
}
