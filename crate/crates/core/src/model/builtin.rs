//! The shipped schemas: the core display model and its animation and MRI
//! extensions. All three share relationship-set and role names, so queries
//! and the compiler can address them uniformly.

use super::schema::{AttrDef, Constraint, EntitySetDef, RelSetDef, RoleDef, SchemaDef};

pub const CORE: &str = "core";
pub const ANIMATION: &str = "animation";
pub const MRI: &str = "mri";

/// Relationship-set, entity-set and role names shared by the built-ins.
pub mod names {
    pub const CONTAINS: &str = "Contains";
    pub const CONSISTS_OF: &str = "Consists-Of";
    pub const INTERACTIONS: &str = "Interactions";
    pub const MAKE_NOISE: &str = "Make Noise";
    pub const FLIGHT_PATHS: &str = "Flight Paths";

    pub const SUBJECT: &str = "Subject";
    pub const DIGITAL_DEVICE: &str = "Digital Device";
    pub const CAPTURES: &str = "Captures";
    pub const OBJECTS: &str = "Objects";
    pub const ORGANS: &str = "Organs";
    pub const ACOUSTICS: &str = "Acoustics";
    pub const FLSS: &str = "FLSs";
    pub const COORDINATES: &str = "3D Coordinates";
    pub const COLORS: &str = "Colors";
    pub const ALGORITHMS: &str = "Algorithms";
    pub const DERIVED_ALGORITHMS: &str = "Derived Algorithms";
    pub const RENDERING: &str = "Rendering";
    pub const INTERPOLATION: &str = "Interpolation";
    pub const ORGAN_ANNOTATION: &str = "Organ Annotation";
    pub const AUTHORING_TOOL: &str = "Authoring Tool";
    pub const AUTHORING_TOOL_ALGORITHMS: &str = "Authoring Tool Algorithms";
    pub const DERIVED_FROM: &str = "Derived From";
    pub const KEYFRAME: &str = "Keyframe";
    pub const HAS_KEYFRAME: &str = "Has Keyframe";
    pub const KEYFRAME_INTERPOLATION: &str = "Keyframe Interpolation";
    pub const OBJECT_RENDERING: &str = "Object Rendering";
    pub const PATIENT: &str = "Patient";
    pub const IMAGING_EQUIPMENT: &str = "Medical Imaging Equipment";
    pub const SCANS: &str = "Scans";
    pub const ANNOTATED_BY: &str = "Annotated By";

    pub const ROLE_SUBJECT: &str = "subject";
    pub const ROLE_OBJECT: &str = "object";
    pub const ROLE_WHOLE: &str = "whole";
    pub const ROLE_PART: &str = "part";
    pub const ROLE_SOURCE: &str = "source";
    pub const ROLE_TARGET: &str = "target";
    pub const ROLE_ACOUSTIC: &str = "acoustic";
    pub const ROLE_FLS: &str = "fls";
    pub const ROLE_ALGORITHM: &str = "algorithm";
    pub const ROLE_KEYFRAME: &str = "keyframe";
}

use names::*;

fn acoustics() -> EntitySetDef {
    EntitySetDef::new(ACOUSTICS, "snd")
        .attr(AttrDef::text("sound_id").required())
        .attr(AttrDef::number("pitch").constrained(Constraint::NonNegative))
        .attr(AttrDef::number("db"))
        .attr(AttrDef::number("frequency").constrained(Constraint::NonNegative))
        // open-ended "key=value" entries
        .attr(AttrDef::text("extra").multi())
}

fn flss() -> EntitySetDef {
    EntitySetDef::new(FLSS, "fls")
        .attr(AttrDef::number("nu").required().constrained(Constraint::Positive))
        .attr(AttrDef::number("beta").required().constrained(Constraint::Positive))
        .attr(
            AttrDef::number("force_n")
                .required()
                .constrained(Constraint::NonNegative),
        )
        .attr(AttrDef::number("omega").required().constrained(Constraint::Positive))
        .attr(AttrDef::text("model"))
        // position of this FLS in the compiled flight-path file
        .attr(AttrDef::number("index").constrained(Constraint::NonNegative))
}

fn coordinates() -> EntitySetDef {
    EntitySetDef::new(COORDINATES, "xyz")
        .attr(AttrDef::number("l").required())
        .attr(AttrDef::number("h").required())
        .attr(AttrDef::number("d").required())
}

fn colors() -> EntitySetDef {
    let channel = |n: &str| AttrDef::number(n).required().constrained(Constraint::UnitInterval);
    EntitySetDef::new(COLORS, "rgba")
        .attr(channel("r"))
        .attr(channel("g"))
        .attr(channel("b"))
        .attr(channel("a"))
}

fn algorithms(name: &str) -> EntitySetDef {
    EntitySetDef::new(name, "alg")
        .attr(AttrDef::text("name").required())
        .attr(AttrDef::text("kind"))
}

fn contains(subject_set: &str, object_set: &str) -> RelSetDef {
    RelSetDef::new(CONTAINS, "cont")
        .role(RoleDef::new(ROLE_SUBJECT, subject_set))
        .role(RoleDef::new(ROLE_OBJECT, object_set))
        .attr(
            AttrDef::interval("duration")
                .required()
                .constrained(Constraint::NonNegative),
        )
}

fn consists_of(object_set: &str) -> RelSetDef {
    RelSetDef::new(CONSISTS_OF, "cons")
        .role(RoleDef::new(ROLE_WHOLE, object_set))
        .role(RoleDef::new(ROLE_PART, object_set))
        .acyclic()
}

fn interactions(object_set: &str) -> RelSetDef {
    RelSetDef::new(INTERACTIONS, "ia")
        .role(RoleDef::new(ROLE_SOURCE, object_set))
        .role(RoleDef::new(ROLE_TARGET, object_set))
        .attr(AttrDef::text("interaction_id"))
        .attr(AttrDef::interval("duration").required())
        .attr(AttrDef::text("description"))
}

fn make_noise(object_set: &str) -> RelSetDef {
    RelSetDef::new(MAKE_NOISE, "noise")
        .role(RoleDef::new(ROLE_OBJECT, object_set))
        .role(RoleDef::new(ROLE_ACOUSTIC, ACOUSTICS))
        .attr(AttrDef::number("time").constrained(Constraint::NonNegative))
        .attr(AttrDef::text("trigger"))
        .require_any(["time", "trigger"])
}

fn flight_paths(object_set: &str, algorithm_set: &str) -> RelSetDef {
    RelSetDef::new(FLIGHT_PATHS, "fp")
        .role(RoleDef::new(ROLE_OBJECT, object_set).total())
        .role(RoleDef::new(ROLE_FLS, FLSS).total())
        .role(RoleDef::new("coordinate", COORDINATES).optional())
        .role(RoleDef::new("color", COLORS).optional())
        .role(RoleDef::new(ROLE_ALGORITHM, algorithm_set).optional())
        .role(RoleDef::new("noise", MAKE_NOISE).optional())
        .role(RoleDef::new("interaction", INTERACTIONS).optional())
        .attr(
            AttrDef::interval("interval")
                .multi()
                .allow_duplicates()
                .constrained(Constraint::NonNegative),
        )
}

fn device(name: &str, prefix: &str, spec_attr: &str) -> EntitySetDef {
    EntitySetDef::new(name, prefix)
        .attr(AttrDef::text("name").required())
        .attr(AttrDef::text("model"))
        .attr(AttrDef::text(spec_attr))
}

/// Core display model: subjects containing objects, their composition,
/// interactions and sounds, and the flight paths that illuminate them.
pub fn core_schema_def() -> SchemaDef {
    SchemaDef::new(CORE)
        .entity(EntitySetDef::new(SUBJECT, "subj").attr(AttrDef::text("name")))
        .entity(device(DIGITAL_DEVICE, "dev", "specifications"))
        .entity(
            EntitySetDef::new(OBJECTS, "obj")
                .attr(AttrDef::text("name").required())
                .attr(AttrDef::text("geometry"))
                .attr(AttrDef::boolean("unilluminated")),
        )
        .entity(acoustics())
        .entity(flss())
        .entity(coordinates())
        .entity(colors())
        .entity(algorithms(ALGORITHMS))
        .entity(EntitySetDef::new(RENDERING, "rnd").is_a(ALGORITHMS))
        .relationship(contains(SUBJECT, OBJECTS))
        .relationship(consists_of(OBJECTS))
        .relationship(interactions(OBJECTS))
        .relationship(make_noise(OBJECTS))
        .relationship(
            RelSetDef::new(CAPTURES, "cap")
                .role(RoleDef::new("device", DIGITAL_DEVICE))
                .role(RoleDef::new(ROLE_SUBJECT, SUBJECT)),
        )
        .relationship(flight_paths(OBJECTS, ALGORITHMS))
}

/// Animation authoring extension: scenes, authoring tools, keyframes and
/// derived algorithms with rendering/interpolation subclasses.
pub fn animation_schema_def() -> SchemaDef {
    let static_channel = |n: &str| AttrDef::number(n);
    let static_color = |n: &str| AttrDef::number(n).constrained(Constraint::UnitInterval);
    SchemaDef::new(ANIMATION)
        .entity(EntitySetDef::new("Scene", "scene").attr(AttrDef::text("name")))
        .entity(device(AUTHORING_TOOL, "tool", "software_specifications"))
        .entity(
            EntitySetDef::new(OBJECTS, "obj")
                .attr(AttrDef::text("name").required())
                .attr(AttrDef::text("geometry"))
                .attr(AttrDef::text("material"))
                .attr(AttrDef::text("rig"))
                .attr(AttrDef::boolean("unilluminated"))
                .attr(static_channel("position.l"))
                .attr(static_channel("position.h"))
                .attr(static_channel("position.d"))
                .attr(static_channel("scale"))
                .attr(static_color("color.r"))
                .attr(static_color("color.g"))
                .attr(static_color("color.b"))
                .attr(static_color("color.a")),
        )
        .entity(acoustics())
        .entity(flss())
        .entity(coordinates())
        .entity(colors())
        .entity(algorithms(DERIVED_ALGORITHMS))
        .entity(EntitySetDef::new(RENDERING, "rnd").is_a(DERIVED_ALGORITHMS))
        .entity(EntitySetDef::new(INTERPOLATION, "intp").is_a(DERIVED_ALGORITHMS))
        .entity(EntitySetDef::new(AUTHORING_TOOL_ALGORITHMS, "talg").attr(AttrDef::text("name").required()))
        .entity(
            EntitySetDef::new(KEYFRAME, "key")
                .attr(AttrDef::number("time").required().constrained(Constraint::NonNegative))
                .attr(AttrDef::text("channel").required())
                .attr(AttrDef::number("value").required())
                .attr(AttrDef::text("interp").required())
                .attr(AttrDef::number("hl_dt"))
                .attr(AttrDef::number("hl_dv"))
                .attr(AttrDef::number("hr_dt"))
                .attr(AttrDef::number("hr_dv")),
        )
        .relationship(contains("Scene", OBJECTS))
        .relationship(consists_of(OBJECTS))
        .relationship(interactions(OBJECTS))
        .relationship(make_noise(OBJECTS))
        .relationship(
            RelSetDef::new("Authored With", "cap")
                .role(RoleDef::new("device", AUTHORING_TOOL))
                .role(RoleDef::new(ROLE_SUBJECT, "Scene")),
        )
        .relationship(
            RelSetDef::new(DERIVED_FROM, "dfrom")
                .role(RoleDef::new("derived", DERIVED_ALGORITHMS))
                .role(RoleDef::new("source", AUTHORING_TOOL_ALGORITHMS)),
        )
        .relationship(
            RelSetDef::new(HAS_KEYFRAME, "haskey")
                .role(RoleDef::new(ROLE_OBJECT, OBJECTS))
                .role(RoleDef::new(ROLE_KEYFRAME, KEYFRAME).total()),
        )
        .relationship(
            RelSetDef::new(KEYFRAME_INTERPOLATION, "keyint")
                .role(RoleDef::new(ROLE_KEYFRAME, KEYFRAME))
                .role(RoleDef::new(ROLE_ALGORITHM, INTERPOLATION)),
        )
        .relationship(
            RelSetDef::new(OBJECT_RENDERING, "objrnd")
                .role(RoleDef::new(ROLE_OBJECT, OBJECTS))
                .role(RoleDef::new(ROLE_ALGORITHM, RENDERING)),
        )
        .relationship(flight_paths(OBJECTS, DERIVED_ALGORITHMS))
}

/// MRI extension: patients, imaging equipment and organs with a
/// multi-valued disease attribute.
pub fn mri_schema_def() -> SchemaDef {
    SchemaDef::new(MRI)
        .entity(
            EntitySetDef::new(PATIENT, "pat")
                .attr(AttrDef::text("name").required())
                .attr(AttrDef::text("info").multi()),
        )
        .entity(device(IMAGING_EQUIPMENT, "mri", "specifications"))
        .entity(
            EntitySetDef::new(ORGANS, "organ")
                .attr(AttrDef::text("name").required())
                // linear voxel indices, x-fastest
                .attr(AttrDef::number("geometry").multi())
                .attr(AttrDef::text("disease").multi())
                .attr(AttrDef::number("size").constrained(Constraint::NonNegative))
                .attr(AttrDef::number("centroid_l"))
                .attr(AttrDef::number("centroid_h"))
                .attr(AttrDef::number("centroid_d"))
                .attr(AttrDef::number("mean_intensity"))
                .attr(AttrDef::number("stiffness").constrained(Constraint::NonNegative))
                .attr(AttrDef::boolean("unilluminated")),
        )
        .entity(acoustics())
        .entity(flss())
        .entity(coordinates())
        .entity(colors())
        .entity(algorithms(ALGORITHMS))
        .entity(EntitySetDef::new(RENDERING, "rnd").is_a(ALGORITHMS))
        .entity(EntitySetDef::new(ORGAN_ANNOTATION, "annalg").is_a(ALGORITHMS))
        .relationship(contains(PATIENT, ORGANS))
        .relationship(consists_of(ORGANS))
        .relationship(interactions(ORGANS))
        .relationship(make_noise(ORGANS))
        .relationship(
            RelSetDef::new(SCANS, "scan")
                .role(RoleDef::new("equipment", IMAGING_EQUIPMENT))
                .role(RoleDef::new("patient", PATIENT)),
        )
        .relationship(
            RelSetDef::new(ANNOTATED_BY, "annby")
                .role(RoleDef::new(ROLE_OBJECT, ORGANS))
                .role(RoleDef::new(ROLE_ALGORITHM, ORGAN_ANNOTATION)),
        )
        .relationship(flight_paths(ORGANS, ALGORITHMS))
}
