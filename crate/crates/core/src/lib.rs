//! Data-model engine and flight-path compiler for Flying Light Speck (FLS)
//! displays.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: schema-driven entity-relationship graph with the shipped
//!   core, animation and MRI schemas, plus validation.
//! - [`animation`]: keyframes and per-channel F-curves stored in the graph.
//! - [`interp`]: linear and cubic Bezier curve evaluation and object sampling.
//! - [`pathgen`]: frame-to-frame assignment, interval coalescing and
//!   feasibility checks that turn frames into per-FLS flight paths.
//! - [`ingest`]: text parsers for frame sequences and voxel grids.
//! - [`mri`]: organ labelling, stiffness lookup and scan ingestion.
//! - [`store`]: the model text format and the binary flight-path format.
//! - [`query`]: content-based retrieval and annotation.
//! - [`pipeline`]: compiling every object of a model into one flight-path set.

pub mod animation;
pub mod geom;
pub mod ingest;
pub mod interp;
pub mod model;
pub mod mri;
pub mod pathgen;
pub mod pipeline;
pub mod query;
pub mod store;

pub use geom::{ColorRGBA, Coordinate, FlsSpec, FrameSequence, Point, PointSet};
pub use model::{EntityId, ModelGraph, RelId};
