//! `flsc`: ingest, validate, compile and query FLS display models.
//!
//! Exit codes: 0 success, 1 validation violations, 2 usage error,
//! 3 IO or parse error. Results go to stdout, diagnostics to stderr.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fls_core::ingest::{read_frames, read_voxels, TransferTable, VoxelSequence};
use fls_core::model::names::*;
use fls_core::model::{animation_schema, core_schema, validate, Attrs, SchemaRegistry};
use fls_core::mri::{ingest_scan, ScanInput, ScanOptions, StiffnessTable};
use fls_core::pathgen::{AssignMethod, CompileOptions, FlightPathSet};
use fls_core::pipeline::{compile_model, PipelineError};
use fls_core::query::{annotate, parts_of, Query, QueryError, QUERY_GRAMMAR};
use fls_core::store::{read_flight_paths, read_model, write_flight_paths, write_model, StoreError};
use fls_core::{EntityId, FlsSpec, ModelGraph};

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    /// Already reported on stdout.
    #[error("{0} violations")]
    Violations(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violations(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
        }
    }
}

fn data(e: impl Display) -> Failure {
    Failure::Data(e.to_string())
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        data(e)
    }
}

#[derive(Parser)]
#[command(
    name = "flsc",
    version,
    about = "Model engine and flight-path compiler for FLS displays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model against its schema; exits 1 when violations are found
    Validate { model: PathBuf },
    /// Add frames or scans to a model, creating it if needed
    #[command(subcommand)]
    Ingest(Ingest),
    /// Compile every illuminated object into flight paths
    #[command(allow_negative_numbers = true)]
    Compile {
        model: PathBuf,
        /// Display frame rate
        #[arg(long)]
        fps: f64,
        /// FLS max speed (m/s)
        #[arg(long)]
        nu: f64,
        /// Flight time on a full charge (s)
        #[arg(long)]
        beta: f64,
        /// Battery charging time (s)
        #[arg(long)]
        omega: f64,
        /// Maximum haptic force (N)
        #[arg(long)]
        force: f64,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Name recorded on the FLS entities
        #[arg(long, default_value = "fls")]
        fls_model: String,
        /// Output flight-path file
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Run one query line against a model
    #[command(after_help = format!("Query grammar:\n{QUERY_GRAMMAR}"))]
    Query {
        model: PathBuf,
        /// Compiled flight paths, for geometric queries
        #[arg(long)]
        paths: Option<PathBuf>,
        query: String,
    },
    /// Attach a key=value note to a record
    Annotate {
        model: PathBuf,
        /// Record id, e.g. obj:3
        id: String,
        /// key=value
        note: String,
        #[arg(long, default_value = "")]
        author: String,
    },
    /// Print a flight-path file in readable form
    Inspect {
        paths: PathBuf,
        /// Only the summary lines
        #[arg(long)]
        summary: bool,
    },
}

#[derive(Subcommand)]
enum Ingest {
    /// Point-cloud frames for one object
    Frames {
        file: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Object name; reused if the model already has it
        #[arg(long)]
        object: String,
        /// Make the object a part of this one (created if missing)
        #[arg(long)]
        part_of: Option<String>,
        /// Schema for a new model
        #[arg(long, value_enum, default_value_t = SchemaChoice::Core)]
        schema: SchemaChoice,
    },
    /// One voxel scan, or several taken `--dt` seconds apart
    Voxels {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Intensity-to-stiffness table: `lo hi stiffness` rows
        #[arg(long)]
        stiffness: Option<PathBuf>,
        /// Intensity-to-color table: `lo hi r g b a` rows
        #[arg(long)]
        transfer: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value = "anonymous")]
        patient: String,
        #[arg(long, default_value = "scanner")]
        equipment: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaChoice {
    Core,
    Animation,
}

fn load(path: &Path) -> Result<ModelGraph, Failure> {
    Ok(read_model(path, &SchemaRegistry::with_builtins())?)
}

/// Saves without the validity gate: partial models are normal mid-pipeline.
fn save(graph: &ModelGraph, path: &Path) -> Result<(), Failure> {
    Ok(write_model(graph, path, true)?)
}

fn load_or_new(path: &Path, fresh: impl FnOnce() -> ModelGraph) -> Result<ModelGraph, Failure> {
    if path.exists() {
        load(path)
    } else {
        Ok(fresh())
    }
}

fn object_named(graph: &mut ModelGraph, name: &str) -> Result<EntityId, Failure> {
    let set = graph.object_set().map_err(usage)?.to_string();
    match graph.find_by_name(&set, name) {
        Some(id) => Ok(id),
        None => graph
            .create_entity(&set, Attrs::new().with("name", name))
            .map_err(usage),
    }
}

fn ingest_frames(
    file: &Path,
    model: &Path,
    object: &str,
    part_of: Option<&str>,
    schema: SchemaChoice,
) -> Result<(), Failure> {
    let frames = read_frames(file).map_err(data)?;
    let mut g = load_or_new(model, || {
        ModelGraph::new(match schema {
            SchemaChoice::Core => core_schema(),
            SchemaChoice::Animation => animation_schema(),
        })
    })?;
    let id = object_named(&mut g, object)?;
    g.set_geometry(id, frames).map_err(usage)?;
    if let Some(whole) = part_of {
        let whole = object_named(&mut g, whole)?;
        let linked = parts_of(&g, whole, false).map_err(usage)?.contains(&id);
        if !linked {
            g.link(
                CONSISTS_OF,
                [(ROLE_WHOLE, whole.into()), (ROLE_PART, id.into())],
                Attrs::new(),
            )
            .map_err(usage)?;
        }
    }
    save(&g, model)?;
    println!("{}", g.format_entity(id));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ingest_voxels(
    files: &[PathBuf],
    model: &Path,
    threshold: f64,
    stiffness: Option<&Path>,
    transfer: Option<&Path>,
    dt: f64,
    patient: &str,
    equipment: &str,
) -> Result<(), Failure> {
    if !threshold.is_finite() {
        return Err(usage(format!("threshold must be finite, got {threshold}")));
    }
    let grids = files
        .iter()
        .map(read_voxels)
        .collect::<Result<Vec<_>, _>>()
        .map_err(data)?;
    let stiffness = stiffness.map(StiffnessTable::read).transpose().map_err(data)?;
    let transfer = match transfer {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            TransferTable::parse(&text).map_err(data)?
        }
        None => TransferTable::grayscale(),
    };
    let options = ScanOptions {
        threshold,
        transfer,
        stiffness: stiffness.as_ref(),
        ..ScanOptions::default()
    };
    let mut g = load_or_new(model, || ModelGraph::new(fls_core::model::mri_schema()))?;
    let sequence;
    let scan = if grids.len() == 1 {
        ScanInput::Structural(&grids[0])
    } else {
        sequence = VoxelSequence::new(grids, dt).map_err(usage)?;
        ScanInput::Sequence(&sequence)
    };
    let out = ingest_scan(
        &mut g,
        scan,
        Attrs::new().with("name", patient),
        Attrs::new().with("name", equipment),
        &options,
    )
    .map_err(data)?;
    save(&g, model)?;
    println!("{}", g.format_entity(out.patient));
    for organ in out.organs {
        println!("{}", g.format_entity(organ));
    }
    Ok(())
}

fn run_validate(model: &Path) -> Result<(), Failure> {
    let g = load(model)?;
    let report = validate(&g);
    println!("{report}");
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure::Violations(report.violations.len()))
    }
}

fn run_compile(model: &Path, fps: f64, spec: FlsSpec, method: Method, output: &Path) -> Result<(), Failure> {
    let mut g = load(model)?;
    let method = match method {
        Method::Exact => AssignMethod::Exact,
        Method::Greedy => AssignMethod::Greedy,
    };
    let out = compile_model(&mut g, fps, &spec, &CompileOptions::from(method)).map_err(|e| match e {
        PipelineError::Spec(_) | PipelineError::InvalidFps(_) => usage(e),
        _ => data(e),
    })?;
    write_flight_paths(&out.paths, output)?;
    save(&g, model)?;
    let f = &out.feasibility;
    let s = out.paths.summary();
    println!("fls {}", s.fls_count);
    println!("segments {}", s.segment_count);
    println!("span {:?}", f.span);
    println!("max_required_speed {:?}", f.max_required_speed);
    println!("velocity_violations {}", f.velocity_violations.len());
    println!("battery_waves {}", f.battery_waves);
    println!("charging_time {:?}", f.charging_time);
    for v in &f.velocity_violations {
        eprintln!(
            "warning: FLS {} needs {:.3} m/s at frame {} (max {})",
            v.fls, v.required_speed, v.frame, spec.nu
        );
    }
    Ok(())
}

fn run_query(model: &Path, paths: Option<&Path>, line: &str) -> Result<(), Failure> {
    let g = load(model)?;
    let q: Query = line.parse().map_err(usage)?;
    let paths: Option<FlightPathSet> = paths.map(read_flight_paths).transpose()?;
    let lines = q.run(&g, paths.as_ref()).map_err(|e| match e {
        QueryError::Model(_) | QueryError::Syntax(_) => usage(e),
        QueryError::NotCompiled(_) if paths.is_none() => usage(format!("{e}; pass --paths")),
        QueryError::NotCompiled(_) => data(e),
    })?;
    for l in lines {
        println!("{l}");
    }
    Ok(())
}

fn run_annotate(model: &Path, id: &str, note: &str, author: &str) -> Result<(), Failure> {
    let (key, value) = note
        .split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| usage(format!("expected key=value, got '{note}'")))?;
    let mut g = load(model)?;
    let target = g.parse_ref(id).map_err(usage)?;
    let ann = annotate(&mut g, target, key, value, author).map_err(usage)?;
    save(&g, model)?;
    println!("ann:{}", ann.0);
    Ok(())
}

fn run_inspect(path: &Path, summary_only: bool) -> Result<(), Failure> {
    let set = read_flight_paths(path)?;
    let s = set.summary();
    println!("fps {:?}", set.fps);
    println!("fls {}", s.fls_count);
    println!("segments {}", s.segment_count);
    println!("intervals {}", s.interval_count);
    println!("span [{:?}, {:?})", s.start, s.end);
    println!("lit_time {:?}", s.lit_time);
    if summary_only {
        return Ok(());
    }
    for (i, segs) in set.paths.iter().enumerate() {
        println!("fls {i}");
        for seg in segs {
            let c = seg.color;
            let spans: Vec<String> = seg.intervals.iter().map(|(s, e)| format!("[{s:?}, {e:?})")).collect();
            println!(
                "  at ({:?}, {:?}, {:?}) rgba ({:?}, {:?}, {:?}, {:?}) during {}",
                seg.coord.l,
                seg.coord.h,
                seg.coord.d,
                c.r,
                c.g,
                c.b,
                c.a,
                spans.join(" ")
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { model } => run_validate(&model),
        Command::Ingest(Ingest::Frames {
            file,
            model,
            object,
            part_of,
            schema,
        }) => ingest_frames(&file, &model, &object, part_of.as_deref(), schema),
        Command::Ingest(Ingest::Voxels {
            files,
            model,
            threshold,
            stiffness,
            transfer,
            dt,
            patient,
            equipment,
        }) => ingest_voxels(
            &files,
            &model,
            threshold,
            stiffness.as_deref(),
            transfer.as_deref(),
            dt,
            &patient,
            &equipment,
        ),
        Command::Compile {
            model,
            fps,
            nu,
            beta,
            omega,
            force,
            method,
            fls_model,
            output,
        } => {
            let spec = FlsSpec::new(fls_model, nu, beta, force, omega).map_err(usage)?;
            run_compile(&model, fps, spec, method, &output)
        }
        Command::Query { model, paths, query } => run_query(&model, paths.as_deref(), &query),
        Command::Annotate {
            model,
            id,
            note,
            author,
        } => run_annotate(&model, &id, &note, &author),
        Command::Inspect { paths, summary } => run_inspect(&paths, summary),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, Failure::Violations(_)) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn arguments_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Violations(3).code(), 1);
        assert_eq!(usage("x").code(), 2);
        assert_eq!(data("x").code(), 3);
    }
}
