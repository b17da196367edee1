//! Command-line surface: argument parsing, output files and run manifests.
//!
//! Every command writes its outputs and a `<command>_manifest.json` into the
//! output directory. Exit codes: 0 success, 1 i/o failure or a failed
//! verification, 2 invalid input, 3 numeric failure.
//!
//! A `--config FILE` of `key = value` lines (TOML) supplies defaults for any
//! long flag; flags given on the command line win.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::density::{
    base_sequence, coverage_run, epsilon_density, image_confinement, trace_points, Confinement,
    LineSpec, ParamWindow, PatchSpec, TraceConfig, VoxelGrid, YFace, YPoint,
};
use crate::distortion::{lambda_h_estimate, verify_slab_bound, Slab, SlabOptions};
use crate::error::{Error, Result};
use crate::point::Point3;
use crate::preimage::{cone_mesh, coverage_constant_c, ConeSurface};
use crate::thresholds::EXCLUDED_WINDOW;
use crate::verify::{run_verification, Level, VerifyOptions};
use crate::zorich::{zorich, zorich_inverse, zorich_second, BeamIndex};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "zorich", version, about = "Experiments with the Zorich map and its second iterate")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reduced budgets and sample counts.
    #[arg(long, global = true)]
    pub quick: bool,
    /// Key-value file with defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Z(x) and Z(Z(x)) at a point.
    Eval(EvalArgs),
    /// The preimage of y in one beam.
    Invert(InvertArgs),
    /// Triangle mesh of a cone preimage of a horizontal plane.
    Cone(ConeArgs),
    /// Point cloud of the image of a line under Z o Z.
    Trace(TraceArgs),
    /// Voxel coverage series of the image of a line.
    Coverage(CoverageArgs),
    /// Hit fractions of a ball over shrinking patches of lines.
    Density(DensityArgs),
    /// Relative distortion of Z on a slab against its bound.
    Distortion(DistortionArgs),
    /// The full verification suite.
    Verify(VerifyArgs),
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected three comma-separated numbers, got {}", v.len()))
}

fn parse_beam(s: &str) -> std::result::Result<[i64; 2], String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[i64; 2]>::try_from(v).map_err(|v| format!("expected two comma-separated integers, got {}", v.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaceArg {
    PosX1,
    NegX1,
    PosX2,
    NegX2,
}

impl From<FaceArg> for YFace {
    fn from(f: FaceArg) -> Self {
        match f {
            FaceArg::PosX1 => YFace::PosX1,
            FaceArg::NegX1 => YFace::NegX1,
            FaceArg::PosX2 => YFace::PosX2,
            FaceArg::NegX2 => YFace::NegX2,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// The point, as `x1,x2,x3`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x: [f64; 3],
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InvertArgs {
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub y: [f64; 3],
    /// Beam `i,j`; defaults to (0, 0) for y3 >= 0 and (1, 0) otherwise.
    #[arg(long, value_parser = parse_beam, allow_hyphen_values = true)]
    pub beam: Option<[i64; 2]>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConeArgs {
    /// Nonzero level t of the plane x3 = t.
    #[arg(long, allow_hyphen_values = true)]
    pub level: f64,
    /// Beam `i,j`; defaults to the base beam of the level's sign.
    #[arg(long, value_parser = parse_beam, allow_hyphen_values = true)]
    pub beam: Option<[i64; 2]>,
    /// Top of the mesh; must exceed the vertex height ln|t|.
    #[arg(long, allow_hyphen_values = true)]
    pub x3_max: f64,
    /// Grid size per face.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LineArgs {
    /// Base point `p1,p2,p3`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0,0")]
    pub p: [f64; 3],
    /// Face of Y carrying the second point of the line.
    #[arg(long, value_enum, default_value = "pos-x1")]
    pub face: FaceArg,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.3)]
    pub u2: f64,
    #[arg(long, default_value_t = 1.5e-4)]
    pub u3: f64,
    /// Direction `d1,d2,d3`, replacing the point of Y. Allows excluded lines.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub direction: Option<[f64; 3]>,
    /// Lowest height traced.
    #[arg(long, allow_hyphen_values = true, default_value_t = -8.0)]
    pub x3_min: f64,
    /// Highest height traced.
    #[arg(long, allow_hyphen_values = true, default_value_t = 12.0)]
    pub x3_max: f64,
    /// Explicit parameter window `s_min,s_max`; required for horizontal lines
    /// unless the default `[-1e5, 1e5]` is wanted.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<[f64; 2]>,
}

fn parse_window(s: &str) -> std::result::Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 2]>::try_from(v).map_err(|v| format!("expected two comma-separated numbers, got {}", v.len()))
}

impl LineArgs {
    pub fn line(&self) -> Result<LineSpec> {
        let p = Point3::from(self.p);
        match self.direction {
            Some(d) => LineSpec::from_direction(p, Point3::from(d)),
            None => LineSpec::through(p, YPoint::new(self.face.into(), self.u2, self.u3)?),
        }
    }

    pub fn window(&self, line: &LineSpec) -> ParamWindow {
        match self.window {
            Some([s_min, s_max]) => ParamWindow::Explicit { s_min, s_max },
            None if line.d.x3 == 0.0 => EXCLUDED_WINDOW,
            None => ParamWindow::Height { x3_min: self.x3_min, x3_max: self.x3_max },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraceArgs {
    #[command(flatten)]
    pub line: LineArgs,
    /// Half-width R of the box [-R, R]^3.
    #[arg(long, default_value_t = 10.0)]
    pub half_extent: f64,
    /// Largest gap between consecutive points inside the box.
    #[arg(long, default_value_t = 0.15625)]
    pub h_max: f64,
    /// Evaluation budget; divided by 10 with --quick.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub line: LineArgs,
    #[arg(long, default_value_t = 10.0)]
    pub half_extent: f64,
    /// Voxels per axis.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Largest gap between points, as a fraction of the voxel size.
    #[arg(long, default_value_t = 0.5)]
    pub chord_fraction: f64,
    /// Evaluation budget; divided by 10 with --quick.
    #[arg(long, default_value_t = 10_000_000)]
    pub budget: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensityArgs {
    /// Base point of the lines.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0,0")]
    pub p: [f64; 3],
    /// Index of the ball in the base sequence.
    #[arg(long, default_value_t = 1)]
    pub ball_index: u64,
    #[arg(long, value_enum, default_value = "pos-x1")]
    pub face: FaceArg,
    /// Patch center.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.3)]
    pub u2: f64,
    #[arg(long, default_value_t = 0.01)]
    pub u3: f64,
    /// Half-width of the largest patch.
    #[arg(long, default_value_t = 0.004)]
    pub delta: f64,
    /// Lines per patch side.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    /// Evaluation budget per line.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Patch halvings, including the largest patch; 2 with --quick.
    #[arg(long, default_value_t = 4)]
    pub rungs: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistortionArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t2: f64,
    /// Sample points in the slab; at least 1000.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Grid size of the estimate of the bi-Lipschitz constant of h.
    #[arg(long, default_value_t = 256)]
    pub lambda_grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {}

/// What a finished command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
    /// False only for a verification run that failed.
    pub success: bool,
}

impl Outcome {
    fn ok() -> Self {
        Self { success: true, ..Self::default() }
    }

    fn say(&mut self, s: impl Into<String>) {
        self.messages.push(s.into());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub common: CommonArgs,
    pub version: String,
    pub timestamp: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub exit_code: i32,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn digest(path: &Path) -> Result<FileDigest> {
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_file(path)? })
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_FAILURE,
        e if e.is_validation() => EXIT_VALIDATION,
        _ => EXIT_NUMERIC,
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Invert(_) => "invert",
            Command::Cone(_) => "cone",
            Command::Trace(_) => "trace",
            Command::Coverage(_) => "coverage",
            Command::Density(_) => "density",
            Command::Distortion(_) => "distortion",
            Command::Verify(_) => "verify",
        }
    }
}

/// Appends `--key=value` for every config entry whose flag is not already given.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(
            args.get(pos + 1).ok_or_else(|| Error::Invalid("--config needs a file".into()))?,
        ),
    };
    let text = fs::read_to_string(&path)?;
    let table: toml::Table =
        text.parse().map_err(|e| Error::Invalid(format!("config file {}: {e}", path.display())))?;
    let given = |flag: &str| {
        args.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&format!("{flag}="))
        })
    };
    let mut out = args.clone();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        if given(&flag) {
            continue;
        }
        let scalar = |v: &toml::Value| match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(Error::Invalid(format!("config key {key}: unsupported value {other}"))),
        };
        match &value {
            toml::Value::Boolean(true) => out.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                out.push(format!("{flag}={}", parts.join(",")).into());
            }
            v => out.push(format!("{flag}={}", scalar(v)?).into()),
        }
    }
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    run(&cli)
}

/// Runs a parsed command, prints its messages and writes the manifest.
pub fn run(cli: &Cli) -> i32 {
    if let Some(n) = cli.common.threads {
        // fails only if a pool already exists, which then stays in use
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = fs::create_dir_all(&cli.common.out)
        .map_err(Error::from)
        .and_then(|_| execute(&cli.command, &cli.common));
    let (code, files) = match result {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            (if outcome.success { EXIT_OK } else { EXIT_FAILURE }, outcome.files)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (exit_code(&e), Vec::new())
        }
    };
    if let Err(e) = write_manifest(cli, &files, code) {
        eprintln!("error: could not write manifest: {e}");
        return if code == EXIT_OK { EXIT_FAILURE } else { code };
    }
    code
}

fn write_manifest(cli: &Cli, files: &[PathBuf], code: i32) -> Result<()> {
    let inputs = match &cli.common.config {
        Some(p) => vec![digest(p)?],
        None => Vec::new(),
    };
    let manifest = RunManifest {
        command: cli.command.name().into(),
        parameters: serde_json::to_value(&cli.command).map_err(|e| Error::Io(e.to_string()))?,
        common: cli.common.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        inputs,
        outputs: files.iter().map(|f| digest(f)).collect::<Result<_>>()?,
        exit_code: code,
    };
    let path = cli.common.out.join(format!("{}_manifest.json", cli.command.name()));
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// Runs one command, writing its outputs under `common.out`.
pub fn execute(cmd: &Command, common: &CommonArgs) -> Result<Outcome> {
    let out = common.out.as_path();
    match cmd {
        Command::Eval(a) => cmd_eval(a, out),
        Command::Invert(a) => cmd_invert(a, out),
        Command::Cone(a) => cmd_cone(a, out),
        Command::Trace(a) => cmd_trace(a, out, common.quick),
        Command::Coverage(a) => cmd_coverage(a, out, common.quick),
        Command::Density(a) => cmd_density(a, out, common.quick),
        Command::Distortion(a) => cmd_distortion(a, out),
        Command::Verify(_) => cmd_verify(out, common.quick),
    }
}

fn fmt_point(p: Point3) -> String {
    format!("({:e}, {:e}, {:e})", p.x1, p.x2, p.x3)
}

/// Writes `key=value` lines under a header.
fn write_report(path: &Path, header: &str, entries: &[(&str, String)]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# {header}")?;
    for (k, v) in entries {
        writeln!(f, "{k}={v}")?;
    }
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs, out: &Path) -> Result<Outcome> {
    let x = Point3::from(a.x);
    let z = zorich(x)?;
    let f = zorich_second(x)?;
    let path = out.join("eval.txt");
    write_report(
        &path,
        "point evaluation; coordinates are dimensionless",
        &[("x", fmt_point(x)), ("z", fmt_point(z)), ("f", fmt_point(f))],
    )?;
    let mut o = Outcome::ok();
    o.say(format!("Z(x) = ({}, {}, {})", z.x1, z.x2, z.x3));
    o.say(format!("f(x) = ({}, {}, {})", f.x1, f.x2, f.x3));
    o.files.push(path);
    Ok(o)
}

fn default_beam(upper: bool) -> BeamIndex {
    if upper { BeamIndex::new(0, 0) } else { BeamIndex::new(1, 0) }
}

pub fn cmd_invert(a: &InvertArgs, out: &Path) -> Result<Outcome> {
    let y = Point3::from(a.y);
    let beam = a.beam.map_or_else(|| default_beam(y.x3 >= 0.0), |[i, j]| BeamIndex::new(i, j));
    let x = zorich_inverse(y, beam)?;
    let path = out.join("invert.txt");
    write_report(
        &path,
        "inverse branch; coordinates are dimensionless",
        &[("y", fmt_point(y)), ("beam", format!("{},{}", beam.i, beam.j)), ("x", fmt_point(x))],
    )?;
    let mut o = Outcome::ok();
    o.say(format!("x = ({}, {}, {}) in beam ({}, {})", x.x1, x.x2, x.x3, beam.i, beam.j));
    o.files.push(path);
    Ok(o)
}

pub fn cmd_cone(a: &ConeArgs, out: &Path) -> Result<Outcome> {
    let beam = a.beam.map_or_else(|| default_beam(a.level > 0.0), |[i, j]| BeamIndex::new(i, j));
    let cone = ConeSurface::in_beam(a.level, beam)?;
    let tris = cone_mesh(&cone, a.x3_max, a.n)?;
    let path = out.join("cone_mesh.txt");
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(f, "# triangle soup: ax ay az bx by bz cx cy cz per line; level {} beam {},{}", a.level, beam.i, beam.j)?;
    for t in &tris {
        writeln!(
            f,
            "{} {} {} {} {} {} {} {} {}",
            t[0].x1, t[0].x2, t[0].x3, t[1].x1, t[1].x2, t[1].x3, t[2].x1, t[2].x2, t[2].x3
        )?;
    }
    f.flush()?;
    let mut o = Outcome::ok();
    o.say(format!("{} triangles written to {}", tris.len(), path.display()));
    o.files.push(path);
    Ok(o)
}

fn quick_budget(budget: u64, quick: bool) -> u64 {
    if quick { (budget / 10).max(crate::density::MIN_BUDGET) } else { budget }
}

fn confinement_message(c: &Confinement) -> String {
    match c {
        Confinement::Bounded { radius } => format!("bounded image: |f| <= {radius:e} on this horizontal line"),
        Confinement::PlaneX1 => "excluded line: image lies in the plane x1 = 0".into(),
        Confinement::PlaneX2 => "excluded line: image lies in the plane x2 = 0".into(),
        Confinement::Diagonal { sign } => format!("excluded line: image lies in the plane x2 = {sign} x1"),
    }
}

pub fn cmd_trace(a: &TraceArgs, out: &Path, quick: bool) -> Result<Outcome> {
    let line = a.line.line()?;
    let cfg = TraceConfig::new(a.half_extent, a.h_max, quick_budget(a.budget, quick), a.line.window(&line));
    let (points, stats) = trace_points(&line, &cfg)?;
    let path = out.join("trace.xyz");
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(f, "# x y z: points of f(L) inside [-R, R]^3, R = {}", a.half_extent)?;
    for p in points.iter().filter(|p| p.in_box) {
        writeln!(f, "{} {} {}", p.value.x1, p.value.x2, p.value.x3)?;
    }
    f.flush()?;
    let stats_path = out.join("trace_stats.txt");
    write_report(
        &stats_path,
        "trace statistics; counts",
        &[
            ("evaluations", stats.evaluations.to_string()),
            ("emitted", stats.emitted.to_string()),
            ("emitted_in_box", stats.emitted_in_box.to_string()),
            ("cap_hit_fraction", stats.cap_hit_fraction().to_string()),
            ("overflow_dropped", stats.overflow_dropped.to_string()),
            ("budget_exhausted", stats.budget_exhausted.to_string()),
            ("audit_violations", stats.audit_violations.to_string()),
        ],
    )?;
    let mut o = Outcome::ok();
    if let Some(c) = image_confinement(&line) {
        o.say(confinement_message(&c));
    }
    o.say(format!("{} points in the box, {} evaluations", stats.emitted_in_box, stats.evaluations));
    o.files.extend([path, stats_path]);
    Ok(o)
}

pub fn cmd_coverage(a: &CoverageArgs, out: &Path, quick: bool) -> Result<Outcome> {
    let line = a.line.line()?;
    let grid = VoxelGrid::new(a.half_extent, a.resolution)?;
    let h = grid.voxel_size() * a.chord_fraction;
    let cfg = TraceConfig::new(a.half_extent, h, quick_budget(a.budget, quick), a.line.window(&line));
    let (run, _) = coverage_run(&line, grid, &cfg)?;
    let path = out.join("coverage.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.to_string()))?;
    for p in &run.series {
        w.serialize(p).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    let confinement = image_confinement(&line);
    let report = out.join("coverage_report.txt");
    write_report(
        &report,
        "coverage summary; coverage is a fraction of non-excluded voxels",
        &[
            ("coverage", run.coverage.to_string()),
            ("evaluations", run.stats.evaluations.to_string()),
            ("cap_hit_fraction", run.stats.cap_hit_fraction().to_string()),
            ("audit_violations", run.stats.audit_violations.to_string()),
            ("excluded_line", confinement.is_some().to_string()),
            ("bounded_image", matches!(confinement, Some(Confinement::Bounded { .. })).to_string()),
        ],
    )?;
    let mut o = Outcome::ok();
    if let Some(c) = confinement {
        o.say(confinement_message(&c));
    }
    o.say(format!("coverage = {}", run.coverage));
    o.files.extend([path, report]);
    Ok(o)
}

pub fn cmd_density(a: &DensityArgs, out: &Path, quick: bool) -> Result<Outcome> {
    let ball = base_sequence(a.ball_index);
    let patch = PatchSpec::new(YPoint::new(a.face.into(), a.u2, a.u3)?, a.delta)?;
    let rungs = if quick { a.rungs.min(2) } else { a.rungs };
    let recs = epsilon_density(Point3::from(a.p), &patch, &ball, a.grid, a.budget, rungs)?;
    let path = out.join("density.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.to_string()))?;
    for r in &recs {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    let lambda = lambda_h_estimate(256)?;
    let c = coverage_constant_c(ball.delta, ball.q.norm(), lambda)?;
    let report = out.join("density_report.txt");
    write_report(
        &report,
        "density summary; fractions of lines whose image meets the ball",
        &[
            ("ball_center", fmt_point(ball.q)),
            ("ball_radius", ball.delta.to_string()),
            ("min_fraction", recs.iter().map(|r| r.fraction).fold(f64::INFINITY, f64::min).to_string()),
            ("c_over_16", (c / 16.0).to_string()),
        ],
    )?;
    let mut o = Outcome::ok();
    for r in &recs {
        o.say(format!("delta = {:e}: {} of {} lines hit", r.delta, r.hits, r.valid_points));
    }
    o.files.extend([path, report]);
    Ok(o)
}

pub fn cmd_distortion(a: &DistortionArgs, out: &Path) -> Result<Outcome> {
    let lambda = lambda_h_estimate(a.lambda_grid)?;
    let slab = Slab::new(a.t1, a.t2)?;
    let rep = verify_slab_bound(&slab, a.samples, lambda, &SlabOptions::default())?;
    let path = out.join("distortion.txt");
    write_report(
        &path,
        "relative distortion of Z on the slab t1 < x3 < t2; ratios are dimensionless",
        &[
            ("t1", a.t1.to_string()),
            ("t2", a.t2.to_string()),
            ("lambda", rep.lambda.to_string()),
            ("d_est", rep.d_est.to_string()),
            ("bound", rep.bound.to_string()),
            ("samples", rep.samples.to_string()),
            ("pass", rep.pass.to_string()),
        ],
    )?;
    let mut o = Outcome::ok();
    o.say(format!("D = {} against bound {} (pass = {})", rep.d_est, rep.bound, rep.pass));
    o.files.push(path);
    Ok(o)
}

pub fn cmd_verify(out: &Path, quick: bool) -> Result<Outcome> {
    let level = if quick { Level::Quick } else { Level::Full };
    let report = run_verification(&VerifyOptions::new(level));
    let path = out.join("verify_report.txt");
    let text = report.to_text();
    fs::write(&path, &text)?;
    let mut o = Outcome::ok();
    o.say(text.trim_end());
    o.success = report.pass;
    o.files.push(path);
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_parser_accepts_three_numbers() {
        assert_eq!(parse_point("1,-2, 3.5"), Ok([1.0, -2.0, 3.5]));
        assert!(parse_point("1,2").is_err());
        assert!(parse_point("a,b,c").is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::ZeroInput(0.0)), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::Invalid("x".into())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::NoIntersection { lo: 0.0, hi: 1.0 }), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Io("x".into())), EXIT_FAILURE);
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "budget = 5000\nquick = true\nx = [1.0, 2.0, 3.0]\n").unwrap();
        let args: Vec<OsString> = ["zorich", "eval", "--budget", "7", "--config", cfg.to_str().unwrap()]
            .iter()
            .map(OsString::from)
            .collect();
        let merged = merge_config(args).unwrap();
        let merged: Vec<String> = merged.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert!(merged.contains(&"--quick".to_string()));
        assert!(merged.contains(&"--x=1,2,3".to_string()));
        assert!(!merged.iter().any(|a| a == "--budget=5000"));
    }
}
