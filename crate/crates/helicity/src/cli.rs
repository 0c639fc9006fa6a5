//! Command-line driver.
//!
//! Every command writes into `--out DIR` and finishes with a
//! `manifest.json` listing the SHA-256 of each file it wrote. Exit codes:
//! 0 success, 2 invalid input, 3 a numerical tolerance was not met, 4 I/O.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use helicity_core::coarsegrain::covering_grid;
use helicity_core::geometry::{frenet, hopf_rings};
use helicity_core::topology::{default_epsilon, linking_number_polygon};
use helicity_core::{
    assemble_helicity, coarse_velocity, coarse_vorticity, make_bundle, make_circle, make_torus_knot,
    quasiclassical_helicity, resample_arclength, seifert_framing, Filament, Framing, HelicityReport,
    TorusKnotParams, Tolerances, TopologyError, Vec3,
};

use crate::gpe::{
    hausdorff_distance, lk_matrix, run_experiment, ComplexField3D, GpeConfig, GpeError, Scene, Snapshot, SplitOrder,
};
use crate::io::{self, DiagnosticsRow, IoError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Tolerance(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Tolerance(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::NotInteger { .. } | TopologyError::TooClose { .. } => CliError::Tolerance(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<GpeError> for CliError {
    fn from(e: GpeError) -> Self {
        match e {
            GpeError::NonFinite { .. } | GpeError::OpenLine { .. } => CliError::Tolerance(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "helicity", version, about = "Helicity, linking and self-linking of vortex filaments")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON object of flag values for the chosen command (keys are long flag
    /// names); flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for the numerical kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized framings.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a filament file.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Helicity report (Lk, Wr, Tw, SL) of a filament file.
    Topo(TopoArgs),
    /// Gross-Pitaevskii experiments.
    #[command(subcommand)]
    Gpe(GpeCommand),
    /// Coarse-grained helicity of a filament file next to its linking-number oracle.
    Coarse(CoarseArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// (p, q) torus knot; the defaults give the trefoil.
    Trefoil(TrefoilArgs),
    /// Planar circle.
    Circle(CircleArgs),
    /// The linked ring pair.
    HopfRings(HopfArgs),
    /// Two linked bundles of rings.
    HopfBundles(BundleArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TrefoilArgs {
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 3)]
    pub q: u32,
    #[arg(long, default_value_t = 28.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 5.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    /// Keep the parametric samples instead of resampling to equal arclength.
    #[arg(long)]
    pub no_resample: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CircleArgs {
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
    pub center: Vec3,
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,1")]
    pub normal: Vec3,
}

#[derive(Debug, Args, Serialize)]
pub struct HopfArgs {
    #[arg(long, default_value_t = 40.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BundleArgs {
    #[arg(long, default_value_t = 40.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// Satellite rings around each ring.
    #[arg(long, default_value_t = 6)]
    pub satellites: usize,
    /// Distance of the satellites from their ring.
    #[arg(long, default_value_t = 4.0)]
    pub offset: f64,
}

/// Ribbon choice for `topo`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FramingChoice {
    Frenet,
    Seifert,
    Winding(i64),
    /// Smooth random framing with a random winding in −3..=3, from `--seed`.
    Random,
}

fn parse_framing(s: &str) -> Result<FramingChoice, String> {
    match s {
        "frenet" => Ok(FramingChoice::Frenet),
        "seifert" => Ok(FramingChoice::Seifert),
        "random" => Ok(FramingChoice::Random),
        _ => match s.strip_prefix("winding:") {
            Some(k) => k.parse().map(FramingChoice::Winding).map_err(|e| format!("winding count {k:?}: {e}")),
            None => Err(format!("unknown framing {s:?}; use frenet, seifert, winding:K or random")),
        },
    }
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TopoArgs {
    /// Filament file.
    pub file: PathBuf,
    /// frenet, seifert, winding:K or random.
    #[arg(long, value_parser = parse_framing, default_value = "frenet")]
    pub framing: FramingChoice,
    /// Push-off radius; defaults to a per-filament value from curvature and
    /// clearance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Reference phase of the constant-phase ribbon.
    #[arg(long, default_value_t = 0.0)]
    pub phi_ref: f64,
    /// Allowed distance of Lk and Wr + Tw from an integer.
    #[arg(long, default_value_t = 5e-3)]
    pub integer_tol: f64,
    /// Minimum separation for the midpoint Gauss sum, in longest segments.
    #[arg(long, default_value_t = 3.0)]
    pub proximity_factor: f64,
    /// Bound on |H| asserted with the constant-phase framing.
    #[arg(long, default_value_t = 5e-3)]
    pub helicity_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum GpeCommand {
    /// Imprint a scene, evolve it and extract vortex lines.
    Run(GpeRunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneName {
    HopfSingle,
    Ring,
    HopfBundles,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldOutput {
    None,
    Final,
    All,
}

/// Spectral cutoff fraction; `None` disables the filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Dealias(pub Option<f64>);

fn parse_dealias(s: &str) -> Result<Dealias, String> {
    if s == "none" {
        return Ok(Dealias(None));
    }
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|e| e.to_string())? / b.trim().parse::<f64>().map_err(|e| e.to_string())?,
        None => s.parse::<f64>().map_err(|e| e.to_string())?,
    };
    Ok(Dealias(Some(v)))
}

#[derive(Debug, Args, Serialize)]
pub struct GpeRunArgs {
    #[arg(long, value_enum, default_value = "hopf-single", conflicts_with = "filaments")]
    pub scene: SceneName,
    /// Imprint the filaments of this file instead of a named scene.
    #[arg(long)]
    pub filaments: Option<PathBuf>,
    /// Ring radius of the named scene (default: a quarter of the box for
    /// the Hopf scenes, a sixth for the ring).
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub satellites: Option<usize>,
    #[arg(long)]
    pub offset: Option<f64>,
    /// Nodes per axis.
    #[arg(long, default_value_t = 96)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dx: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    /// Number of steps; overrides --t-end.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Splitting order, 2 or 4.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=4))]
    pub order: u32,
    /// Spectral cutoff as a fraction of π/dx (e.g. 2/3), or "none".
    #[arg(long, value_parser = parse_dealias, default_value = "2/3")]
    pub dealias: Dealias,
    /// Steps between snapshots.
    #[arg(long, default_value_t = 50)]
    pub stride: usize,
    /// Which snapshots also store ψ.
    #[arg(long, value_enum, default_value = "final")]
    pub fields: FieldOutput,
    /// Round-trip Hausdorff bound, in cells, enforced when --steps 0.
    #[arg(long, default_value_t = 1.0)]
    pub hausdorff_tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CoarseArgs {
    /// Filament file.
    pub file: PathBuf,
    /// Gaussian width; defaults to an eighth of the mean equivalent ring
    /// radius L/2π.
    #[arg(long)]
    pub kernel_width: Option<f64>,
    /// Grid spacing (default: half the kernel width).
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Grid margin around the filaments (default: four kernel widths).
    #[arg(long)]
    pub margin: Option<f64>,
    /// Relative tolerance of H_cl against the linking-number sum.
    #[arg(long, default_value_t = 0.15)]
    pub tol: f64,
    /// Also write the vorticity and velocity grids.
    #[arg(long)]
    pub write_grids: bool,
}

/// Parses `argv` and merges `--config`. Clap's own errors (including
/// `--help`) are returned unprinted.
pub fn parse_args(argv: &[OsString]) -> Result<Cli, Result<clap::Error, CliError>> {
    let mut cmd = Cli::command().args_override_self(true);
    cmd.build();
    let matches = cmd.clone().try_get_matches_from(argv).map_err(Ok)?;
    let Some(path) = matches.get_one::<PathBuf>("config").cloned() else {
        return Cli::from_arg_matches(&matches).map_err(Ok);
    };
    let table: serde_json::Map<String, serde_json::Value> = io::read_json(&path).map_err(|e| {
        Err(match e {
            IoError::Json { .. } => invalid(e),
            other => CliError::Io(other),
        })
    })?;

    let (mut leaf_cmd, mut leaf) = (&cmd, &matches);
    while let Some((name, sub)) = leaf.subcommand() {
        leaf_cmd = leaf_cmd.find_subcommand(name).expect("matched subcommand exists");
        leaf = sub;
    }
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in &table {
        let id = key.replace('-', "_");
        let arg = leaf_cmd
            .get_arguments()
            .find(|a| a.get_id().as_str() == id && a.get_long().is_some() && id != "config")
            .ok_or_else(|| Err(invalid(format!("{}: unknown config key {key:?}", path.display()))))?;
        if leaf.value_source(&id) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = format!("--{}", arg.get_long().unwrap());
        match value {
            serde_json::Value::Bool(true) => extra.push(flag.into()),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::Number(n) => extra.extend([flag.into(), n.to_string().into()]),
            serde_json::Value::String(s) => extra.extend([flag.into(), s.into()]),
            _ => return Err(Err(invalid(format!("{}: config key {key:?} must be a scalar", path.display())))),
        }
    }
    let full: Vec<OsString> = argv.iter().cloned().chain(extra).collect();
    let matches = cmd.try_get_matches_from(full).map_err(Ok)?;
    Cli::from_arg_matches(&matches).map_err(Ok)
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args(argv: &[OsString]) -> ExitCode {
    let cli = match parse_args(argv) {
        Ok(cli) => cli,
        Err(Ok(e)) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs a parsed command.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(0) => return Err(invalid("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(invalid)?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let mut out = OutDir::create(&cli.out)?;
    match &cli.command {
        Command::Gen(g) => cmd_gen(g, &mut out)?,
        Command::Topo(a) => cmd_topo(a, cli.seed, &mut out)?,
        Command::Gpe(GpeCommand::Run(a)) => cmd_gpe(a, &mut out)?,
        Command::Coarse(a) => cmd_coarse(a, &mut out)?,
    }
    out.finish()
}

/// Files written by one invocation.
struct OutDir {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.into(), source })?;
        Ok(OutDir { dir: dir.into(), files: Vec::new() })
    }

    fn path(&mut self, rel: &str) -> Result<PathBuf, CliError> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|source| IoError::Io { path: parent.into(), source })?;
        }
        self.files.push(PathBuf::from(rel));
        Ok(p)
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let p = self.path(rel)?;
        Ok(io::write_json(&p, value)?)
    }

    fn text(&mut self, rel: &str, s: &str) -> Result<(), CliError> {
        let p = self.path(rel)?;
        fs::write(&p, s).map_err(|source| IoError::Io { path: p, source })?;
        Ok(())
    }

    fn filaments(&mut self, rel: &str, f: &[Filament]) -> Result<(), CliError> {
        let p = self.path(rel)?;
        Ok(io::write_filaments(&p, f)?)
    }

    fn finish(self) -> Result<(), CliError> {
        io::write_manifest(&self.dir, &self.files)?;
        Ok(())
    }
}

fn cmd_gen(g: &GenCommand, out: &mut OutDir) -> Result<(), CliError> {
    let (name, filaments) = match g {
        GenCommand::Trefoil(a) => {
            let k = make_torus_knot(&TorusKnotParams { p: a.p, q: a.q, r0: a.r0, a: a.a, n_points: a.n }).map_err(invalid)?;
            let k = if a.no_resample { k } else { resample_arclength(&k, a.n).map_err(invalid)? };
            ("trefoil", vec![k])
        }
        GenCommand::Circle(a) => ("circle", vec![make_circle(a.center, a.radius, a.normal, a.n).map_err(invalid)?]),
        GenCommand::HopfRings(a) => ("hopf-rings", hopf_rings(a.radius, a.n).map_err(invalid)?.to_vec()),
        GenCommand::HopfBundles(a) => {
            let mut v = Vec::new();
            for ring in hopf_rings(a.radius, a.n).map_err(invalid)? {
                v.extend(make_bundle(&ring, a.satellites, a.offset).map_err(invalid)?);
            }
            let v = v.into_iter().enumerate().map(|(i, f)| f.with_id(i as i64)).collect();
            ("hopf-bundles", v)
        }
    };
    let rel = format!("{name}.json");
    out.filaments(&rel, &filaments)?;
    let nodes: usize = filaments.iter().map(|f| f.len()).sum();
    println!("{}: {} filaments, {} nodes", out.dir.join(&rel).display(), filaments.len(), nodes);
    Ok(())
}

/// Smooth framing: `winding` turns plus three Fourier modes with random
/// amplitudes below one radian.
pub fn random_framing(f: &Filament, rng: &mut ChaCha8Rng, epsilon: f64) -> Result<Framing, TopologyError> {
    let frame = frenet(f);
    let wind = rng.gen_range(-3i64..=3);
    let modes: Vec<(f64, f64)> = (1..=3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let theta = frame
        .sigma
        .iter()
        .map(|s| {
            let x = s / frame.length;
            let tau = std::f64::consts::TAU;
            tau * wind as f64 * x
                + modes.iter().enumerate().map(|(m, (a, ph))| a * (tau * (m + 1) as f64 * x + ph).sin()).sum::<f64>()
        })
        .collect();
    Framing::from_angles(f, frame, theta, epsilon)
}

#[derive(Debug, Serialize)]
struct TopoOutput<'a> {
    input: String,
    framing: FramingChoice,
    seed: u64,
    epsilon: Vec<f64>,
    winding: Vec<i64>,
    #[serde(flatten)]
    report: &'a HelicityReport,
    helicity_tol: f64,
    lk_sum: i64,
    sl_sum: i64,
    lk_plus_sl: i64,
}

fn cmd_topo(a: &TopoArgs, seed: u64, out: &mut OutDir) -> Result<(), CliError> {
    if !(a.integer_tol > 0.0 && a.helicity_tol > 0.0 && a.proximity_factor > 0.0) {
        return Err(invalid("tolerances must be positive"));
    }
    let filaments = io::read_filaments(&a.file)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut framings = Vec::with_capacity(filaments.len());
    for (i, f) in filaments.iter().enumerate() {
        let others: Vec<&Filament> = filaments.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, o)| o).collect();
        let eps = match a.epsilon {
            Some(e) => e,
            None => default_epsilon(f, &frenet(f), &others),
        };
        let fr = match a.framing {
            FramingChoice::Frenet => Framing::frenet(f, eps)?,
            FramingChoice::Winding(k) => Framing::winding(f, k, eps)?,
            FramingChoice::Random => random_framing(f, &mut rng, eps)?,
            FramingChoice::Seifert => seifert_framing(&filaments, i, eps, a.phi_ref).map_err(|e| match e {
                helicity_core::FieldError::Topology(t) => CliError::from(t),
                other => invalid(other),
            })?,
        };
        framings.push(fr);
    }
    let tol = Tolerances { integer: a.integer_tol, proximity_factor: a.proximity_factor };
    let report = assemble_helicity(&filaments, &framings, &tol)?;
    let n = filaments.len();
    let lk_sum: i64 = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| report.lk[i][j]).sum();
    let sl_sum: i64 = report.sl.iter().sum();
    let output = TopoOutput {
        input: a.file.display().to_string(),
        framing: a.framing,
        seed,
        epsilon: framings.iter().map(|f| f.epsilon()).collect(),
        winding: framings.iter().map(|f| f.winding_number()).collect(),
        report: &report,
        helicity_tol: a.helicity_tol,
        lk_sum,
        sl_sum,
        lk_plus_sl: report.lk_plus_sl(),
    };
    out.json("report.json", &output)?;
    println!("H = {:.6e}  lk_sum = {lk_sum}  sl_sum = {sl_sum}  lk+sl = {}", report.total, report.lk_plus_sl());
    report.check_integrality()?;
    if a.framing == FramingChoice::Seifert && !(report.total.abs() < a.helicity_tol) {
        return Err(CliError::Tolerance(format!(
            "|H| = {:.3e} with the constant-phase framing exceeds {:.1e}",
            report.total.abs(),
            a.helicity_tol
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RoundTrip {
    lines: usize,
    filaments: usize,
    max_hausdorff_cells: f64,
    lk_sum_input: i64,
    lk_sum_detected: i64,
    hausdorff_tol_cells: f64,
    pass: bool,
}

/// Detected lines of the initial snapshot against the imprinted filaments.
fn round_trip(input: &[Filament], snap: &Snapshot, spacing: f64, box_len: [f64; 3], tol: f64) -> RoundTrip {
    let mut worst: f64 = 0.0;
    for f in input {
        let d = snap.filaments.iter().map(|l| hausdorff_distance(f, l)).fold(f64::INFINITY, f64::min);
        worst = worst.max(d / spacing);
    }
    let lk = lk_matrix(input, box_len);
    let n = input.len();
    let mut lk_sum_input = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            lk_sum_input += lk[i][j] * (input[i].gamma().signum() * input[j].gamma().signum()) as i64;
        }
    }
    let pass = snap.filaments.len() == n && worst < tol && lk_sum_input == snap.lk_sum;
    RoundTrip {
        lines: snap.filaments.len(),
        filaments: n,
        max_hausdorff_cells: worst,
        lk_sum_input,
        lk_sum_detected: snap.lk_sum,
        hausdorff_tol_cells: tol,
        pass,
    }
}

#[derive(Debug, Serialize)]
struct SnapshotSummary {
    step: usize,
    t: f64,
    lines: usize,
    total_length: f64,
    lk_sum: i64,
}

#[derive(Debug, Serialize)]
struct RunOutput<'a> {
    args: &'a GpeRunArgs,
    scene: Scene,
    config: GpeConfig,
    stability_limit: f64,
    steps: usize,
    norm_drift: f64,
    energy_drift: f64,
    round_trip: RoundTrip,
    snapshots: Vec<SnapshotSummary>,
}

fn cmd_gpe(a: &GpeRunArgs, out: &mut OutDir) -> Result<(), CliError> {
    let box_len = a.grid as f64 * a.dx;
    let scene = match &a.filaments {
        Some(path) => Scene::Custom { filaments: io::read_filaments(path)? },
        None => {
            let name = a.scene.to_possible_value().expect("no skipped variants").get_name().to_string();
            let mut s = Scene::named(&name, box_len, a.dx)?;
            match &mut s {
                Scene::HopfSingle { radius } | Scene::Ring { radius } => {
                    *radius = a.radius.unwrap_or(*radius);
                }
                Scene::HopfBundles { radius, satellites, offset } => {
                    *radius = a.radius.unwrap_or(*radius);
                    *satellites = a.satellites.unwrap_or(*satellites);
                    *offset = a.offset.unwrap_or(*offset);
                }
                Scene::Custom { .. } => {}
            }
            s
        }
    };
    let order = SplitOrder::from_int(a.order).ok_or_else(|| invalid(format!("--order must be 2 or 4, got {}", a.order)))?;
    let t_end = match a.steps {
        Some(n) => n as f64 * a.dt,
        None => a.t_end,
    };
    let config = GpeConfig { dt: a.dt, t_end, output_stride: a.stride, order, dealias: a.dealias.0 };
    let input = scene.filaments(a.dx)?;
    let steps = config.steps();

    let mut snaps_out = Vec::new();
    let mut write_err: Option<CliError> = None;
    let snaps = run_experiment(&scene, a.grid, a.dx, &config, |snap: &Snapshot, field: &ComplexField3D| {
        if write_err.is_some() {
            return;
        }
        let res = (|| -> Result<(), CliError> {
            out.filaments(&format!("snapshots/filaments_{:06}.json", snap.step), &snap.filaments)?;
            let store = match a.fields {
                FieldOutput::All => true,
                FieldOutput::Final => snap.step == steps,
                FieldOutput::None => false,
            };
            if store {
                let p = out.path(&format!("snapshots/psi_{:06}.grid", snap.step))?;
                io::write_complex_field(&p, field)?;
            }
            Ok(())
        })();
        if let Err(e) = res {
            write_err = Some(e);
        }
        snaps_out.push(SnapshotSummary {
            step: snap.step,
            t: snap.t,
            lines: snap.filaments.len(),
            total_length: snap.total_length,
            lk_sum: snap.lk_sum,
        });
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }

    let rows: Vec<DiagnosticsRow> = snaps
        .iter()
        .map(|s| DiagnosticsRow { t: s.t, norm: s.norm, energy: s.energy, total_length: s.total_length, lk_sum: s.lk_sum })
        .collect();
    out.text("diagnostics.csv", &io::diagnostics_csv(&rows))?;
    let (first, last) = (&snaps[0], snaps.last().expect("at least the initial snapshot"));
    let rt = round_trip(&input, first, a.dx, [box_len; 3], a.hausdorff_tol);
    let rt_pass = rt.pass;
    let summary = RunOutput {
        args: a,
        scene,
        config,
        stability_limit: config.stability_limit(a.dx),
        steps,
        norm_drift: (last.norm - first.norm) / first.norm,
        energy_drift: (last.energy - first.energy) / first.energy,
        round_trip: rt,
        snapshots: snaps_out,
    };
    out.json("run.json", &summary)?;
    for s in &summary.snapshots {
        println!("t = {:8.3}  lines = {:3}  length = {:10.4}  lk_sum = {}", s.t, s.lines, s.total_length, s.lk_sum);
    }
    if steps == 0 && !rt_pass {
        return Err(CliError::Tolerance(format!(
            "imprint/detect round trip failed: {} lines for {} filaments, Hausdorff {:.3} cells, Lk sum {} vs {}",
            summary.round_trip.lines,
            summary.round_trip.filaments,
            summary.round_trip.max_hausdorff_cells,
            summary.round_trip.lk_sum_detected,
            summary.round_trip.lk_sum_input
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CoarseOutput<'a> {
    args: &'a CoarseArgs,
    kernel_width: f64,
    spacing: f64,
    margin: f64,
    shape: [usize; 3],
    h_cl: f64,
    oracle: f64,
    /// (i, j, Lk) for every linked pair.
    links: Vec<(usize, usize, i64)>,
    relative_error: f64,
    tol: f64,
    pass: bool,
}

fn cmd_coarse(a: &CoarseArgs, out: &mut OutDir) -> Result<(), CliError> {
    let filaments = io::read_filaments(&a.file)?;
    let width = match a.kernel_width {
        Some(w) => w,
        None if filaments.is_empty() => 1.0,
        None => {
            let mean = filaments.iter().map(|f| f.polygon_length()).sum::<f64>() / filaments.len() as f64;
            mean / std::f64::consts::TAU / 8.0
        }
    };
    let spacing = a.spacing.unwrap_or(0.5 * width);
    let margin = a.margin.unwrap_or(4.0 * width);
    if !(width > 0.0 && spacing > 0.0 && margin >= 0.0 && a.tol > 0.0) {
        return Err(invalid("kernel width, spacing and tolerance must be positive"));
    }
    let spec = covering_grid(&filaments, margin, spacing);
    let omega = coarse_vorticity(&filaments, &spec, width).map_err(invalid)?;
    let v = coarse_velocity(&filaments, &omega);
    let h_cl = quasiclassical_helicity(&omega, &v).map_err(invalid)?;

    let mut links = Vec::new();
    let mut oracle = 0.0;
    for i in 0..filaments.len() {
        for j in (i + 1)..filaments.len() {
            let lk = linking_number_polygon(&filaments[i], &filaments[j]).rounded;
            if lk != 0 {
                links.push((i, j, lk));
            }
            oracle += 2.0 * filaments[i].gamma() * filaments[j].gamma() * lk as f64;
        }
    }
    let scale = filaments.iter().map(|f| f.gamma() * f.gamma()).fold(oracle.abs(), f64::max).max(f64::MIN_POSITIVE);
    let relative_error = (h_cl - oracle).abs() / scale;
    let pass = relative_error <= a.tol;
    if a.write_grids {
        let p = out.path("omega.grid")?;
        io::write_vector_grid(&p, &omega.as_vector_grid())?;
        let p = out.path("velocity.grid")?;
        io::write_vector_grid(&p, &v)?;
    }
    let output = CoarseOutput {
        args: a,
        kernel_width: width,
        spacing,
        margin,
        shape: spec.shape,
        h_cl,
        oracle,
        links,
        relative_error,
        tol: a.tol,
        pass,
    };
    out.json("coarse.json", &output)?;
    println!("H_cl = {h_cl:.6}  oracle = {oracle:.6}  relative error = {relative_error:.3e}");
    if !pass {
        return Err(CliError::Tolerance(format!("H_cl = {h_cl:.6} is not within {} of {oracle}", a.tol)));
    }
    Ok(())
}
