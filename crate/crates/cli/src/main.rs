//! `modham`: wave-packet entropy, ball Hamiltonians and the invariant battery from the command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use modham::conformal::flow_geometric_tol;
use modham::entropy::{entropy_ball, radius_scan, scan_csv, EntropyReport};
use modham::field::{symplectic_form, CauchyData};
use modham::grid::{Ball, GridSpec};
use modham::io::{field_csv, to_json_string};
use modham::massive::{apply_k_tilde, apply_kmb_tol, quadratic_form_massive_tol, FormTerms};
use modham::oracle::{refinement_report, RefinementConfig};
use modham::tolerances::Tolerances;
use modham::verify::run_battery;
use modham::wavespec::{WaveSpec, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "modham", version, about = "Local modular Hamiltonians and wave-packet entropy for the free scalar field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "MODHAM_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropy of the wave in one ball.
    Entropy(EntropyArgs),
    /// Entropy over a list of radii.
    Scan(ScanArgs),
    /// Quadratic form of the ball generator and the generator applied to the wave.
    Hamiltonian(EntropyArgs),
    /// Geometric massless flow of ball-supported radial data.
    Flow(FlowArgs),
    /// Runs the invariant battery.
    Verify(VerifyArgs),
    /// Galerkin cross-check of the ball Hamiltonian.
    Oracle(OracleArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Wave-spec JSON file.
    #[arg(long)]
    wave: PathBuf,
    /// Mass override.
    #[arg(long)]
    m: Option<f64>,
    /// Radial grid extent override.
    #[arg(long)]
    rmax: Option<f64>,
    /// Radial point count override.
    #[arg(long)]
    nr: Option<usize>,
    /// Cartesian half-width override.
    #[arg(long = "L")]
    half_width: Option<f64>,
    /// Cartesian points per axis override.
    #[arg(long = "N")]
    points: Option<usize>,
    /// Tolerance override `name=value`, e.g. `supportLeak=1e-8`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
    /// Ball centre, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    /// Radii, comma separated.
    #[arg(long = "R", value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    common: Common,
    /// Flow parameter.
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Masses, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    m: Vec<f64>,
    /// Basis sizes, comma separated.
    #[arg(long = "n-basis", value_delimiter = ',', default_value = "12,24,48")]
    n_basis: Vec<usize>,
    #[arg(long, default_value_t = 24)]
    reference: usize,
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    #[arg(long, default_value_t = 8.0)]
    rmax: f64,
    #[arg(long, default_value_t = 2048)]
    nr: usize,
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Failure {
    Config(anyhow::Error),
    Compute(anyhow::Error),
}

impl From<modham::Error> for Failure {
    fn from(e: modham::Error) -> Self {
        match e {
            modham::Error::Config(_) => Failure::Config(e.into()),
            other => Failure::Compute(other.into()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn parse_tolerances(items: &[String]) -> Result<Tolerances, Failure> {
    let mut value = serde_json::to_value(Tolerances::default()).map_err(config)?;
    for item in items {
        let (name, raw) = item
            .split_once('=')
            .ok_or_else(|| config(anyhow::anyhow!("tolerance override `{item}` is not NAME=VALUE")))?;
        let v: f64 = raw.trim().parse().map_err(|_| config(anyhow::anyhow!("tolerance `{name}` is not a number")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(config(anyhow::anyhow!("tolerance `{name}` must be positive and finite")));
        }
        let map = value.as_object_mut().expect("tolerances serialize to an object");
        if !map.contains_key(name) {
            let known: Vec<&String> = map.keys().collect();
            return Err(config(anyhow::anyhow!("unknown tolerance `{name}`; known: {known:?}")));
        }
        map.insert(name.to_string(), serde_json::json!(v));
    }
    serde_json::from_value(value).map_err(config)
}

fn load_wave(c: &Common) -> Result<(CauchyData, Tolerances), Failure> {
    let text = fs::read_to_string(&c.wave)
        .with_context(|| format!("reading wave spec {}", c.wave.display()))
        .map_err(config)?;
    let mut spec = WaveSpec::from_json(&text)?;
    match &mut spec.grid {
        GridSpec::Radial { r_max, n } => {
            if c.half_width.is_some() || c.points.is_some() {
                return Err(config(anyhow::anyhow!("--L/--N apply to cartesian-periodic grids")));
            }
            *r_max = c.rmax.unwrap_or(*r_max);
            *n = c.nr.unwrap_or(*n);
        }
        GridSpec::Cartesian { l, n, .. } => {
            if c.rmax.is_some() || c.nr.is_some() {
                return Err(config(anyhow::anyhow!("--rmax/--nr apply to radial3d grids")));
            }
            *l = c.half_width.unwrap_or(*l);
            *n = c.points.unwrap_or(*n);
        }
    }
    if let Some(m) = c.m {
        spec.m = m;
    }
    let tol = parse_tolerances(&c.tol)?;
    Ok((spec.build()?, tol))
}

fn ball_for(grid: &GridSpec, radius: f64, center: &Option<Vec<f64>>) -> Result<Ball, Failure> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(config(anyhow::anyhow!("ball radius must be positive, got {radius}")));
    }
    let center = center.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
    if center.len() != grid.dim() {
        return Err(config(anyhow::anyhow!("center needs {} coordinates", grid.dim())));
    }
    if grid.is_radial() && center.iter().any(|&x| x != 0.0) {
        return Err(config(anyhow::anyhow!("radial3d balls are centred at the origin")));
    }
    let ball = Ball::new(radius, center);
    grid.check_ball(&ball).map_err(|e| config(anyhow::Error::from(e)))?;
    Ok(ball)
}

/// Writes through a temporary file in the target directory, then renames.
fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Compute(e.into()))
        }
        Some(path) => write_atomic(path, text).map_err(Failure::Compute),
    }
}

fn write_atomic(path: &Path, text: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Versioned<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn json<T: Serialize>(body: T) -> Result<String, Failure> {
    Ok(to_json_string(&Versioned { schema_version: SCHEMA_VERSION, body })?)
}

fn cmd_entropy(a: EntropyArgs) -> Outcome {
    let (phi, _) = load_wave(&a.common)?;
    let ball = ball_for(&phi.grid, a.radius, &a.center)?;
    let rep = entropy_ball(&phi, &ball, a.t)?;
    let text = match a.format {
        Format::Json => json(&rep)?,
        Format::Csv => scan_csv(std::slice::from_ref(&rep)),
    };
    emit(&a.common.output, &text)?;
    Ok(true)
}

#[derive(Serialize)]
struct ScanBody<'a> {
    reports: &'a [EntropyReport],
}

fn cmd_scan(a: ScanArgs) -> Outcome {
    let (phi, _) = load_wave(&a.common)?;
    let center = a.center.clone().unwrap_or_else(|| vec![0.0; phi.grid.dim()]);
    for &r in &a.radii {
        ball_for(&phi.grid, r, &Some(center.clone()))?;
    }
    let reports = radius_scan(&phi, &center, a.t, &a.radii)?;
    let text = match a.format {
        Format::Csv => scan_csv(&reports),
        Format::Json => json(ScanBody { reports: &reports })?,
    };
    emit(&a.common.output, &text)?;
    Ok(true)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HamiltonianBody {
    #[serde(rename = "R")]
    radius: f64,
    center: Vec<f64>,
    m: f64,
    form: FormTerms,
    /// `β(Φ, K̃Φ)`.
    beta_form: f64,
    /// `2π ×` the form, the entropy of the wave in the ball.
    entropy: f64,
}

fn cmd_hamiltonian(a: EntropyArgs) -> Outcome {
    let (phi, tol) = load_wave(&a.common)?;
    let ball = ball_for(&phi.grid, a.radius, &a.center)?;
    if a.t != 0.0 {
        return Err(config(anyhow::anyhow!("hamiltonian acts on time-zero data; --t is not accepted")));
    }
    match a.format {
        Format::Csv => emit(&a.common.output, &field_csv(&apply_kmb_tol(&phi, &ball, &tol)?))?,
        Format::Json => {
            let form = quadratic_form_massive_tol(&phi, &ball, &tol)?;
            let beta_form = symplectic_form(&phi, &apply_k_tilde(&phi, &ball)?)?;
            let body = HamiltonianBody {
                radius: ball.radius,
                center: ball.center.clone(),
                m: phi.m,
                form,
                beta_form,
                entropy: 2.0 * std::f64::consts::PI * form.total,
            };
            emit(&a.common.output, &json(body)?)?;
        }
    }
    Ok(true)
}

fn cmd_flow(a: FlowArgs) -> Outcome {
    let (phi, tol) = load_wave(&a.common)?;
    let res = flow_geometric_tol(&phi, a.s, &tol)?;
    let text = match a.format {
        Format::Json => json(&res)?,
        Format::Csv => field_csv(&res.data),
    };
    emit(&a.common.output, &text)?;
    Ok(true)
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let rep = run_battery(a.seed);
    let text = match a.format {
        Some(Format::Json) => to_json_string(&rep)?,
        Some(Format::Csv) => {
            let rows: Vec<Vec<String>> = rep
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.module.clone(),
                        format!("\"{}\"", c.name),
                        modham::io::format_float(c.measured),
                        format!("{:?}", c.bound),
                        modham::io::format_float(c.limit),
                        c.passed.to_string(),
                    ]
                })
                .collect();
            modham::io::csv_table(&["module", "check", "measured", "bound", "limit", "passed"], &rows)
        }
        None => rep.table(),
    };
    emit(&a.output, &text)?;
    Ok(rep.passed)
}

fn cmd_oracle(a: OracleArgs) -> Outcome {
    let tol = parse_tolerances(&a.tol)?;
    let cfg = RefinementConfig {
        grid: GridSpec::radial(a.rmax, a.nr)?,
        ball_radius: 1.0,
        masses: a.m,
        n_basis: a.n_basis,
        reference_n_basis: a.reference,
        threshold: a.threshold,
    };
    if !cfg.n_basis.contains(&cfg.reference_n_basis) {
        return Err(config(anyhow::anyhow!("--reference must be one of --n-basis")));
    }
    let rep = refinement_report(&cfg, &tol)?;
    let passes = rep.passes();
    #[derive(Serialize)]
    struct Body<'a> {
        passes: bool,
        report: &'a modham::oracle::RefinementReport,
    }
    emit(&a.output, &json(Body { passes, report: &rep })?)?;
    Ok(passes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Entropy(a) => cmd_entropy(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Hamiltonian(a) => cmd_hamiltonian(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
