//! Single entry point over the library: order predicates, shadow
//! projections, curtain couplings, peacock experiments, and pinned
//! reproductions. Results are JSON (or CSV where noted) on stdout or
//! `--out`; errors are machine-readable JSON on stderr with exit code 2
//! for domain/feasibility/schema problems and 1 for internal ones.

mod reproduce;
mod scenario;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curtain_core::curtain::{self, CurtainError};
use curtain_core::json::{self, CouplingLiteral, MeasureLiteral};
use curtain_core::measure::MeasureError;
use curtain_core::orders::{self, OrderRelation};
use curtain_core::peacock::{
    chain_compose, integrate_semigroup, jump_statistics, markov_defect, sample_paths, Partition,
    Peacock, PeacockError,
};
use curtain_core::shadow::{self, ShadowError};
use curtain_core::Measure;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "curtain", version, about = "Shadow projections, curtain couplings and peacocks")]
struct Cli {
    /// Human-readable progress on stdout in addition to the data outputs.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide one of the seven order relations between two measures.
    Order(OrderArgs),
    /// Shadow projection of one measure into another.
    Shadow(ShadowArgs),
    /// Left-curtain coupling between two measures in convex order.
    Curtain(CurtainArgs),
    /// Peacock experiments: simulate, converge, defect.
    #[command(subcommand)]
    Peacock(PeacockCommand),
    /// Re-run a pinned experiment and print pass/fail per check.
    Reproduce { name: String },
}

#[derive(Args)]
struct OrderArgs {
    /// plus | sto | convex | cp | ps | cs | cps
    #[arg(long)]
    relation: String,
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShadowArgs {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    /// Refinement tolerance for non-atomic sources.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Write the per-atom trace (atomic sources only).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurtainArgs {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    /// Dyadic atomization level for non-atomic sources.
    #[arg(long)]
    atomize: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PeacockCommand {
    /// Sample piecewise-constant martingale paths; CSV, one row per path.
    Simulate(SimulateArgs),
    /// Compare composed chains against the limit semigroup across meshes.
    Converge(ConvergeArgs),
    /// Markov-composition defect across a split time.
    Defect(DefectArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// uniform | threepoint | stocking | curves FILE | grid FILE
    #[arg(long, num_args = 1..=2)]
    scenario: Vec<String>,
    #[arg(long)]
    mesh: f64,
    #[arg(long)]
    paths: usize,
    #[arg(long)]
    seed: u64,
    /// Stocked-density approximation level.
    #[arg(long, default_value_t = 64)]
    level: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also dump jump times as CSV.
    #[arg(long)]
    jumps: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, num_args = 1..=2)]
    scenario: Vec<String>,
    /// Comma-separated mesh list, e.g. 1e-1,1e-2,1e-3.
    #[arg(long)]
    meshes: String,
    #[arg(long, default_value_t = 64)]
    level: usize,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DefectArgs {
    #[arg(long, num_args = 1..=2)]
    scenario: Vec<String>,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 64)]
    level: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct CliError {
    kind: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    atom_index: Option<usize>,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> CliError {
        CliError { kind, message: message.into(), atom_index: None }
    }

    pub fn schema(message: impl Into<String>) -> CliError {
        CliError::new("schema", message)
    }

    pub fn domain(message: impl Into<String>) -> CliError {
        CliError::new("domain", message)
    }

    pub fn io(err: std::io::Error) -> CliError {
        CliError::new("io", err.to_string())
    }

    fn exit_code(&self) -> u8 {
        if self.kind == "internal" {
            1
        } else {
            2
        }
    }
}

impl From<ShadowError> for CliError {
    fn from(e: ShadowError) -> CliError {
        let atom_index = match &e {
            ShadowError::Infeasible { atom_index, .. }
            | ShadowError::InsufficientMass { atom_index, .. } => *atom_index,
            _ => None,
        };
        let kind = match &e {
            ShadowError::Infeasible { .. } | ShadowError::InsufficientMass { .. } => "feasibility",
            _ => "domain",
        };
        CliError { kind, message: e.to_string(), atom_index }
    }
}

impl From<CurtainError> for CliError {
    fn from(e: CurtainError) -> CliError {
        match e {
            CurtainError::Shadow(s) => s.into(),
            other => CliError::domain(other.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> CliError {
        CliError::domain(e.to_string())
    }
}

impl From<PeacockError> for CliError {
    fn from(e: PeacockError) -> CliError {
        match e {
            PeacockError::Curtain(c) => c.into(),
            other => CliError::domain(other.to_string()),
        }
    }
}

impl From<json::JsonError> for CliError {
    fn from(e: json::JsonError) -> CliError {
        CliError::schema(e.to_string())
    }
}

fn read_measure(path: &PathBuf) -> Result<Measure, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io)?;
    Ok(json::measure_from_json(&text)?)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(CliError::io),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct OrderReport {
    holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<MeasureLiteral>,
}

fn cmd_order(args: &OrderArgs) -> Result<(), CliError> {
    let relation = OrderRelation::parse(&args.relation)
        .ok_or_else(|| CliError::schema(format!("unknown relation '{}'", args.relation)))?;
    let mu = read_measure(&args.mu)?;
    let nu = read_measure(&args.nu)?;
    let (holds, witness) = orders::leq_composite(relation, &mu, &nu);
    let report = OrderReport {
        holds,
        witness: witness.map(|w| MeasureLiteral::from_measure(&w)),
    };
    emit(&args.out, &serde_json::to_string_pretty(&report).expect("serializable"))
}

#[derive(Serialize)]
struct TraceStepReport {
    x: f64,
    alpha: f64,
    increment: Vec<(f64, f64)>,
    shadow: MeasureLiteral,
}

fn cmd_shadow(args: &ShadowArgs) -> Result<(), CliError> {
    let mu = read_measure(&args.mu)?;
    let nu = read_measure(&args.nu)?;
    let result = if mu.is_atomic() {
        let (s, trace) = shadow::shadow_atomic(&mu, &nu)?;
        if let Some(path) = &args.trace {
            let steps: Vec<TraceStepReport> = trace
                .steps
                .iter()
                .map(|st| TraceStepReport {
                    x: st.x,
                    alpha: st.alpha,
                    increment: st.increment.intervals().to_vec(),
                    shadow: MeasureLiteral::from_measure(&st.shadow),
                })
                .collect();
            let text = serde_json::to_string_pretty(&steps).expect("serializable");
            std::fs::write(path, text).map_err(CliError::io)?;
        }
        s
    } else {
        if args.trace.is_some() {
            return Err(CliError::domain("--trace requires a purely atomic source"));
        }
        shadow::shadow_general(&mu, &nu, args.tol)?
    };
    emit(&args.out, &json::measure_to_json(&result))
}

fn cmd_curtain(args: &CurtainArgs) -> Result<(), CliError> {
    let mu = read_measure(&args.mu)?;
    let nu = read_measure(&args.nu)?;
    let pi = match (mu.is_atomic(), args.atomize) {
        (true, None) => curtain::curtain_atomic(&mu, &nu)?,
        (_, Some(k)) => curtain::curtain_general(&mu, &nu, k)?,
        (false, None) => curtain::curtain_general(&mu, &nu, 10)?,
    };
    let lit = CouplingLiteral::from_coupling(&pi);
    emit(&args.out, &serde_json::to_string_pretty(&lit).expect("serializable"))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let p = scenario::load(&args.scenario, args.level)?;
    if !(args.mesh > 0.0) {
        return Err(CliError::domain(format!("mesh must be positive, got {}", args.mesh)));
    }
    let part = match &p {
        Peacock::Grid { times, .. } => Partition::from_times(times.clone())?,
        _ => Partition::uniform(p.domain(), args.mesh)?,
    };
    let ps = sample_paths(&p, &part, args.paths, args.seed)?;
    let mut csv = String::new();
    let labels: Vec<String> = (0..part.times().len()).map(|k| format!("t_{k}")).collect();
    writeln!(csv, "{}", labels.join(",")).unwrap();
    for row in &ps.values {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(csv, "{}", cells.join(",")).unwrap();
    }
    emit(&args.out, csv.trim_end())?;
    if let Some(path) = &args.jumps {
        let stats = jump_statistics(&p, &ps)?;
        let mut jc = String::from("jump_time\n");
        for t in &stats.jump_times {
            writeln!(jc, "{t}").unwrap();
        }
        std::fs::write(path, jc).map_err(CliError::io)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergeConfig {
    meshes: Vec<f64>,
    scenario: Vec<String>,
}

#[derive(Serialize)]
struct ConvergePoint {
    mesh: f64,
    sup_error: f64,
}

#[derive(Serialize)]
struct ConvergeReport {
    config: ConvergeConfig,
    series: Vec<ConvergePoint>,
    version: &'static str,
}

fn cmd_converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let p = scenario::load(&args.scenario, args.level)?;
    if !p.is_finite() {
        return Err(CliError::domain("converge needs a finite-state scenario"));
    }
    let meshes: Vec<f64> = args
        .meshes
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::schema(e.to_string())))
        .collect::<Result<_, _>>()?;
    let (lo, hi) = p.domain();
    let mut series = Vec::new();
    for &mesh in &meshes {
        if !(mesh > 0.0) {
            return Err(CliError::domain(format!("mesh must be positive, got {mesh}")));
        }
        let part = Partition::uniform((lo, hi), mesh)?;
        let chain = chain_compose(&p, &part)?;
        let ode = integrate_semigroup(&p, lo, hi, mesh / 4.0)?;
        series.push(ConvergePoint { mesh, sup_error: chain.inf_norm_diff(&ode) });
    }
    let content = if args.format == "csv" {
        let mut csv = String::from("mesh,sup_error\n");
        for pt in &series {
            writeln!(csv, "{},{}", pt.mesh, pt.sup_error).unwrap();
        }
        csv.trim_end().to_string()
    } else {
        let report = ConvergeReport {
            config: ConvergeConfig { meshes, scenario: args.scenario.clone() },
            series,
            version: env!("CARGO_PKG_VERSION"),
        };
        serde_json::to_string_pretty(&report).expect("serializable")
    };
    emit(&args.out, &content)
}

#[derive(Serialize)]
struct DefectReport {
    defect: f64,
    h: f64,
    t: f64,
    version: &'static str,
}

fn cmd_defect(args: &DefectArgs) -> Result<(), CliError> {
    let p = scenario::load(&args.scenario, args.level)?;
    let defect = markov_defect(&p, args.t, args.h)?;
    let report = DefectReport { defect, h: args.h, t: args.t, version: env!("CARGO_PKG_VERSION") };
    emit(&args.out, &serde_json::to_string_pretty(&report).expect("serializable"))
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    match &cli.command {
        Command::Order(a) => cmd_order(a).map(|_| true),
        Command::Shadow(a) => cmd_shadow(a).map(|_| true),
        Command::Curtain(a) => cmd_curtain(a).map(|_| true),
        Command::Peacock(PeacockCommand::Simulate(a)) => cmd_simulate(a).map(|_| true),
        Command::Peacock(PeacockCommand::Converge(a)) => cmd_converge(a).map(|_| true),
        Command::Peacock(PeacockCommand::Defect(a)) => cmd_defect(a).map(|_| true),
        Command::Reproduce { name } => reproduce::run(name).ok_or_else(|| {
            CliError::schema(format!(
                "unknown fixture '{name}'; expected one of {}",
                reproduce::FIXTURES.join(", ")
            ))
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.verbose {
        println!("curtain {}", env!("CARGO_PKG_VERSION"));
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
            ExitCode::from(e.exit_code())
        }
    }
}
