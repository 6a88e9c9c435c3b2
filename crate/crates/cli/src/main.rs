use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;
mod sweep_csv;

/// Logit equilibria, Nash curves and Monte Carlo play for the iterated
/// Prisoner's Dilemma in memory-one Markov strategies.
///
/// Every subcommand writes its results to files and a `<file>.manifest.json`
/// sidecar. Failures are reported as JSON on stderr with a nonzero exit code.
#[derive(Parser, Debug)]
#[command(name = "pdqre", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace both Nash curves over a gamma grid (CSV, one row per gamma).
    NashCurve(NashCurveArgs),
    /// Solve for logit equilibria over a range of rationality values (CSV + JSON report).
    QreSweep(QreSweepArgs),
    /// Evaluate the fixed-point objective on a mesh of the unit square (CSV).
    ObjectiveGrid(ObjectiveGridArgs),
    /// Play the repeated game between two Markov strategies (log CSV, summary JSON on stdout).
    Simulate(SimulateArgs),
    /// Place the experiment table above or below the smooth equilibrium branch (JSON).
    Classify(ClassifyArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// Record the wall-clock time in the manifest (breaks byte-identical reruns).
    #[arg(long)]
    timestamp: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum CurveChoice {
    Both,
    Printed,
    Stationarity,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum NashCurveFlag {
    Printed,
    Stationarity,
}

impl From<NashCurveFlag> for pdqre::nash::NashCurve {
    fn from(c: NashCurveFlag) -> Self {
        match c {
            NashCurveFlag::Printed => Self::Printed,
            NashCurveFlag::Stationarity => Self::Stationarity,
        }
    }
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct NashCurveArgs {
    #[arg(long, default_value_t = 0.0)]
    gamma_start: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_end: f64,
    #[arg(long, default_value_t = 0.001)]
    gamma_step: f64,
    /// Do not add the alpha = 0 edge points gamma = 1/9 and gamma = 1 to the grid.
    #[arg(long)]
    no_anchors: bool,
    /// Which curve(s) to write.
    #[arg(long, value_enum, default_value_t = CurveChoice::Both)]
    curve: CurveChoice,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct SolverArgs {
    /// Starts per axis of the uniform start grid.
    #[arg(long, default_value_t = 21)]
    start_grid: usize,
    /// Objective below which a point is accepted as an equilibrium.
    #[arg(long, default_value_t = 1e-12)]
    accept_tol: f64,
    /// Max-norm distance under which solutions are merged.
    #[arg(long, default_value_t = 1e-4)]
    merge_tol: f64,
    /// Largest step linking points at consecutive lambda values.
    #[arg(long, default_value_t = 0.05)]
    continuity_tol: f64,
    /// Step factor of the damped fixed-point iteration.
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    /// Nash curve used for residuals, labels and intersections.
    #[arg(long, value_enum, default_value_t = NashCurveFlag::Stationarity)]
    nash_curve: NashCurveFlag,
    /// Points below this lambda are labeled smooth.
    #[arg(long, default_value_t = 5.0)]
    lambda_lo: f64,
    /// Points with max(alpha, gamma) below this are labeled defect.
    #[arg(long, default_value_t = 0.05)]
    defect_threshold: f64,
    /// Points with |Nash residual| below this are labeled near-nash.
    #[arg(long, default_value_t = 0.05)]
    near_nash_threshold: f64,
}

impl SolverArgs {
    fn config(&self) -> pdqre::qre::SolverConfig {
        pdqre::qre::SolverConfig {
            start_grid: self.start_grid,
            accept_tol: self.accept_tol,
            merge_tol: self.merge_tol,
            continuity_tol: self.continuity_tol,
            damping: self.damping,
            curve: self.nash_curve.into(),
            thresholds: pdqre::qre::BranchThresholds {
                lambda_lo: self.lambda_lo,
                defect: self.defect_threshold,
                near_nash: self.near_nash_threshold,
            },
            ..Default::default()
        }
    }
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct QreSweepArgs {
    #[arg(long, default_value_t = 0.0)]
    lambda_start: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda_end: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda_step: f64,
    /// Solve at this single value instead of the range.
    #[arg(long, conflicts_with_all = ["lambda_start", "lambda_end", "lambda_step"])]
    lambda: Option<f64>,
    /// JSON report path [default: <out> with extension `report.json`].
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct ObjectiveGridArgs {
    #[arg(long, default_value_t = 4.0)]
    lambda: f64,
    /// Nodes per axis.
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma_min: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_max: f64,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0.2)]
    alpha1: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma1: f64,
    /// [default: alpha1]
    #[arg(long)]
    alpha2: Option<f64>,
    /// [default: gamma1]
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First-round cooperation probability of player 1.
    #[arg(long, default_value_t = 0.5)]
    init1: f64,
    /// First-round cooperation probability of player 2.
    #[arg(long, default_value_t = 0.5)]
    init2: f64,
    /// Rounds dropped before long-run rates are computed.
    #[arg(long, default_value_t = pdqre::sim::DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Play a re-paired session of this many players, all using (alpha1, gamma1).
    #[arg(long)]
    group_size: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct ClassifyArgs {
    /// Experiment table [default: the bundled table].
    #[arg(long)]
    data: Option<PathBuf>,
    /// Sweep CSV from `qre-sweep` [default: solve lambda in [0, lambda-max], step 0.01].
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Upper rationality of the boundary branch.
    #[arg(long, default_value_t = pdqre::data::DEFAULT_LAMBDA_MAX)]
    lambda_max: f64,
    /// Also write per-record sides as CSV.
    #[arg(long)]
    records_csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let doc = serde_json::json!({ "error": { "kind": kind, "message": message } });
    let _ = writeln!(std::io::stderr(), "{doc}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail("usage", e.to_string().trim().to_string(), 2);
        }
    };
    let result = match &cli.command {
        Command::NashCurve(a) => commands::nash_curve(a),
        Command::QreSweep(a) => commands::qre_sweep(a),
        Command::ObjectiveGrid(a) => commands::objective_grid(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Classify(a) => commands::classify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(commands::error_kind(&e), format!("{e:#}"), 1),
    }
}
