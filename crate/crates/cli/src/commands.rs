use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use pdqre::data::{self, BoundaryReport, PhaseMeans};
use pdqre::error::{DataError, GameError, QreError, SimError};
use pdqre::fmt::sig12;
use pdqre::game::{expected_payoff, stationary_state, MarkovStrategy, PayoffMatrix};
use pdqre::nash::{
    trace_eq4_curve, trace_stationarity_curve, uniform_grid, with_edge_anchors, CurveBranch,
    CurvePoint,
};
use pdqre::qre::{
    compare_curves, objective_grid as mesh, sweep_lambda, CurveComparison, Intersection,
    LabelTransition, RejectedMinimum, SolverConfig, SweepFailure,
};
use pdqre::sim::{self, Aggregation, MarkovEstimate, SimulationConfig};

use crate::manifest::{opt, to_json_bytes, RunManifest};
use crate::sweep_csv;
use crate::{
    ClassifyArgs, CurveChoice, NashCurveArgs, ObjectiveGridArgs, QreSweepArgs, SimulateArgs,
};

/// Bad flag values that clap cannot check on its own.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// Machine-readable error class for the stderr report.
pub fn error_kind(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if let Some(d) = cause.downcast_ref::<DataError>() {
            return match d {
                DataError::Parse { .. } => "parse",
                DataError::InsufficientSweep { .. } => "insufficient-sweep",
                DataError::Csv(_) => "csv",
                DataError::Io(_) => "io",
            };
        }
        if let Some(q) = cause.downcast_ref::<QreError>() {
            return match q {
                QreError::Game(_) => "game",
                QreError::InvalidLambda(_) => "invalid-lambda",
                QreError::NoSolution { .. } => "no-solution",
                QreError::UnsortedGrid => "invalid-grid",
            };
        }
        if cause.is::<GameError>() {
            return "game";
        }
        if cause.is::<SimError>() {
            return "simulation";
        }
        if cause.is::<InputError>() {
            return "invalid-input";
        }
        if cause.is::<csv::Error>() {
            return "csv";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "error"
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} is outside [0, 1]")))
    }
}

// ---------------------------------------------------------------- nash-curve

fn split(points: &[CurvePoint]) -> (Option<&CurvePoint>, Option<&CurvePoint>) {
    let low = points.iter().find(|p| p.branch == CurveBranch::Lower);
    let high = points.iter().find(|p| p.branch == CurveBranch::Upper);
    (low, high)
}

pub fn nash_curve(a: &NashCurveArgs) -> Result<()> {
    let mut grid = uniform_grid(a.gamma_start, a.gamma_end, a.gamma_step);
    if grid.is_empty() {
        return Err(invalid(format!(
            "empty gamma grid: start {}, end {}, step {}",
            a.gamma_start, a.gamma_end, a.gamma_step
        )));
    }
    check_unit("gamma-start", a.gamma_start)?;
    check_unit("gamma-end", a.gamma_end)?;
    if !a.no_anchors {
        grid = with_edge_anchors(&grid);
    }
    let m = PayoffMatrix::default();
    let eq4 = matches!(a.curve, CurveChoice::Both | CurveChoice::Printed);
    let stat = matches!(a.curve, CurveChoice::Both | CurveChoice::Stationarity);

    let mut header = vec!["gamma"];
    if eq4 {
        header.extend(["eq4_alpha_low", "eq4_alpha_high", "eq4_residual_low", "eq4_residual_high"]);
    }
    if stat {
        header.extend([
            "stationarity_alpha_low",
            "stationarity_alpha_high",
            "stationarity_residual_low",
            "stationarity_residual_high",
        ]);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for &g in &grid {
        let mut row = vec![sig12(g)];
        if eq4 {
            let pts = trace_eq4_curve(&m, &[g]);
            let (lo, hi) = split(&pts);
            row.extend([
                opt(lo.map(|p| p.alpha)),
                opt(hi.map(|p| p.alpha)),
                opt(lo.map(|p| p.eq4_residual)),
                opt(hi.map(|p| p.eq4_residual)),
            ]);
        }
        if stat {
            let pts = trace_stationarity_curve(&m, &[g]);
            let (lo, hi) = split(&pts);
            row.extend([
                opt(lo.map(|p| p.alpha)),
                opt(hi.map(|p| p.alpha)),
                opt(lo.and_then(|p| p.stationarity_residual)),
                opt(hi.and_then(|p| p.stationarity_residual)),
            ]);
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner()?;
    #[derive(Serialize)]
    struct Config<'a> {
        #[serde(flatten)]
        args: &'a NashCurveArgs,
        grid_size: usize,
    }
    let manifest = RunManifest::new(
        "nash-curve",
        &Config {
            args: a,
            grid_size: grid.len(),
        },
        a.common.timestamp,
    )?;
    manifest.write_with(&a.common.out, &bytes)
}

// ---------------------------------------------------------------- qre-sweep

#[derive(Serialize)]
struct PolylineSummary {
    id: usize,
    points: usize,
    lambda_start: f64,
    lambda_end: f64,
    start: [f64; 2],
    end: [f64; 2],
}

#[derive(Serialize)]
struct SweepReport {
    manifest: RunManifest,
    lambda_count: usize,
    point_count: usize,
    /// Onset of the defect-side local minimum of the objective.
    branch_transition_lambda: Option<f64>,
    /// Where plain descent from (0.5, 0.5) stops reaching an equilibrium.
    descent_transition_lambda: Option<f64>,
    first_intersection: Option<Intersection>,
    curve_comparison: CurveComparison,
    label_transitions: Vec<LabelTransition>,
    polylines: Vec<PolylineSummary>,
    no_solution: Vec<SweepFailure>,
    defect_minima: Vec<RejectedMinimum>,
    rejected_minima: usize,
}

fn default_report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

pub fn qre_sweep(a: &QreSweepArgs) -> Result<()> {
    let grid = match a.lambda {
        Some(l) => vec![l],
        None => uniform_grid(a.lambda_start, a.lambda_end, a.lambda_step),
    };
    if grid.is_empty() {
        return Err(invalid(format!(
            "empty lambda grid: start {}, end {}, step {}",
            a.lambda_start, a.lambda_end, a.lambda_step
        )));
    }
    let config: SolverConfig = a.solver.config();
    let sweep = sweep_lambda(&grid, &config)?;
    let comparison = compare_curves(&sweep, &config);
    let chosen = match config.curve {
        pdqre::nash::NashCurve::Stationarity => &comparison.stationarity,
        pdqre::nash::NashCurve::Printed => &comparison.printed,
    };
    #[derive(Serialize)]
    struct Config<'a> {
        args: &'a QreSweepArgs,
        solver: &'a SolverConfig,
    }
    let manifest = RunManifest::new(
        "qre-sweep",
        &Config {
            args: a,
            solver: &config,
        },
        a.common.timestamp,
    )?;
    let report = SweepReport {
        manifest: manifest.clone(),
        lambda_count: grid.len(),
        point_count: sweep.points.len(),
        branch_transition_lambda: sweep.defect_onset_lambda(),
        descent_transition_lambda: sweep.descent_transition_lambda(),
        first_intersection: chosen.first().copied(),
        label_transitions: sweep.label_transitions(),
        polylines: sweep
            .polylines
            .iter()
            .enumerate()
            .map(|(id, line)| {
                let (s, e) = (sweep.points[line[0]], sweep.points[line[line.len() - 1]]);
                PolylineSummary {
                    id,
                    points: line.len(),
                    lambda_start: s.lambda,
                    lambda_end: e.lambda,
                    start: s.coords(),
                    end: e.coords(),
                }
            })
            .collect(),
        no_solution: sweep.failures.clone(),
        defect_minima: sweep.defect_minima(),
        rejected_minima: sweep.rejected.len(),
        curve_comparison: comparison,
    };
    manifest.write_with(&a.common.out, &sweep_csv::to_csv(&sweep)?)?;
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| default_report_path(&a.common.out));
    manifest.write_with(&report_path, &to_json_bytes(&report)?)
}

// ---------------------------------------------------------------- objective-grid

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

pub fn objective_grid(a: &ObjectiveGridArgs) -> Result<()> {
    pdqre::qre::qre_objective(&PayoffMatrix::default(), a.lambda, 0.5, 0.5)?;
    for (name, v) in [
        ("alpha-min", a.alpha_min),
        ("alpha-max", a.alpha_max),
        ("gamma-min", a.gamma_min),
        ("gamma-max", a.gamma_max),
    ] {
        check_unit(name, v)?;
    }
    if a.alpha_min > a.alpha_max || a.gamma_min > a.gamma_max || a.points == 0 {
        return Err(invalid("mesh must have min <= max and at least one point per axis"));
    }
    let samples = mesh(
        &PayoffMatrix::default(),
        a.lambda,
        &axis(a.alpha_min, a.alpha_max, a.points),
        &axis(a.gamma_min, a.gamma_max, a.points),
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "gamma", "objective", "clamped"])?;
    for s in &samples {
        w.write_record([sig12(s.alpha), sig12(s.gamma), sig12(s.objective), s.clamped.to_string()])?;
    }
    RunManifest::new("objective-grid", a, a.common.timestamp)?.write_with(&a.common.out, &w.into_inner()?)
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct RateJson {
    successes: u64,
    trials: u64,
    value: Option<f64>,
}

#[derive(Serialize)]
struct EstimateJson {
    alpha: RateJson,
    gamma: RateJson,
}

impl From<MarkovEstimate> for EstimateJson {
    fn from(e: MarkovEstimate) -> Self {
        let r = |x: sim::RateEstimate| RateJson {
            successes: x.successes,
            trials: x.trials,
            value: x.value(),
        };
        Self {
            alpha: r(e.alpha),
            gamma: r(e.gamma),
        }
    }
}

#[derive(Serialize)]
struct PlayerSummary {
    alpha: f64,
    gamma: f64,
    cooperation_rate: Option<f64>,
    mean_payoff: Option<f64>,
    stationary_cooperation: Option<f64>,
    stationary_payoff: Option<f64>,
    estimate: EstimateJson,
}

#[derive(Serialize)]
struct SimSummary {
    generator: &'static str,
    seed: u64,
    rounds: usize,
    burn_in: usize,
    players: Vec<PlayerSummary>,
}

#[derive(Serialize)]
struct GroupSummary {
    generator: &'static str,
    seed: u64,
    rounds: usize,
    burn_in: usize,
    group_size: usize,
    alpha: f64,
    gamma: f64,
    cooperation_rate: Option<f64>,
    stationary_cooperation: Option<f64>,
    pooled_estimate: [Option<f64>; 2],
    mean_of_players_estimate: [Option<f64>; 2],
    players: Vec<EstimateJson>,
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let s1 = MarkovStrategy::new(a.alpha1, a.gamma1)?;
    let s2 = MarkovStrategy::new(a.alpha2.unwrap_or(a.alpha1), a.gamma2.unwrap_or(a.gamma1))?;
    let config = SimulationConfig::with_initial(a.rounds, a.seed, [a.init1, a.init2])?;
    let m = PayoffMatrix::default();
    let manifest = RunManifest::new("simulate", a, a.common.timestamp)?;

    if let Some(n) = a.group_size {
        let logs = sim::simulate_group(&vec![s1; n], &config)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["round", "player", "partner", "choice", "opponent_choice", "payoff"])?;
        let mv = |c: bool| if c { "C" } else { "D" };
        for t in 0..a.rounds {
            for (i, log) in logs.iter().enumerate() {
                w.write_record([
                    (t + 1).to_string(),
                    (i + 1).to_string(),
                    (log.partner[t] + 1).to_string(),
                    mv(log.own[t]).to_string(),
                    mv(log.opponent[t]).to_string(),
                    sig12(m.payoff(log.own[t], log.opponent[t])),
                ])?;
            }
        }
        manifest.write_with(&a.common.out, &w.into_inner()?)?;
        let estimates: Vec<MarkovEstimate> = logs.iter().map(|l| l.estimate()).collect();
        let tail: Vec<bool> = logs
            .iter()
            .flat_map(|l| l.own.iter().skip(a.burn_in).copied())
            .collect();
        let summary = GroupSummary {
            generator: sim::GENERATOR,
            seed: a.seed,
            rounds: a.rounds,
            burn_in: a.burn_in,
            group_size: n,
            alpha: s1.alpha(),
            gamma: s1.gamma(),
            cooperation_rate: (!tail.is_empty())
                .then(|| tail.iter().filter(|&&c| c).count() as f64 / tail.len() as f64),
            stationary_cooperation: stationary_state(&s1, &s1).ok().map(|s| s.p1),
            pooled_estimate: sim::aggregate_estimates(&estimates, Aggregation::Pooled),
            mean_of_players_estimate: sim::aggregate_estimates(&estimates, Aggregation::MeanOfPlayers),
            players: estimates.into_iter().map(Into::into).collect(),
        };
        print_json(&summary)
    } else {
        let log = sim::simulate(&s1, &s2, &config);
        let mut bytes = Vec::new();
        log.write_csv(&m, &mut bytes)?;
        manifest.write_with(&a.common.out, &bytes)?;
        let est = sim::estimate_markov(&log).unwrap_or_default();
        let st = stationary_state(&s1, &s2).ok();
        let players = [s1, s2]
            .iter()
            .enumerate()
            .map(|(i, s)| PlayerSummary {
                alpha: s.alpha(),
                gamma: s.gamma(),
                cooperation_rate: log.cooperation_rate(i, a.burn_in),
                mean_payoff: log.mean_payoff(&m, i, a.burn_in),
                stationary_cooperation: st.map(|s| if i == 0 { s.p1 } else { s.p2 }),
                stationary_payoff: st.map(|s| {
                    if i == 0 {
                        expected_payoff(&m, s.p1, s.p2)
                    } else {
                        expected_payoff(&m, s.p2, s.p1)
                    }
                }),
                estimate: est[i].into(),
            })
            .collect();
        print_json(&SimSummary {
            generator: sim::GENERATOR,
            seed: a.seed,
            rounds: a.rounds,
            burn_in: a.burn_in,
            players,
        })
    }
}

fn print_json(v: &impl Serialize) -> Result<()> {
    use std::io::Write;
    std::io::stdout().write_all(&to_json_bytes(v)?)?;
    Ok(())
}

// ---------------------------------------------------------------- classify

#[derive(Serialize)]
struct Aggregates {
    computed: Vec<PhaseMeans>,
    reported: Option<[PhaseMeans; 2]>,
}

#[derive(Serialize)]
struct ClassifyReport {
    manifest: RunManifest,
    records: usize,
    aggregates: Aggregates,
    boundary: BoundaryReport,
}

pub fn classify(a: &ClassifyArgs) -> Result<()> {
    let mut manifest = RunManifest::new("classify", a, a.common.timestamp)?;
    let table = match &a.data {
        Some(p) => {
            manifest.add_input(p)?;
            data::load_experiments_path(p).with_context(|| format!("loading {}", p.display()))?
        }
        None => {
            manifest.add_bundled("bundled:experiments.tsv", data::BUNDLED_TABLE.as_bytes());
            data::bundled()
        }
    };
    let points = match &a.sweep {
        Some(p) if !p.exists() => {
            return Err(DataError::InsufficientSweep {
                lambda_max: a.lambda_max,
                reason: format!("sweep file {} does not exist", p.display()),
            }
            .into());
        }
        Some(p) => {
            manifest.add_input(p)?;
            sweep_csv::read(p)?
        }
        None => {
            let grid = uniform_grid(0.0, a.lambda_max, 0.01);
            sweep_lambda(&grid, &SolverConfig::default())?.points
        }
    };
    let boundary = data::classify_against_qre(&table.records, &points, a.lambda_max)?;

    if let Some(path) = &a.records_csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "experiment_id",
            "phase",
            "alpha",
            "gamma",
            "boundary_gamma",
            "distance",
            "side",
            "consistent",
            "borderline",
            "extrapolated",
        ])?;
        for r in &boundary.records {
            let side = match r.side {
                data::Side::Above => "above",
                data::Side::Below => "below",
                data::Side::OnBoundary => "on-boundary",
            };
            w.write_record([
                r.experiment_id.clone(),
                r.phase.name().to_string(),
                sig12(r.alpha),
                sig12(r.gamma),
                opt(r.boundary_gamma),
                sig12(r.distance),
                side.to_string(),
                r.consistent.to_string(),
                r.borderline.to_string(),
                r.extrapolated.to_string(),
            ])?;
        }
        manifest.write_with(path, &w.into_inner()?)?;
    }

    let report = ClassifyReport {
        manifest: manifest.clone(),
        records: table.records.len(),
        aggregates: Aggregates {
            computed: data::aggregate(&table.records),
            reported: table.reported_means,
        },
        boundary,
    };
    manifest.write_with(&a.common.out, &to_json_bytes(&report)?)
}
