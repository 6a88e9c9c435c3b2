//! Per-experiment laboratory results and their position relative to the
//! smooth logit-equilibrium branch.
//!
//! The table has one row per experiment with cooperation rate, `alpha` and
//! `gamma` before and after the socialization session. A trailing `Mean:` row,
//! if present, is kept separately as the reported means.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::fmt::sig12;
use crate::qre::QrePoint;

/// Column names of the experiment table, in order.
pub const COLUMNS: [&str; 7] = [
    "Number of the experiment",
    "% of cooperation before socialization",
    "alpha before socialization",
    "gamma before socialization",
    "% of cooperation after socialization",
    "alpha after socialization",
    "gamma after socialization",
];

/// The bundled table, tab-separated.
pub const BUNDLED_TABLE: &str = include_str!("../data/experiments.tsv");

/// Records closer than this to the boundary are flagged as borderline.
pub const BORDERLINE_DISTANCE: f64 = 0.02;
/// Largest max-norm step allowed between consecutive branch points.
pub const BRANCH_CONTINUITY: f64 = 0.05;
/// Default upper rationality of the boundary branch.
pub const DEFAULT_LAMBDA_MAX: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Before,
    After,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Before => "before",
            Phase::After => "after",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub phase: Phase,
    /// Fraction of cooperative choices, in `[0, 1]`.
    pub coop_rate: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Unweighted means of one phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeans {
    pub phase: Phase,
    pub count: usize,
    pub coop_rate: f64,
    pub alpha: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    /// Experiment order, `Before` then `After` within each experiment.
    pub records: Vec<ExperimentRecord>,
    /// Values of the `Mean:` row, if the file has one.
    pub reported_means: Option<[PhaseMeans; 2]>,
}

fn parse_err(row: usize, column: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        row,
        column: COLUMNS.get(column).copied().unwrap_or("?").to_string(),
        message: message.into(),
    }
}

fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    [b'\t', b',', b';']
        .into_iter()
        .find(|&d| header.contains(d as char))
        .unwrap_or(b'\t')
}

fn parse_probability(raw: &str, row: usize, column: usize) -> Result<f64, DataError> {
    let (num, percent) = match raw.trim().strip_suffix('%') {
        Some(n) => (n.trim(), true),
        None => (raw.trim(), column == 1 || column == 4),
    };
    let v: f64 = num
        .parse()
        .map_err(|_| parse_err(row, column, format!("`{raw}` is not a number")))?;
    let v = if percent { v / 100.0 } else { v };
    if !(0.0..=1.0).contains(&v) {
        return Err(parse_err(row, column, format!("`{raw}` is outside [0, 1]")));
    }
    Ok(v)
}

/// Parse a delimiter-separated table (tab, comma or semicolon, taken from the header).
///
/// Rows are numbered from 1 with the header as row 1.
pub fn load_experiments<R: Read>(mut source: R) -> Result<ExperimentTable, DataError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    if text.trim().is_empty() {
        return Err(parse_err(1, 0, "empty input, expected a header row"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(&text))
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    let mut reported_means = None;
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i + 1, |p| line_of(&text, p.byte() as usize));
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if row.len() != COLUMNS.len() {
            return Err(parse_err(
                line,
                row.len().min(COLUMNS.len() - 1),
                format!("expected {} columns, found {}", COLUMNS.len(), row.len()),
            ));
        }
        if i == 0 {
            for (k, (got, want)) in row.iter().zip(COLUMNS).enumerate() {
                if got.trim() != want {
                    return Err(parse_err(line, k, format!("header `{}` should be `{want}`", got.trim())));
                }
            }
            continue;
        }
        let id = row[0].trim().to_string();
        if id.is_empty() {
            return Err(parse_err(line, 0, "missing experiment label"));
        }
        let mut vals = [0.0; 6];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = parse_probability(&row[k + 1], line, k + 1)?;
        }
        let phase = |p: Phase, o: usize| (p, vals[o], vals[o + 1], vals[o + 2]);
        let phases = [phase(Phase::Before, 0), phase(Phase::After, 3)];
        if id.trim_end_matches(':').eq_ignore_ascii_case("mean") {
            reported_means = Some(phases.map(|(phase, coop_rate, alpha, gamma)| PhaseMeans {
                phase,
                // Filled in once all rows are read.
                count: 0,
                coop_rate,
                alpha,
                gamma,
            }));
            continue;
        }
        for (phase, coop_rate, alpha, gamma) in phases {
            records.push(ExperimentRecord {
                experiment_id: id.clone(),
                phase,
                coop_rate,
                alpha,
                gamma,
            });
        }
    }
    if records.is_empty() {
        return Err(parse_err(2, 0, "no experiment rows"));
    }
    if let Some(means) = reported_means.as_mut() {
        for m in means.iter_mut() {
            m.count = records.iter().filter(|r| r.phase == m.phase).count();
        }
    }
    Ok(ExperimentTable {
        records,
        reported_means,
    })
}

/// 1-based line of the first non-blank byte at or after `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    let bytes = text.as_bytes();
    let mut start = offset.min(bytes.len());
    while start < bytes.len() && matches!(bytes[start], b'\n' | b'\r') {
        start += 1;
    }
    bytes[..start].iter().filter(|&&b| b == b'\n').count() + 1
}

pub fn load_experiments_path(path: &Path) -> Result<ExperimentTable, DataError> {
    load_experiments(std::fs::File::open(path)?)
}

/// The table shipped with the crate.
pub fn bundled() -> ExperimentTable {
    load_experiments(BUNDLED_TABLE.as_bytes()).expect("bundled table parses")
}

/// Write tab-separated, with percentages for the cooperation columns.
///
/// Records are paired by experiment label; a label missing one phase is an error.
pub fn write_experiments<W: Write>(table: &ExperimentTable, out: W) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    w.write_record(COLUMNS)?;
    let pct = |x: f64| format!("{}%", sig12(x * 100.0));
    let row = |id: &str, b: (f64, f64, f64), a: (f64, f64, f64)| {
        [
            id.to_string(),
            pct(b.0),
            sig12(b.1),
            sig12(b.2),
            pct(a.0),
            sig12(a.1),
            sig12(a.2),
        ]
    };
    let mut ids: Vec<&str> = Vec::new();
    for r in &table.records {
        if !ids.contains(&r.experiment_id.as_str()) {
            ids.push(&r.experiment_id);
        }
    }
    for (n, id) in ids.iter().enumerate() {
        let get = |p: Phase| {
            table
                .records
                .iter()
                .find(|r| r.experiment_id == *id && r.phase == p)
                .map(|r| (r.coop_rate, r.alpha, r.gamma))
                .ok_or_else(|| parse_err(n + 2, 0, format!("{id} lacks the {} phase", p.name())))
        };
        w.write_record(row(id, get(Phase::Before)?, get(Phase::After)?))?;
    }
    if let Some([b, a]) = table.reported_means {
        w.write_record(row(
            "Mean:",
            (b.coop_rate, b.alpha, b.gamma),
            (a.coop_rate, a.alpha, a.gamma),
        ))?;
    }
    w.flush()?;
    Ok(())
}

/// Unweighted means for each phase present, `Before` first.
pub fn aggregate(records: &[ExperimentRecord]) -> Vec<PhaseMeans> {
    [Phase::Before, Phase::After]
        .into_iter()
        .filter_map(|phase| {
            let rs: Vec<&ExperimentRecord> = records.iter().filter(|r| r.phase == phase).collect();
            if rs.is_empty() {
                return None;
            }
            let n = rs.len() as f64;
            let mean = |f: fn(&ExperimentRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            Some(PhaseMeans {
                phase,
                count: rs.len(),
                coop_rate: mean(|r| r.coop_rate),
                alpha: mean(|r| r.alpha),
                gamma: mean(|r| r.gamma),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Above,
    Below,
    OnBoundary,
}

/// How the side of the boundary was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideMethod {
    /// `gamma` compared with the branch read as a function of `alpha`.
    Interpolation,
    /// Nearest segment, oriented so that `(1, 1)` is above.
    SignedDistance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordSide {
    pub experiment_id: String,
    pub phase: Phase,
    pub alpha: f64,
    pub gamma: f64,
    /// Boundary `gamma` at the record's `alpha` (interpolation method only).
    pub boundary_gamma: Option<f64>,
    /// Euclidean distance to the boundary, including its horizontal extensions.
    pub distance: f64,
    pub side: Side,
    /// `Before` below or `After` above.
    pub consistent: bool,
    pub borderline: bool,
    /// `alpha` lies outside the branch and the nearest endpoint was extended.
    pub extrapolated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideCounts {
    pub phase: Phase,
    pub above: usize,
    pub below: usize,
    pub on_boundary: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub lambda_max: f64,
    pub method: SideMethod,
    /// Branch points `(lambda, alpha, gamma)` used as the boundary.
    pub boundary: Vec<[f64; 3]>,
    pub records: Vec<RecordSide>,
    pub counts: Vec<SideCounts>,
    pub consistent: usize,
    pub total: usize,
    /// `consistent / total`.
    pub separation_score: f64,
    pub borderline: usize,
    pub extrapolated: usize,
}

/// Follow the branch that starts at `(0.5, 0.5)` at `lambda = 0` up to `lambda_max`.
///
/// `points` may hold several equilibria per `lambda`; at each grid value the one
/// nearest the previous branch point is taken.
pub fn smooth_branch(points: &[QrePoint], lambda_max: f64) -> Result<Vec<QrePoint>, DataError> {
    let insufficient = |reason: String| DataError::InsufficientSweep { lambda_max, reason };
    const LAMBDA_SLACK: f64 = 1e-9;
    let mut lambdas: Vec<f64> = points
        .iter()
        .map(|p| p.lambda)
        .filter(|&l| l <= lambda_max + LAMBDA_SLACK)
        .collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.first() != Some(&0.0) {
        return Err(insufficient("no equilibrium at lambda = 0".into()));
    }
    let mut prev = [0.5, 0.5];
    let mut branch = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let next = points
            .iter()
            .filter(|p| p.lambda == l)
            .map(|p| ((p.alpha - prev[0]).abs().max((p.gamma - prev[1]).abs()), p))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match next {
            Some((d, p)) if d < BRANCH_CONTINUITY || (l == 0.0 && d < 1e-6) => {
                prev = [p.alpha, p.gamma];
                branch.push(*p);
            }
            _ => {
                return Err(insufficient(format!("branch breaks at lambda = {}", sig12(l))));
            }
        }
    }
    let reached = branch.last().map_or(0.0, |p| p.lambda);
    if reached < lambda_max - LAMBDA_SLACK {
        return Err(insufficient(format!(
            "sweep stops at lambda = {}",
            sig12(reached)
        )));
    }
    Ok(branch)
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    let d = (p[0] - q[0]).hypot(p[1] - q[1]);
    let cross = ab[0] * ap[1] - ab[1] * ap[0];
    (d, cross)
}

/// Vertices of the boundary: the branch, oriented by ascending `alpha` of its
/// endpoints, plus horizontal rays to `alpha = 0` and `alpha = 1`.
fn extended(curve: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut path = curve.to_vec();
    if path[0][0] > path[path.len() - 1][0] {
        path.reverse();
    }
    let (lo, hi) = (path[0], path[path.len() - 1]);
    let mut out = Vec::with_capacity(curve.len() + 2);
    if lo[0] > 0.0 {
        out.push([0.0, lo[1]]);
    }
    out.extend(path);
    if hi[0] < 1.0 {
        out.push([1.0, hi[1]]);
    }
    out
}

fn polyline_distance(p: [f64; 2], poly: &[[f64; 2]]) -> (f64, f64) {
    if poly.len() == 1 {
        return segment_distance(p, poly[0], poly[0]);
    }
    poly.windows(2)
        .map(|w| segment_distance(p, w[0], w[1]))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("non-empty polyline")
}

/// Classify each record as above or below the smooth branch for `lambda` in `[0, lambda_max]`.
pub fn classify_against_qre(
    records: &[ExperimentRecord],
    sweep: &[QrePoint],
    lambda_max: f64,
) -> Result<BoundaryReport, DataError> {
    const ON_BOUNDARY: f64 = 1e-12;
    let branch = smooth_branch(sweep, lambda_max)?;
    let curve: Vec<[f64; 2]> = branch.iter().map(|p| [p.alpha, p.gamma]).collect();
    let monotone = curve.windows(2).all(|w| w[1][0] < w[0][0])
        || curve.windows(2).all(|w| w[1][0] > w[0][0]);
    let method = if monotone && curve.len() > 1 {
        SideMethod::Interpolation
    } else {
        SideMethod::SignedDistance
    };
    let poly = extended(&curve);
    let (a_min, a_max) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])));

    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let p = [r.alpha, r.gamma];
        let (distance, _) = polyline_distance(p, &poly);
        let extrapolated = r.alpha < a_min || r.alpha > a_max;
        let (side, boundary_gamma) = match method {
            SideMethod::Interpolation => {
                let g = interpolate(&poly, r.alpha);
                let side = if (r.gamma - g).abs() <= ON_BOUNDARY {
                    Side::OnBoundary
                } else if r.gamma > g {
                    Side::Above
                } else {
                    Side::Below
                };
                (side, Some(g))
            }
            SideMethod::SignedDistance => {
                let (d, cross) = polyline_distance(p, &poly);
                let (_, ref_cross) = nearest_cross(&poly, p);
                let side = if d <= ON_BOUNDARY {
                    Side::OnBoundary
                } else if (cross > 0.0) == (ref_cross > 0.0) {
                    Side::Above
                } else {
                    Side::Below
                };
                (side, None)
            }
        };
        let consistent = matches!(
            (r.phase, side),
            (Phase::Before, Side::Below) | (Phase::After, Side::Above)
        );
        out.push(RecordSide {
            experiment_id: r.experiment_id.clone(),
            phase: r.phase,
            alpha: r.alpha,
            gamma: r.gamma,
            boundary_gamma,
            distance,
            side,
            consistent,
            borderline: distance < BORDERLINE_DISTANCE,
            extrapolated,
        });
    }

    let counts = [Phase::Before, Phase::After]
        .into_iter()
        .map(|phase| {
            let n = |s: Side| out.iter().filter(|r| r.phase == phase && r.side == s).count();
            SideCounts {
                phase,
                above: n(Side::Above),
                below: n(Side::Below),
                on_boundary: n(Side::OnBoundary),
            }
        })
        .collect();
    let consistent = out.iter().filter(|r| r.consistent).count();
    let total = out.len();
    Ok(BoundaryReport {
        lambda_max,
        method,
        boundary: branch.iter().map(|p| [p.lambda, p.alpha, p.gamma]).collect(),
        counts,
        consistent,
        total,
        separation_score: if total == 0 { 0.0 } else { consistent as f64 / total as f64 },
        borderline: out.iter().filter(|r| r.borderline).count(),
        extrapolated: out.iter().filter(|r| r.extrapolated).count(),
        records: out,
    })
}

/// Orientation of the reference point `(1, 1)` against the segment nearest `p`.
fn nearest_cross(poly: &[[f64; 2]], p: [f64; 2]) -> (f64, f64) {
    let (a, b) = poly
        .windows(2)
        .map(|w| (w[0], w[1]))
        .min_by(|x, y| {
            segment_distance(p, x.0, x.1)
                .0
                .total_cmp(&segment_distance(p, y.0, y.1).0)
        })
        .unwrap_or((poly[0], poly[0]));
    segment_distance([1.0, 1.0], a, b)
}

/// Piecewise-linear `gamma` at `alpha` on a polyline sorted by ascending `alpha`.
fn interpolate(poly: &[[f64; 2]], alpha: f64) -> f64 {
    let k = poly.partition_point(|p| p[0] < alpha);
    if k == 0 {
        return poly[0][1];
    }
    if k == poly.len() {
        return poly[k - 1][1];
    }
    let (a, b) = (poly[k - 1], poly[k]);
    if b[0] == a[0] {
        return b[1];
    }
    a[1] + (alpha - a[0]) / (b[0] - a[0]) * (b[1] - a[1])
}
