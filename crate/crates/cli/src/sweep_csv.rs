//! CSV form of a rationality sweep: one row per accepted equilibrium.

use std::path::Path;

use anyhow::{anyhow, Context, Result};

use pdqre::fmt::sig12;
use pdqre::qre::{Branch, QrePoint, Sweep};

use crate::manifest::opt;

pub const HEADER: [&str; 9] = [
    "lambda",
    "alpha",
    "gamma",
    "objective",
    "branch",
    "polyline",
    "start_count",
    "nash_residual",
    "clamped",
];

pub fn to_csv(sweep: &Sweep) -> Result<Vec<u8>> {
    let ids = sweep.polyline_ids();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for (p, id) in sweep.points.iter().zip(ids) {
        w.write_record([
            sig12(p.lambda),
            sig12(p.alpha),
            sig12(p.gamma),
            sig12(p.objective),
            p.branch.name().to_string(),
            id.to_string(),
            p.start_count.to_string(),
            opt(p.nash_residual),
            p.clamped.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Read the points back; only `lambda`, `alpha` and `gamma` are required.
pub fn read(path: &Path) -> Result<Vec<QrePoint>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| anyhow!("{}: missing column `{name}`", path.display()));
    let (il, ia, ig) = (need("lambda")?, need("alpha")?, need("gamma")?);
    let (io, ib, is, inr, ic) = (
        col("objective"),
        col("branch"),
        col("start_count"),
        col("nash_residual"),
        col("clamped"),
    );
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64> {
            row.get(k)
                .unwrap_or("")
                .parse()
                .with_context(|| format!("{}: row {line}, column `{}`", path.display(), &headers[k]))
        };
        let field = |k: Option<usize>| k.and_then(|k| row.get(k)).filter(|s| !s.is_empty());
        out.push(QrePoint {
            lambda: num(il)?,
            alpha: num(ia)?,
            gamma: num(ig)?,
            objective: field(io).and_then(|s| s.parse().ok()).unwrap_or(0.0),
            branch: field(ib).and_then(Branch::parse).unwrap_or(Branch::Other),
            start_count: field(is).and_then(|s| s.parse().ok()).unwrap_or(0),
            nash_residual: field(inr).and_then(|s| s.parse().ok()),
            clamped: field(ic).is_some_and(|s| s == "true"),
        });
    }
    Ok(out)
}
