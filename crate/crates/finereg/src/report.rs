//! JSON report and CSV tables written by `run` and `sweep`.

use std::fs;
use std::io::Write;
use std::path::Path;

use finereg_core::regularity::{CriterionId, CriterionReport};
use serde::Serialize;

use crate::run::{PointOutcome, RunOutcome};
use crate::scenario::SCHEMA_VERSION;

/// Column headers, fixed for `SCHEMA_VERSION`.
pub const SUMMARY_HEADER: [&str; 9] =
    ["point", "criterion", "verdict", "q", "value", "resolved_total", "unresolved", "extrapolated_total", "layer"];
pub const SHELLS_HEADER: [&str; 9] = ["point", "criterion", "k", "inner", "outer", "sum", "nodes", "resolvable", "local"];
pub const SAMPLES_HEADER: [&str; 6] = ["point", "criterion", "t", "node", "ratio", "flagged"];
pub const SWEEP_HEADER: [&str; 10] = [
    "parameter",
    "value",
    "point",
    "verdict",
    "consistency_failure",
    "q_integral_ky",
    "q_integral_kyv",
    "c_y",
    "total_integral_ky",
    "total_integral_kyv",
];

/// Number formatting shared by every CSV: plain decimals between `1e-4` and
/// `1e15`, scientific notation otherwise, `inf`/`-inf`/`nan` for the rest.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (x.abs() >= 1e-4 && x.abs() < 1e15) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub schema_version: u32,
    pub scenario: &'a str,
    pub h: f64,
    pub nodes: usize,
    pub x0: Vec<f64>,
    pub consistency_failure: bool,
    pub points: Vec<PointJson>,
}

#[derive(Serialize)]
pub struct PointJson {
    pub index: usize,
    pub y: Vec<f64>,
    pub nu: Vec<f64>,
    pub eta: f64,
    pub verdict: &'static str,
    pub consistency_failure: bool,
    pub c_weight: Option<CWeightJson>,
    pub criteria: Vec<CriterionJson>,
    pub monte_carlo: Option<MonteCarloJson>,
}

#[derive(Serialize)]
pub struct CWeightJson {
    pub value: f64,
    pub unclamped: f64,
    pub potential: f64,
    pub layer: f64,
}

#[derive(Serialize)]
pub struct CriterionJson {
    pub id: &'static str,
    pub verdict: &'static str,
    pub q: Option<f64>,
    pub value: f64,
    pub resolved_total: f64,
    pub unresolved: f64,
    pub extrapolated_total: f64,
    pub layer: f64,
    pub ray_integral: Option<f64>,
    pub shells: Vec<ShellJson>,
    pub samples: Vec<SampleJson>,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
pub struct ShellJson {
    pub k: i32,
    pub inner: f64,
    pub outer: f64,
    pub sum: f64,
    pub nodes: usize,
    pub resolvable: bool,
    pub local: bool,
}

#[derive(Serialize)]
pub struct SampleJson {
    pub t: f64,
    pub node: usize,
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Serialize)]
pub struct MonteCarloJson {
    pub epsilon: f64,
    pub paths: usize,
    pub retained: usize,
    pub failures: usize,
    pub mean: f64,
    pub std_error: f64,
    pub mean_steps: f64,
    pub quadrature: f64,
}

fn coords(p: &finereg_core::Point, dim: usize) -> Vec<f64> {
    p.0[..dim].to_vec()
}

fn criterion_json(r: &CriterionReport) -> CriterionJson {
    CriterionJson {
        id: r.id.as_str(),
        verdict: r.verdict.as_str(),
        q: r.q,
        value: r.value,
        resolved_total: r.resolved_total,
        unresolved: r.unresolved,
        extrapolated_total: r.extrapolated_total,
        layer: r.layer,
        ray_integral: r.ray_integral,
        shells: r
            .shells
            .iter()
            .map(|s| ShellJson {
                k: s.k,
                inner: s.inner,
                outer: s.outer,
                sum: s.sum,
                nodes: s.nodes,
                resolvable: s.resolvable,
                local: s.local,
            })
            .collect(),
        samples: r
            .samples
            .iter()
            .map(|s| SampleJson { t: s.t, node: s.node, ratio: s.ratio, flagged: s.flagged })
            .collect(),
        notes: r.notes.clone(),
    }
}

fn point_json(index: usize, p: &PointOutcome, dim: usize) -> PointJson {
    PointJson {
        index,
        y: coords(&p.point.y, dim),
        nu: coords(&p.point.nu, dim),
        eta: p.point.eta,
        verdict: p.verdict.as_str(),
        consistency_failure: p.consistency_failure,
        c_weight: p.c_weight.map(|c| CWeightJson {
            value: c.value,
            unclamped: c.unclamped,
            potential: c.potential,
            layer: c.layer,
        }),
        criteria: p.reports.iter().map(criterion_json).collect(),
        monte_carlo: p.monte_carlo.map(|m| MonteCarloJson {
            epsilon: m.epsilon,
            paths: m.paths,
            retained: m.stats.retained,
            failures: m.stats.failures,
            mean: m.stats.mean,
            std_error: m.stats.std_error,
            mean_steps: m.stats.mean_steps,
            quadrature: m.quadrature,
        }),
    }
}

pub fn report_json(run: &RunOutcome) -> String {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: &run.name,
        h: run.h,
        nodes: run.nodes,
        x0: coords(&run.x0, run.dim),
        consistency_failure: run.consistency_failure(),
        points: run.points.iter().enumerate().map(|(i, p)| point_json(i, p, run.dim)).collect(),
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

pub fn summary_csv(run: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (i, p) in run.points.iter().enumerate() {
        for r in &p.reports {
            rows.push(vec![
                i.to_string(),
                r.id.as_str().to_string(),
                r.verdict.as_str().to_string(),
                opt(r.q),
                num(r.value),
                num(r.resolved_total),
                num(r.unresolved),
                num(r.extrapolated_total),
                num(r.layer),
            ]);
        }
        let mut row = vec![i.to_string(), "consolidated".into(), p.verdict.as_str().to_string()];
        row.extend(std::iter::repeat_n(String::new(), 6));
        rows.push(row);
    }
    csv_bytes(&SUMMARY_HEADER, rows)
}

pub fn shells_csv(run: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (i, p) in run.points.iter().enumerate() {
        for r in &p.reports {
            for s in &r.shells {
                rows.push(vec![
                    i.to_string(),
                    r.id.as_str().to_string(),
                    s.k.to_string(),
                    num(s.inner),
                    num(s.outer),
                    num(s.sum),
                    s.nodes.to_string(),
                    s.resolvable.to_string(),
                    s.local.to_string(),
                ]);
            }
        }
    }
    csv_bytes(&SHELLS_HEADER, rows)
}

pub fn samples_csv(run: &RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (i, p) in run.points.iter().enumerate() {
        for r in &p.reports {
            for s in &r.samples {
                rows.push(vec![
                    i.to_string(),
                    r.id.as_str().to_string(),
                    num(s.t),
                    s.node.to_string(),
                    num(s.ratio),
                    s.flagged.to_string(),
                ]);
            }
        }
    }
    csv_bytes(&SAMPLES_HEADER, rows)
}

/// One sweep row per (value, point).
pub fn sweep_rows(param: &str, value: &str, run: &RunOutcome) -> Vec<Vec<String>> {
    fn find(p: &PointOutcome, id: CriterionId) -> Option<&CriterionReport> {
        p.reports.iter().find(|r| r.id == id)
    }
    run.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ky = find(p, CriterionId::IntegralKy);
            let kyv = find(p, CriterionId::IntegralKyV);
            let c = find(p, CriterionId::CWeight).map(|r| r.value);
            vec![
                param.to_string(),
                value.to_string(),
                i.to_string(),
                p.verdict.as_str().to_string(),
                p.consistency_failure.to_string(),
                opt(ky.and_then(|r| r.q)),
                opt(kyv.and_then(|r| r.q)),
                opt(c),
                opt(ky.map(|r| r.extrapolated_total)),
                opt(kyv.map(|r| r.extrapolated_total)),
            ]
        })
        .collect()
}

pub fn sweep_csv(rows: Vec<Vec<String>>) -> anyhow::Result<Vec<u8>> {
    csv_bytes(&SWEEP_HEADER, rows)
}

/// Writes through a temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `report.json`, `summary.csv`, `shells.csv` and `samples.csv` under `dir`.
pub fn write_run(dir: &Path, run: &RunOutcome) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("report.json"), report_json(run).as_bytes())?;
    write_atomic(&dir.join("summary.csv"), &summary_csv(run)?)?;
    write_atomic(&dir.join("shells.csv"), &shells_csv(run)?)?;
    write_atomic(&dir.join("samples.csv"), &samples_csv(run)?)?;
    Ok(())
}
