//! Executes prepared scenarios and parameter sweeps.

use std::path::Path;

use anyhow::{anyhow, Context};
use finereg_core::kernels::{martin_kernel, CWeight};
use finereg_core::regularity::{
    consolidate, criterion_c_weight, criterion_cone_test, criterion_green_ratio, criterion_integral,
    criterion_martin_ratio, criterion_relative, criterion_smooth_explicit, CriterionId, CriterionReport, KernelChoice,
    PointKernels, Verdict,
};
use finereg_core::stochastic::{summarize, truncated_quadrature, ConditionedWalk, WalkConfig, WalkStatistics};
use finereg_core::{BoundaryPoint, Mode, Point};
use rayon::prelude::*;

use crate::report;
use crate::scenario::{Prepared, Scenario, SweepParam};

#[derive(Clone, Copy, Debug)]
pub struct MonteCarloOutcome {
    pub epsilon: f64,
    pub paths: usize,
    pub stats: WalkStatistics,
    pub quadrature: f64,
}

#[derive(Clone, Debug)]
pub struct PointOutcome {
    pub point: BoundaryPoint,
    pub reports: Vec<CriterionReport>,
    pub c_weight: Option<CWeight>,
    pub verdict: Verdict,
    pub consistency_failure: bool,
    pub monte_carlo: Option<MonteCarloOutcome>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub name: String,
    pub dim: usize,
    pub h: f64,
    pub nodes: usize,
    pub x0: Point,
    pub points: Vec<PointOutcome>,
}

impl RunOutcome {
    pub fn consistency_failure(&self) -> bool {
        self.points.iter().any(|p| p.consistency_failure)
    }
}

fn needs_kernels(id: CriterionId) -> bool {
    !matches!(id, CriterionId::SmoothExplicit | CriterionId::ConeTest)
}

fn run_point(prep: &Prepared, index: usize) -> anyhow::Result<PointOutcome> {
    let problem = &prep.problem;
    let th = &prep.thresholds;
    let point = prep.points[index];
    let kernels = if prep.criteria.iter().any(|c| needs_kernels(*c)) {
        Some(PointKernels::compute(problem, &point, th).with_context(|| format!("point {index}: Martin kernels"))?)
    } else {
        None
    };
    let mut reports = Vec::with_capacity(prep.criteria.len());
    let mut c_weight = None;
    for &id in &prep.criteria {
        let ctx = || format!("point {index}: criterion {}", id.as_str());
        let report = match id {
            CriterionId::SmoothExplicit => criterion_smooth_explicit(problem, &point, th),
            CriterionId::ConeTest => {
                let cone = prep.cones[index].as_ref().ok_or_else(|| anyhow!("no cone prepared"))?;
                criterion_cone_test(problem.grid().domain(), cone, &prep.potential, th)
            }
            _ => {
                let k = kernels.as_ref().expect("kernels computed");
                match id {
                    CriterionId::IntegralKy => criterion_integral(problem, k, KernelChoice::Ky, th),
                    CriterionId::IntegralKyV => criterion_integral(problem, k, KernelChoice::KyV, th),
                    CriterionId::GreenRatio => criterion_green_ratio(problem, k, th),
                    CriterionId::MartinRatio => criterion_martin_ratio(problem, k, th),
                    CriterionId::RelativeR => criterion_relative(problem, k, th),
                    CriterionId::CWeight => criterion_c_weight(problem, k, th).map(|(r, c)| {
                        c_weight = Some(c);
                        r
                    }),
                    CriterionId::SmoothExplicit | CriterionId::ConeTest => unreachable!(),
                }
            }
        }
        .with_context(ctx)?;
        reports.push(report);
    }
    // A regular cone test carries no pointwise claim; a singular one must not
    // meet a regular consolidated verdict.
    let pointwise: Vec<CriterionReport> = reports.iter().filter(|r| r.id != CriterionId::ConeTest).cloned().collect();
    let (verdict, mut consistency_failure) = consolidate(&pointwise);
    let cone_singular = reports.iter().any(|r| r.id == CriterionId::ConeTest && r.verdict == Verdict::Singular);
    if cone_singular && verdict == Verdict::Regular {
        consistency_failure = true;
    }
    let monte_carlo = match &prep.monte_carlo {
        Some(mc) => Some(run_monte_carlo(prep, &point, mc).with_context(|| format!("point {index}: Monte Carlo"))?),
        None => None,
    };
    Ok(PointOutcome { point, reports, c_weight, verdict, consistency_failure, monte_carlo })
}

fn run_monte_carlo(
    prep: &Prepared,
    point: &BoundaryPoint,
    mc: &crate::scenario::MonteCarloConfig,
) -> anyhow::Result<MonteCarloOutcome> {
    let problem = &prep.problem;
    let t_min = prep.thresholds.t_min_cells * problem.grid().h();
    let kernel = martin_kernel(problem, Mode::Laplacian, point, Some(t_min))?;
    let h = kernel.kernel().clone();
    let v = problem.op().potential().clone();
    let mut cfg = WalkConfig::new(h, problem.x0(), point.y, mc.epsilon, mc.paths, mc.seed);
    if let Some(m) = mc.max_steps {
        cfg.max_steps = m;
    }
    let walk = ConditionedWalk::new(problem.grid(), &v, &cfg)?;
    let outcomes: Vec<_> = (0..mc.paths as u64).into_par_iter().map(|i| walk.path(i)).collect();
    let stats = summarize(&outcomes)?;
    let quadrature = truncated_quadrature(problem, &v, &cfg.h, problem.x0(), &point.y, mc.epsilon)?;
    Ok(MonteCarloOutcome { epsilon: mc.epsilon, paths: mc.paths, stats, quadrature })
}

/// Runs every boundary point of a prepared scenario (points in parallel,
/// results in scenario order).
pub fn run_prepared(name: &str, prep: &Prepared) -> anyhow::Result<RunOutcome> {
    let points = (0..prep.points.len())
        .into_par_iter()
        .map(|i| run_point(prep, i))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let grid = prep.problem.grid();
    Ok(RunOutcome {
        name: name.to_string(),
        dim: grid.dim(),
        h: grid.h(),
        nodes: grid.len(),
        x0: grid.point(prep.problem.x0()),
        points,
    })
}

pub fn run_scenario(scenario: &Scenario) -> anyhow::Result<RunOutcome> {
    let prep = scenario.prepare()?;
    run_prepared(&scenario.name, &prep)
}

/// Parses sweep values: decimals or fractions such as `1/64`.
pub fn parse_values(text: &str) -> anyhow::Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let value = match token.split_once('/') {
            Some((a, b)) => {
                let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
                a / b
            }
            None => token.parse::<f64>().with_context(|| format!("sweep value `{token}` is not a number"))?,
        };
        if !value.is_finite() {
            return Err(anyhow!("sweep value `{token}` is not finite"));
        }
        out.push((token.to_string(), value));
    }
    if out.is_empty() {
        return Err(anyhow!("the sweep value list is empty"));
    }
    Ok(out)
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub param: SweepParam,
    pub runs: Vec<(String, RunOutcome)>,
}

impl SweepOutcome {
    pub fn consistency_failure(&self) -> bool {
        self.runs.iter().any(|(_, r)| r.consistency_failure())
    }
}

/// Directory of one sweep value, e.g. `s=1.5`; `/` becomes `_`.
pub fn value_dir(param: SweepParam, token: &str) -> String {
    format!("{}={}", param.as_str(), token.replace('/', "_"))
}

/// Runs the scenario at each value. Every variant is validated before any
/// solve; runs proceed in parallel and are written to `out/<param>=<value>/`
/// before `sweep.csv` is merged in value order.
pub fn sweep(base: &Scenario, param: SweepParam, values: &[(String, f64)], out: Option<&Path>) -> anyhow::Result<SweepOutcome> {
    let variants = values
        .iter()
        .map(|(token, v)| {
            let s = base.with_param(param, *v).with_context(|| format!("{}={token}", param.as_str()))?;
            let prep = s.prepare().with_context(|| format!("{}={token}", param.as_str()))?;
            Ok((token.clone(), s, prep))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let runs = variants
        .par_iter()
        .map(|(token, s, prep)| -> anyhow::Result<(String, RunOutcome)> {
            let run = run_prepared(&s.name, prep).with_context(|| format!("{}={token}", param.as_str()))?;
            if let Some(dir) = out {
                report::write_run(&dir.join(value_dir(param, token)), &run)?;
            }
            Ok((token.clone(), run))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if let Some(dir) = out {
        let rows = runs
            .iter()
            .flat_map(|(token, run)| report::sweep_rows(param.as_str(), token, run))
            .collect();
        report::write_atomic(&dir.join("sweep.csv"), &report::sweep_csv(rows)?)?;
    }
    Ok(SweepOutcome { param, runs })
}
