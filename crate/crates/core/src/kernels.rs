//! Martin kernels as Green-function ratios, the regularity weight `c(y)`,
//! ratio sampling along cones and boundary Harnack constants.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, ConeSpec, GraphChart, Point};
use crate::greens::{green_column, green_potential};
use crate::math;
use crate::operator::{DiscreteProblem, Field, GridDomain, Mode};

/// Ratio fields `K^{(t)} = G(·, z_t)/G(x₀, z_t)` for poles `z_t` nearest to
/// `y + tν`, with `t` halving down to `t_min`.
#[derive(Clone, Debug)]
pub struct MartinApprox {
    pub point: BoundaryPoint,
    pub mode: Mode,
    pub x0: usize,
    /// Decreasing, ending at `t_min`.
    pub ts: Vec<f64>,
    pub poles: Vec<usize>,
    pub fields: Vec<Field>,
    /// `increments[k]`: largest relative change between fields `k` and
    /// `k + 1` over nodes with `|x − y| ≥ η/2` and `δ ≥ 4h`.
    pub increments: Vec<f64>,
    /// Set when the increments grow somewhere along the sequence.
    pub non_cauchy: bool,
}

impl MartinApprox {
    /// The kernel at the smallest `t`.
    pub fn kernel(&self) -> &Field {
        self.fields.last().expect("at least one pole")
    }

    pub fn t_min(&self) -> f64 {
        *self.ts.last().expect("at least one pole")
    }
}

/// Poles `y + tν` for `t = t_min·2^k ≤ η`, largest first.
pub fn pole_sequence(problem: &DiscreteProblem, point: &BoundaryPoint, t_min: Option<f64>) -> Result<(Vec<f64>, Vec<usize>)> {
    let grid = problem.grid();
    let h = grid.h();
    let t_min = t_min.unwrap_or(4.0 * h);
    if t_min < 4.0 * h * (1.0 - 1e-9) {
        return Err(Error::InvalidPole(format!("t_min = {t_min} is closer to the boundary than 4h = {}", 4.0 * h)));
    }
    if t_min > point.eta {
        return Err(Error::InvalidPole(format!(
            "t_min = {t_min} exceeds the admissible ray length η = {}",
            point.eta
        )));
    }
    let mut ts = Vec::new();
    let mut t = t_min;
    while t <= point.eta * (1.0 + 1e-12) {
        ts.push(t);
        t *= 2.0;
    }
    ts.reverse();
    let mut poles = Vec::with_capacity(ts.len());
    for &t in &ts {
        let z = point.along(t);
        if !grid.domain().contains(&z) {
            return Err(Error::InvalidPole(format!("pole y + {t}ν = {z:?} leaves the domain")));
        }
        let node = grid
            .nearest_node(&z)
            .ok_or_else(|| Error::InvalidPole(format!("no grid node near the pole {z:?}")))?;
        poles.push(node);
    }
    Ok((ts, poles))
}

pub fn martin_kernel(
    problem: &DiscreteProblem,
    mode: Mode,
    point: &BoundaryPoint,
    t_min: Option<f64>,
) -> Result<MartinApprox> {
    let grid = problem.grid();
    let x0 = problem.x0();
    let (ts, poles) = pole_sequence(problem, point, t_min)?;
    let mut fields = Vec::with_capacity(ts.len());
    for &z in &poles {
        let g = green_column(problem, mode, z)?;
        let norm = g.values[x0];
        if !(norm > 0.0) {
            return Err(Error::SolverFailure { residual: norm, iterations: 0 });
        }
        let values: Vec<f64> = g.values.iter().map(|v| (v / norm).max(0.0)).collect();
        fields.push(Field::new(grid, values)?);
    }
    let h = grid.h();
    let far: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.point(i).dist(&point.y) >= 0.5 * point.eta && grid.delta()[i] >= 4.0 * h)
        .collect();
    let increments: Vec<f64> = fields
        .windows(2)
        .map(|w| {
            far.iter()
                .map(|&i| (w[1][i] - w[0][i]).abs() / w[1][i].max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        })
        .collect();
    let non_cauchy = increments.windows(2).any(|w| w[1] > 1.05 * w[0]);
    Ok(MartinApprox { point: *point, mode, x0, ts, poles, fields, increments, non_cauchy })
}

/// Estimate of `c(y) = 1 − G¹(R K_y)(x₀)` with `K_y` the `𝓛₀`-Martin kernel
/// and `R = V − γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CWeight {
    /// Clamped to `[0, 1]`.
    pub value: f64,
    pub unclamped: f64,
    /// `G¹(R K_y)(x₀)` over nodes with `δ ≥ 2h`.
    pub potential: f64,
    /// The same over the layer `δ < 2h`.
    pub layer: f64,
}

pub fn c_weight(problem: &DiscreteProblem, kernel: &MartinApprox) -> Result<CWeight> {
    if kernel.mode != Mode::L0 {
        return Err(Error::Precondition("c(y) needs the 𝓛₀-Martin kernel".into()));
    }
    let r = problem.op().remainder();
    let g1 = green_column(problem, Mode::L1, problem.x0())?;
    let density: Vec<f64> = r.iter().zip(kernel.kernel().iter()).map(|(a, b)| a * b).collect();
    let gp = green_potential(problem.grid(), &g1, &density)?;
    let unclamped = 1.0 - gp.total();
    Ok(CWeight { value: unclamped.clamp(0.0, 1.0), unclamped, potential: gp.value, layer: gp.layer })
}

/// One sample of `A/B` at the node nearest to `vertex + t·axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioSample {
    pub t: f64,
    pub node: usize,
    pub ratio: f64,
    /// `B` fell below `1e-300` at the node; `ratio` is then `NaN`.
    pub flagged: bool,
}

pub fn ratio_along_cone(
    grid: &GridDomain,
    field_a: &[f64],
    field_b: &[f64],
    cone: &ConeSpec,
    ts: &[f64],
) -> Result<Vec<RatioSample>> {
    if field_a.len() != grid.len() || field_b.len() != grid.len() {
        return Err(Error::FieldLength { expected: grid.len(), found: field_a.len().min(field_b.len()) });
    }
    ts.iter()
        .map(|&t| {
            let p = cone.vertex + cone.axis * t;
            let node = grid
                .nearest_node(&p)
                .ok_or_else(|| Error::Precondition(format!("no grid node near {p:?}")))?;
            let b = field_b[node];
            let flagged = !(b.abs() >= 1e-300);
            let ratio = if flagged { f64::NAN } else { field_a[node] / b };
            Ok(RatioSample { t, node, ratio, flagged })
        })
        .collect()
}

/// Piecewise-constant random Dirichlet data on `∂U ∖ ∂_# U` of a graph
/// chart: panels of width `r/4` along the side walls and the top, values
/// uniform in `[0.1, 1]`, zero on the graph part. Panels are attached to
/// positions, so the same data are seen at every grid spacing.
#[derive(Clone, Debug)]
pub struct PanelData {
    chart: GraphChart,
    width: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    top: Vec<f64>,
}

impl PanelData {
    pub fn random(chart: &GraphChart, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let width = 0.25 * chart.r();
        let side = math::ceil(2.0 * chart.rho() / width) as usize + 1;
        let across = math::ceil(2.0 * chart.r() / width) as usize + 1;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| 0.1 + 0.9 * math::unit_interval(&mut rng)).collect() };
        let left = draw(side);
        let right = draw(side);
        let top = draw(across);
        PanelData { chart: chart.clone(), width, left, right, top }
    }

    pub fn value(&self, p: &Point) -> f64 {
        let c = &self.chart;
        if c.on_graph_part(p) {
            return 0.0;
        }
        let panel = |table: &[f64], s: f64| {
            let k = math::floor(s / self.width).max(0.0) as usize;
            table[k.min(table.len() - 1)]
        };
        let eps = 1e-9 * c.rho();
        if p.y() >= c.rho() - eps {
            panel(&self.top, p.x() + c.r())
        } else if p.x() <= -c.r() + eps {
            panel(&self.left, p.y() + c.rho())
        } else if p.x() >= c.r() - eps {
            panel(&self.right, p.y() + c.rho())
        } else {
            0.0
        }
    }
}

/// Largest boundary Harnack ratios found over random pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarnackReport {
    /// `max (u(x)/u(A)) / (v(x)/v(A))` over `U ∩ T(1/2)` with `u`, `v` both `𝓛₁`-harmonic.
    pub constant: f64,
    /// The same with `u` `𝓛₀`-harmonic and `v` `𝓛₁`-harmonic, for `(v/v(A))/(u/u(A))`.
    pub mixed: f64,
    pub trials: usize,
    pub nodes: usize,
}

/// Boundary Harnack constants of a graph chart domain from `trials`
/// random pairs of positive solutions vanishing on `∂_# U`.
pub fn verify_boundary_harnack(problem: &DiscreteProblem, trials: usize, seed: u64) -> Result<HarnackReport> {
    let grid = problem.grid();
    let chart = grid
        .domain()
        .chart()
        .ok_or_else(|| Error::Unsupported("boundary Harnack checks need a Lipschitz graph chart domain".into()))?;
    let anchor = grid
        .nearest_node(&chart.anchor())
        .ok_or_else(|| Error::Precondition("no node near the anchor point A".into()))?;
    let window: Vec<usize> = (0..grid.len()).filter(|&i| chart.in_box(&grid.point(i), 0.5)).collect();
    let l0 = problem.system(Mode::L0)?;
    let l1 = problem.system(Mode::L1)?;
    let mut constant: f64 = 0.0;
    let mut mixed: f64 = 0.0;
    for trial in 0..trials {
        let du = PanelData::random(chart, seed, 2 * trial as u64);
        let dv = PanelData::random(chart, seed, 2 * trial as u64 + 1);
        let u1 = l1.solve_dirichlet(|p| du.value(p))?;
        let v1 = l1.solve_dirichlet(|p| dv.value(p))?;
        let u0 = l0.solve_dirichlet(|p| du.value(p))?;
        constant = constant.max(worst_ratio(&u1, &v1, anchor, &window));
        mixed = mixed.max(worst_ratio(&v1, &u0, anchor, &window));
    }
    Ok(HarnackReport { constant, mixed, trials, nodes: window.len() })
}

/// `max_x (u(x)/u(A)) / (v(x)/v(A))`.
pub(crate) fn worst_ratio(u: &[f64], v: &[f64], anchor: usize, nodes: &[usize]) -> f64 {
    let (ua, va) = (u[anchor], v[anchor]);
    nodes
        .iter()
        .map(|&i| (u[i] / ua) / (v[i] / va))
        .fold(0.0, f64::max)
}
