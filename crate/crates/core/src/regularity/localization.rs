//! Localized weighted-energy inequality on a graph chart:
//! `u(ζ₁) ∫_{U_t} v² R ≤ C v(ζ₁) ∫_{U_t'} v R u`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kernels::PanelData;
use crate::math;
use crate::operator::{DiscreteProblem, Mode};

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationReport {
    /// Largest LHS/RHS over the trials.
    pub ratio: f64,
    pub ratios: Vec<f64>,
    /// Nodes in `U_t` and in `U_t'`.
    pub inner_nodes: usize,
    pub outer_nodes: usize,
}

/// `u` solves `𝓛₁ u = 0` and `v` solves `𝓛₀ v = 0`, both with random panel
/// data vanishing on the graph part; `ζ₁ = (0, (t + t')ρ/2)`. A trial with
/// both sides zero counts as ratio 0.
pub fn verify_weighted_energy_localization(
    problem: &DiscreteProblem,
    t: f64,
    t_outer: f64,
    trials: usize,
    seed: u64,
) -> Result<LocalizationReport> {
    if !(0.0 < t && t < t_outer && t_outer <= 1.0) {
        return Err(Error::Precondition(alloc::format!("need 0 < t < t' ≤ 1, got t = {t}, t' = {t_outer}")));
    }
    let grid = problem.grid();
    let chart = grid
        .domain()
        .chart()
        .ok_or_else(|| Error::Unsupported("energy localization needs a Lipschitz graph chart domain".into()))?;
    let zeta = Point::xy(0.0, 0.5 * (t + t_outer) * chart.rho());
    let z = grid
        .nearest_node(&zeta)
        .ok_or_else(|| Error::Precondition("no node near ζ₁".into()))?;
    let inner: Vec<usize> = (0..grid.len()).filter(|&i| chart.in_box(&grid.point(i), t)).collect();
    let outer: Vec<usize> = (0..grid.len()).filter(|&i| chart.in_box(&grid.point(i), t_outer)).collect();
    let r = problem.op().remainder();
    let w = grid.cell_volume();
    let l0 = problem.system(Mode::L0)?;
    let l1 = problem.system(Mode::L1)?;
    let mut ratios = Vec::with_capacity(trials);
    for trial in 0..trials {
        let du = PanelData::random(chart, seed, 2 * trial as u64);
        let dv = PanelData::random(chart, seed, 2 * trial as u64 + 1);
        let u = l1.solve_dirichlet(|p| du.value(p))?;
        let v = l0.solve_dirichlet(|p| dv.value(p))?;
        let lhs_terms: Vec<f64> = inner.iter().map(|&i| w * v[i] * v[i] * r[i]).collect();
        let rhs_terms: Vec<f64> = outer.iter().map(|&i| w * v[i] * r[i] * u[i]).collect();
        let lhs = u[z] * math::pairwise_sum(&lhs_terms);
        let rhs = v[z] * math::pairwise_sum(&rhs_terms);
        ratios.push(if lhs == 0.0 { 0.0 } else { lhs / rhs });
    }
    let ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LocalizationReport { ratio, ratios, inner_nodes: inner.len(), outer_nodes: outer.len() })
}
