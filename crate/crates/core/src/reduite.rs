//! Discrete réduites: the smallest nonnegative supersolution lying above an
//! obstacle on a node set, the energy bound it controls, and the discrete
//! Hardy constant of a grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::greens::green_column;
use crate::math;
use crate::operator::sparse::{nested_dissection, CholeskyFactor, CsrMatrix};
use crate::operator::{assemble, DiscreteProblem, EllipticOperator, Field, GridDomain, Mode};

/// Obstacle `w` on the node set `A`; the réduite must dominate `w·1_A` and 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleProblem {
    pub mode: Mode,
    pub region: Vec<bool>,
    pub obstacle: Field,
}

impl ObstacleProblem {
    pub fn new(grid: &GridDomain, mode: Mode, region: Vec<bool>, obstacle: Field) -> Result<Self> {
        if region.len() != grid.len() {
            return Err(Error::FieldLength { expected: grid.len(), found: region.len() });
        }
        if obstacle.len() != grid.len() {
            return Err(Error::FieldLength { expected: grid.len(), found: obstacle.len() });
        }
        for (i, (&inside, &w)) in region.iter().zip(obstacle.iter()).enumerate() {
            if inside && !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Precondition(format!("obstacle value {w} at node {i} is not finite and nonnegative")));
            }
        }
        Ok(ObstacleProblem { mode, region, obstacle })
    }

    pub fn from_nodes(grid: &GridDomain, mode: Mode, nodes: &[usize], obstacle: Field) -> Result<Self> {
        let mut region = vec![false; grid.len()];
        for &i in nodes {
            if i >= grid.len() {
                return Err(Error::Precondition(format!("obstacle node {i} is out of range")));
            }
            region[i] = true;
        }
        Self::new(grid, mode, region, obstacle)
    }

    /// `ψ = w` on `A`, 0 elsewhere.
    pub fn lower_bound(&self) -> Vec<f64> {
        self.region
            .iter()
            .zip(self.obstacle.iter())
            .map(|(&inside, &w)| if inside { w } else { 0.0 })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReduiteOptions {
    /// Relaxation factor of the projected SOR sweeps.
    pub omega: f64,
    /// Nodewise complementarity residual accepted as converged.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Budget for the primal-dual active-set warm start (0 disables it).
    pub active_set_iterations: usize,
}

impl Default for ReduiteOptions {
    fn default() -> Self {
        ReduiteOptions { omega: 1.5, tolerance: 1e-9, max_sweeps: 200_000, active_set_iterations: 60 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReduiteResult {
    pub solution: Field,
    /// Nodes of `A` where `s = w` (within the tolerance).
    pub active: Vec<usize>,
    /// `h^N Σ s (A s)`, the Dirichlet form of the operator at `s`.
    pub energy: f64,
    /// `max_i |min((A s)_i / A_ii, s_i − ψ_i)|`.
    pub residual: f64,
    pub sweeps: usize,
    pub active_set_iterations: usize,
    pub converged: bool,
}

/// Nodewise complementarity residual `max_i |min((A s)_i / A_ii, s_i − ψ_i)|`.
pub fn complementarity_residual(a: &CsrMatrix, s: &[f64], psi: &[f64]) -> f64 {
    let as_ = a.apply(s);
    (0..a.n())
        .map(|i| math::abs(f64::min(as_[i] / a.get(i, i), s[i] - psi[i])))
        .fold(0.0, f64::max)
}

pub fn solve_reduite(problem: &DiscreteProblem, obstacle: &ObstacleProblem) -> Result<ReduiteResult> {
    solve_reduite_with(problem, obstacle, ReduiteOptions::default())
}

/// Minimizes `½ sᵀ A s` subject to `s ≥ ψ`. A primal-dual active-set
/// iteration supplies the starting point; projected SOR finishes until the
/// complementarity residual is below the tolerance. Running out of sweeps
/// returns the iterate with `converged = false`.
pub fn solve_reduite_with(problem: &DiscreteProblem, obstacle: &ObstacleProblem, options: ReduiteOptions) -> Result<ReduiteResult> {
    let grid = problem.grid();
    if obstacle.region.len() != grid.len() {
        return Err(Error::FieldLength { expected: grid.len(), found: obstacle.region.len() });
    }
    if !(options.omega > 0.0 && options.omega < 2.0) {
        return Err(Error::Precondition(format!("relaxation factor {} outside (0, 2)", options.omega)));
    }
    let a = problem.system(obstacle.mode)?.matrix();
    let psi = obstacle.lower_bound();
    let diag = a.diagonal();
    let mut s = vec![0.0; grid.len()];
    let mut pdas_iterations = 0;
    if psi.iter().any(|&p| p > 0.0) && options.active_set_iterations > 0 {
        let (x, it) = active_set(a, grid, &psi, &diag, options.active_set_iterations)?;
        s = x;
        pdas_iterations = it;
    }
    let tol = options.tolerance;
    let mut residual = complementarity_residual(a, &s, &psi);
    let mut sweeps = 0;
    while residual > tol && sweeps < options.max_sweeps {
        for _ in 0..8 {
            for i in 0..a.n() {
                let ri: f64 = a.row(i).map(|(j, v)| v * s[j]).sum();
                s[i] = (s[i] - options.omega * ri / diag[i]).max(psi[i]);
            }
            sweeps += 1;
        }
        residual = complementarity_residual(a, &s, &psi);
    }
    let active = (0..grid.len())
        .filter(|&i| obstacle.region[i] && s[i] - psi[i] <= tol)
        .collect();
    let as_ = a.apply(&s);
    let terms: Vec<f64> = s.iter().zip(&as_).map(|(x, y)| x * y).collect();
    let energy = grid.cell_volume() * math::pairwise_sum(&terms);
    Ok(ReduiteResult {
        solution: Field::from_vec(s),
        active,
        energy,
        residual,
        sweeps,
        active_set_iterations: pdas_iterations,
        converged: residual <= tol,
    })
}

/// Primal-dual active-set iteration for `min ½ sᵀAs, s ≥ ψ`. Each step fixes
/// `s = ψ` on the active set, solves on the rest and moves nodes whose
/// multiplier or constraint has the wrong sign.
fn active_set(a: &CsrMatrix, grid: &GridDomain, psi: &[f64], diag: &[f64], budget: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.n();
    let mut active: Vec<bool> = psi.iter().map(|&p| p > 0.0).collect();
    let mut s = vec![0.0; n];
    for it in 1..=budget {
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        for i in 0..n {
            s[i] = if active[i] { psi[i] } else { 0.0 };
        }
        if !free.is_empty() {
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| -a.row(i).filter(|(j, _)| active[*j]).map(|(j, v)| v * psi[j]).sum::<f64>())
                .collect();
            let sub = a.principal_submatrix(&free);
            let coords: Vec<[i32; 3]> = free.iter().map(|&i| grid.lattice(i)).collect();
            let factor = CholeskyFactor::factor(&sub, nested_dissection(&coords))?;
            let mut x = factor.solve(&rhs);
            let r: Vec<f64> = rhs.iter().zip(sub.apply(&x)).map(|(b, ax)| b - ax).collect();
            factor.solve(&r).iter().zip(x.iter_mut()).for_each(|(d, xi)| *xi += d);
            for (k, &i) in free.iter().enumerate() {
                s[i] = x[k];
            }
        }
        let lambda = a.apply(&s);
        let next: Vec<bool> = (0..n).map(|i| lambda[i] / diag[i] + (psi[i] - s[i]) > 0.0).collect();
        if next == active {
            return Ok((s, it));
        }
        active = next;
    }
    Ok((s, budget))
}

/// Numerator, réduite value and their ratio for one obstacle set.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBound {
    /// `h^N Σ_{x ∈ A, δ(x) ≥ 2h} (w(x)/δ(x))²`.
    pub numerator: f64,
    /// `R̂_w^A(ζ₀)`.
    pub reduite: f64,
    pub ratio: f64,
    /// The réduite vanished at grid precision while the numerator did not.
    pub flagged: bool,
    pub converged: bool,
}

/// `∫_A (w/δ)² / R̂_w^A(ζ₀)` with `w` the Green column of `mode` at `pole`.
pub fn verify_energy_bound(problem: &DiscreteProblem, mode: Mode, pole: usize, region: &[bool]) -> Result<EnergyBound> {
    let grid = problem.grid();
    if region.len() != grid.len() {
        return Err(Error::FieldLength { expected: grid.len(), found: region.len() });
    }
    if !region.iter().any(|&b| b) {
        return Ok(EnergyBound { numerator: 0.0, reduite: 0.0, ratio: 0.0, flagged: false, converged: true });
    }
    let w = green_column(problem, mode, pole)?.values;
    let delta = grid.delta();
    let terms: Vec<f64> = (0..grid.len())
        .filter(|&i| region[i] && !grid.in_layer(i))
        .map(|i| {
            let q = w[i] / delta[i];
            q * q
        })
        .collect();
    let numerator = grid.cell_volume() * math::pairwise_sum(&terms);
    let obstacle = ObstacleProblem::new(grid, mode, region.to_vec(), w)?;
    let result = solve_reduite(problem, &obstacle)?;
    let reduite = result.solution[pole];
    let flagged = reduite < 1e-300 && numerator > 0.0;
    let ratio = if numerator == 0.0 {
        0.0
    } else if flagged {
        f64::INFINITY
    } else {
        numerator / reduite
    };
    Ok(EnergyBound { numerator, reduite, ratio, flagged, converged: result.converged })
}

/// Best constant of the discrete Hardy inequality on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyEstimate {
    /// `1/λ_min`.
    pub constant: f64,
    /// Smallest eigenvalue of `K f = λ M f`.
    pub lambda: f64,
    /// Eigenvector estimate, normalized to `fᵀ M f = 1`.
    pub mode: Field,
    pub iterations: usize,
    /// `‖K f − λ M f‖ / ‖λ M f‖`.
    pub residual: f64,
}

/// Iteration budget of the Hardy eigenvalue solve.
pub const HARDY_MAX_ITERATIONS: usize = 20_000;

/// `C_H = 1/λ_min` for the stiffness matrix `K` of `−Δ` against the mass
/// `M = diag(δ⁻²)` (both scaled by `h^N`), by inverse iteration.
pub fn estimate_hardy_constant(grid: &GridDomain) -> Result<HardyEstimate> {
    estimate_hardy_constant_with(grid, 1e-9, HARDY_MAX_ITERATIONS)
}

pub fn estimate_hardy_constant_with(grid: &GridDomain, tolerance: f64, max_iterations: usize) -> Result<HardyEstimate> {
    let system = assemble(grid, &EllipticOperator::laplacian(grid), Mode::Laplacian)?;
    let k = system.matrix();
    let m: Vec<f64> = grid.delta().iter().map(|d| 1.0 / (d * d)).collect();
    let n = grid.len();
    let m_norm = |x: &[f64]| math::sqrt(x.iter().zip(&m).map(|(v, w)| v * v * w).sum::<f64>());
    let mut x: Vec<f64> = grid.delta().to_vec();
    let s = m_norm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut lambda = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        let rhs: Vec<f64> = x.iter().zip(&m).map(|(v, w)| v * w).collect();
        let mut y = system.solve(&rhs)?.into_vec();
        let s = m_norm(&y);
        y.iter_mut().for_each(|v| *v /= s);
        let ky = k.apply(&y);
        let next = y.iter().zip(&ky).map(|(a, b)| a * b).sum::<f64>();
        let r: Vec<f64> = (0..n).map(|i| ky[i] - next * m[i] * y[i]).collect();
        let scale = math::sqrt((0..n).map(|i| { let t = next * m[i] * y[i]; t * t }).sum::<f64>());
        residual = math::sqrt(r.iter().map(|v| v * v).sum::<f64>()) / scale;
        let settled = math::abs(next - lambda) <= tolerance * next;
        lambda = next;
        x = y;
        if settled && residual <= math::sqrt(tolerance) {
            return Ok(HardyEstimate { constant: 1.0 / lambda, lambda, mode: Field::from_vec(x), iterations: it, residual });
        }
    }
    Err(Error::EigenNonConvergence { residual, iterations: max_iterations })
}

/// Hardy quotients `Σ f²/δ² / ⟨f, −Δ_h f⟩` of the given fields; every one is
/// at most the constant of [`estimate_hardy_constant`].
pub fn hardy_quotients(grid: &GridDomain, fields: &[Field]) -> Result<Vec<f64>> {
    let system = assemble(grid, &EllipticOperator::laplacian(grid), Mode::Laplacian)?;
    let k = system.matrix();
    fields
        .iter()
        .map(|f| {
            if f.len() != grid.len() {
                return Err(Error::FieldLength { expected: grid.len(), found: f.len() });
            }
            let kf = k.apply(f.values());
            let energy = math::pairwise_sum(&f.iter().zip(&kf).map(|(a, b)| a * b).collect::<Vec<_>>());
            let weighted =
                math::pairwise_sum(&f.iter().zip(grid.delta()).map(|(v, d)| v * v / (d * d)).collect::<Vec<_>>());
            Ok(if energy > 0.0 { weighted / energy } else { 0.0 })
        })
        .collect()
}
