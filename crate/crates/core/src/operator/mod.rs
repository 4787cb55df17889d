//! Finite-difference discretization of `−𝓛 + W` with Dirichlet conditions,
//! `𝓛 = Σ ∂ᵢ(aᵢⱼ ∂ⱼ ·)`, and the linear solves built on it.

pub(crate) mod grid;
mod potential;
pub mod sparse;

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use once_cell::race::OnceBox;
use core::ops::Deref;

pub use grid::GridDomain;
pub(crate) use grid::axis_offset;
pub use potential::{PotentialSpec, Region};
use sparse::{CholeskyFactor, CsrMatrix};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::math;

/// Scalar values on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    /// Checked against the node count and for finiteness.
    pub fn new(grid: &GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength { expected: grid.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("field value at node {i} is not finite")));
        }
        Ok(Field(values))
    }

    pub fn zeros(grid: &GridDomain) -> Self {
        Field(vec![0.0; grid.len()])
    }

    pub fn constant(grid: &GridDomain, c: f64) -> Self {
        Field(vec![c; grid.len()])
    }

    pub fn from_fn(grid: &GridDomain, f: impl Fn(usize, &Point) -> f64) -> Self {
        Field(grid.points().iter().enumerate().map(|(i, p)| f(i, p)).collect())
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field(self.0.iter().map(|v| v * c).collect())
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for Field {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Symmetric 3×3 matrix; only the leading `N×N` block is used.
pub type SymMatrix = [[f64; 3]; 3];

const IDENTITY: SymMatrix = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    Identity,
    Constant(SymMatrix),
    /// One matrix per node.
    Nodal(Vec<SymMatrix>),
}

impl Coefficients {
    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (k, v) in d.iter().enumerate().take(3) {
            m[k][k] = *v;
        }
        Coefficients::Constant(m)
    }

    pub fn at(&self, i: usize) -> &SymMatrix {
        match self {
            Coefficients::Identity => &IDENTITY,
            Coefficients::Constant(m) => m,
            Coefficients::Nodal(v) => &v[i],
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Coefficients::Identity => true,
            Coefficients::Constant(m) => *m == IDENTITY,
            Coefficients::Nodal(v) => v.iter().all(|m| *m == IDENTITY),
        }
    }

    fn has_cross_terms(&self, dim: usize) -> bool {
        let cross = |m: &SymMatrix| (0..dim).any(|k| (k + 1..dim).any(|l| m[k][l] != 0.0));
        match self {
            Coefficients::Identity => false,
            Coefficients::Constant(m) => cross(m),
            Coefficients::Nodal(v) => v.iter().any(cross),
        }
    }

    /// Smallest `c₀ ≥ 1` with every nodal spectrum in `[c₀⁻¹, c₀]`.
    fn ellipticity(&self, grid: &GridDomain) -> Result<f64> {
        let dim = grid.dim();
        let check = |m: &SymMatrix| -> Result<f64> {
            for k in 0..dim {
                for l in 0..dim {
                    if !m[k][l].is_finite() || m[k][l] != m[l][k] {
                        return Err(Error::InvalidOperator("coefficient matrix must be finite and symmetric".into()));
                    }
                }
            }
            let (lo, hi) = sym_eigen_range(m, dim);
            if !(lo > 0.0) {
                return Err(Error::InvalidOperator(format!("coefficient matrix is not positive definite (λ_min = {lo})")));
            }
            Ok(hi.max(1.0 / lo).max(1.0))
        };
        match self {
            Coefficients::Identity => Ok(1.0),
            Coefficients::Constant(m) => check(m),
            Coefficients::Nodal(v) => {
                if v.len() != grid.len() {
                    return Err(Error::FieldLength { expected: grid.len(), found: v.len() });
                }
                v.iter().try_fold(1.0f64, |c, m| Ok(c.max(check(m)?)))
            }
        }
    }
}

/// Extreme eigenvalues of the leading `dim×dim` block of a symmetric matrix.
fn sym_eigen_range(m: &SymMatrix, dim: usize) -> (f64, f64) {
    if dim == 2 {
        let mean = 0.5 * (m[0][0] + m[1][1]);
        let r = math::hypot(0.5 * (m[0][0] - m[1][1]), m[0][1]);
        return (mean - r, mean + r);
    }
    // Trigonometric solution of the characteristic cubic.
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        let d = [m[0][0], m[1][1], m[2][2]];
        return (d.iter().copied().fold(f64::INFINITY, f64::min), d.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let p2 = (m[0][0] - q) * (m[0][0] - q) + (m[1][1] - q) * (m[1][1] - q) + (m[2][2] - q) * (m[2][2] - q) + 2.0 * p1;
    let p = math::sqrt(p2 / 6.0);
    let mut b = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            b[k][l] = (m[k][l] - if k == l { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (0.5 * det).clamp(-1.0, 1.0);
    let phi = math::atan2(math::sqrt(1.0 - r * r), r) / 3.0;
    let hi = q + 2.0 * p * math::cos(phi);
    let lo = q + 2.0 * p * math::cos(phi + 2.0 * core::f64::consts::PI / 3.0);
    (lo, hi)
}

/// `𝓛 − γ` and `𝓛 − V` with `0 ≤ γ ≤ V ≤ a δ⁻²`.
#[derive(Clone, Debug)]
pub struct EllipticOperator {
    coefficients: Coefficients,
    gamma: Field,
    potential: Field,
    ellipticity: f64,
    bound: f64,
    boundary_correction: bool,
}

impl EllipticOperator {
    pub fn new(
        grid: &GridDomain,
        coefficients: Coefficients,
        gamma: &PotentialSpec,
        potential: &PotentialSpec,
        bound: f64,
    ) -> Result<Self> {
        let v = potential.evaluate_on(grid, bound)?;
        let g = gamma.evaluate_on(grid, bound)?;
        Self::from_fields(grid, coefficients, g, v, bound)
    }

    /// `Δ − V`.
    pub fn schrodinger(grid: &GridDomain, potential: &PotentialSpec, bound: f64) -> Result<Self> {
        Self::new(grid, Coefficients::Identity, &PotentialSpec::Zero, potential, bound)
    }

    /// `Δ` (no potential).
    pub fn laplacian(grid: &GridDomain) -> Self {
        EllipticOperator {
            coefficients: Coefficients::Identity,
            gamma: Field::zeros(grid),
            potential: Field::zeros(grid),
            ellipticity: 1.0,
            bound: 0.0,
            boundary_correction: false,
        }
    }

    pub fn from_fields(
        grid: &GridDomain,
        coefficients: Coefficients,
        gamma: Field,
        potential: Field,
        bound: f64,
    ) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::InvalidPotential(format!("potential bound must be finite and nonnegative, got {bound}")));
        }
        for f in [&gamma, &potential] {
            if f.len() != grid.len() {
                return Err(Error::FieldLength { expected: grid.len(), found: f.len() });
            }
        }
        potential::check_potential(grid, &potential, bound)?;
        potential::check_potential(grid, &gamma, bound)?;
        if let Some(i) = (0..grid.len()).find(|&i| gamma[i] > potential[i]) {
            return Err(Error::Precondition(format!(
                "γ exceeds V at node {i} ({} > {})",
                gamma[i], potential[i]
            )));
        }
        let ellipticity = coefficients.ellipticity(grid)?;
        Ok(EllipticOperator { coefficients, gamma, potential, ellipticity, bound, boundary_correction: false })
    }

    /// Same operator with another potential `V` (γ kept, so `γ ≤ V` is rechecked).
    pub fn with_potential(&self, grid: &GridDomain, potential: Field) -> Result<Self> {
        let mut op = Self::from_fields(grid, self.coefficients.clone(), self.gamma.clone(), potential, self.bound)?;
        op.boundary_correction = self.boundary_correction;
        Ok(op)
    }

    /// Same operator with another `γ`.
    pub fn with_gamma(&self, grid: &GridDomain, gamma: Field) -> Result<Self> {
        let mut op = Self::from_fields(grid, self.coefficients.clone(), gamma, self.potential.clone(), self.bound)?;
        op.boundary_correction = self.boundary_correction;
        Ok(op)
    }

    /// Treat links to missing neighbors at their true length `θh`
    /// (diagonal weight `1/(θh²)`); off by default.
    pub fn with_boundary_correction(mut self, on: bool) -> Self {
        self.boundary_correction = on;
        self
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn gamma(&self) -> &Field {
        &self.gamma
    }

    pub fn potential(&self) -> &Field {
        &self.potential
    }

    /// `R = V − γ`.
    pub fn remainder(&self) -> Field {
        Field(self.potential.iter().zip(self.gamma.iter()).map(|(v, g)| v - g).collect())
    }

    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn boundary_correction(&self) -> bool {
        self.boundary_correction
    }
}

/// Which operator a system discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `−𝓛 + γ`
    L0,
    /// `−𝓛 + V`
    L1,
    /// `−Δ`
    Laplacian,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::L0, Mode::L1, Mode::Laplacian];

    fn slot(self) -> usize {
        match self {
            Mode::L0 => 0,
            Mode::L1 => 1,
            Mode::Laplacian => 2,
        }
    }
}

/// Direct/iterative switch-over and tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Largest planar system factored directly.
    pub direct_limit_2d: usize,
    /// Largest 3D system factored directly.
    pub direct_limit_3d: usize,
    /// Relative residual required of every solve.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { direct_limit_2d: 1_000_000, direct_limit_3d: 40_000, tolerance: 1e-10, max_iterations: 20_000 }
    }
}

/// A link from a node to a lattice position outside the domain; Dirichlet
/// data `g` enter the right-hand side as `weight · g(point)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhostLink {
    pub node: u32,
    pub weight: f64,
    pub point: Point,
}

#[derive(Clone, Debug)]
enum Solver {
    Direct(CholeskyFactor),
    Iterative,
}

/// Assembled SPD system together with its factorization.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    mode: Mode,
    matrix: CsrMatrix,
    ghosts: Vec<GhostLink>,
    solver: Solver,
    options: SolverOptions,
}

/// Assembles `−𝓛 + γ`, `−𝓛 + V` or `−Δ` with homogeneous Dirichlet
/// conditions by node exclusion, and factors it.
pub fn assemble(grid: &GridDomain, op: &EllipticOperator, mode: Mode) -> Result<LinearSystem> {
    assemble_with(grid, op, mode, SolverOptions::default())
}

pub fn assemble_with(grid: &GridDomain, op: &EllipticOperator, mode: Mode, options: SolverOptions) -> Result<LinearSystem> {
    if op.gamma.len() != grid.len() {
        return Err(Error::FieldLength { expected: grid.len(), found: op.gamma.len() });
    }
    let dim = grid.dim();
    let h2 = grid.h() * grid.h();
    let coeffs = match mode {
        Mode::Laplacian => &Coefficients::Identity,
        _ => &op.coefficients,
    };
    let cross = coeffs.has_cross_terms(dim);
    let mut rows = Vec::with_capacity(grid.len());
    let mut ghosts = Vec::new();
    for i in 0..grid.len() {
        let ai = coeffs.at(i);
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(if cross { 9 } else { 2 * dim + 1 });
        let mut diag = 0.0;
        for k in 0..dim {
            for d in [-1, 1] {
                let off = axis_offset(k, d);
                match grid.neighbor(i, off) {
                    Some(j) => {
                        let face = 0.5 * (ai[k][k] + coeffs.at(j)[k][k]) / h2;
                        row.push((j as u32, -face));
                        diag += face;
                    }
                    None => {
                        let (theta, point) = grid.crossing(i, off);
                        let mut w = ai[k][k] / h2;
                        if op.boundary_correction {
                            w /= theta;
                        }
                        diag += w;
                        ghosts.push(GhostLink { node: i as u32, weight: w, point });
                    }
                }
            }
        }
        if cross {
            for k in 0..dim {
                for l in k + 1..dim {
                    for sk in [-1i32, 1] {
                        for sl in [-1i32, 1] {
                            let mut off = [0i32; 3];
                            off[k] = sk;
                            off[l] = sl;
                            let sign = (sk * sl) as f64;
                            match grid.neighbor(i, off) {
                                Some(j) => {
                                    let a = 0.5 * (ai[k][l] + coeffs.at(j)[k][l]);
                                    if a != 0.0 {
                                        row.push((j as u32, -sign * a / (2.0 * h2)));
                                    }
                                }
                                None => {
                                    if ai[k][l] != 0.0 {
                                        let (_, point) = grid.crossing(i, off);
                                        ghosts.push(GhostLink {
                                            node: i as u32,
                                            weight: sign * ai[k][l] / (2.0 * h2),
                                            point,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        diag += match mode {
            Mode::L0 => op.gamma[i],
            Mode::L1 => op.potential[i],
            Mode::Laplacian => 0.0,
        };
        row.push((i as u32, diag));
        rows.push(row);
    }
    let matrix = CsrMatrix::from_rows(rows);
    let limit = if dim == 2 { options.direct_limit_2d } else { options.direct_limit_3d };
    let solver = if grid.len() <= limit {
        let perm = sparse::nested_dissection(grid.lattice_coords());
        Solver::Direct(CholeskyFactor::factor(&matrix, perm)?)
    } else {
        Solver::Iterative
    };
    Ok(LinearSystem { mode, matrix, ghosts, solver, options })
}

impl LinearSystem {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.n()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.n() == 0
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.solver, Solver::Direct(_))
    }

    pub fn ghosts(&self) -> &[GhostLink] {
        &self.ghosts
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }

    /// Solves `A u = rhs` to relative residual `tolerance`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Field> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::FieldLength { expected: n, found: rhs.len() });
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("right-hand side is not finite".into()));
        }
        let bnorm = sparse::norm(rhs);
        if bnorm == 0.0 {
            return Ok(Field(vec![0.0; n]));
        }
        let tol = self.options.tolerance;
        match &self.solver {
            Solver::Direct(f) => {
                let mut x = f.solve(rhs);
                let mut r = vec![0.0; n];
                let mut rel = f64::INFINITY;
                for _ in 0..4 {
                    self.matrix.mul_vec(&x, &mut r);
                    r.iter_mut().zip(rhs).for_each(|(ri, bi)| *ri = bi - *ri);
                    rel = sparse::norm(&r) / bnorm;
                    if rel <= tol * 1e-2 {
                        break;
                    }
                    let dx = f.solve(&r);
                    x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
                }
                if rel > tol {
                    self.matrix.mul_vec(&x, &mut r);
                    r.iter_mut().zip(rhs).for_each(|(ri, bi)| *ri = bi - *ri);
                    rel = sparse::norm(&r) / bnorm;
                    if rel > tol {
                        return Err(Error::SolverFailure { residual: rel, iterations: 4 });
                    }
                }
                Ok(Field(x))
            }
            Solver::Iterative => {
                let (x, _) = sparse::pcg(&self.matrix, rhs, tol * 1e-1, self.options.max_iterations)?;
                Ok(Field(x))
            }
        }
    }

    /// Right-hand side contribution of Dirichlet data `g`.
    pub fn dirichlet_rhs(&self, g: impl Fn(&Point) -> f64) -> Vec<f64> {
        let mut b = vec![0.0; self.len()];
        for link in &self.ghosts {
            b[link.node as usize] += link.weight * g(&link.point);
        }
        b
    }

    /// Solution with boundary values `g` and zero source.
    pub fn solve_dirichlet(&self, g: impl Fn(&Point) -> f64) -> Result<Field> {
        self.solve(&self.dirichlet_rhs(g))
    }
}

/// A grid, an operator on it and lazily assembled systems for each mode,
/// with the distinguished interior node `x₀`.
#[derive(Debug)]
pub struct DiscreteProblem {
    grid: GridDomain,
    op: EllipticOperator,
    x0: usize,
    options: SolverOptions,
    systems: [OnceBox<LinearSystem>; 3],
}

impl DiscreteProblem {
    /// `x₀` defaults to the deepest node.
    pub fn new(grid: GridDomain, op: EllipticOperator) -> Result<Self> {
        if op.gamma.len() != grid.len() {
            return Err(Error::FieldLength { expected: grid.len(), found: op.gamma.len() });
        }
        let x0 = grid.deepest_node();
        Ok(DiscreteProblem { grid, op, x0, options: SolverOptions::default(), systems: Default::default() })
    }

    pub fn with_x0(mut self, node: usize) -> Result<Self> {
        if node >= self.grid.len() {
            return Err(Error::InvalidPole(format!("x₀ node {node} is not an interior node")));
        }
        self.x0 = node;
        Ok(self)
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self.systems = Default::default();
        self
    }

    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    pub fn op(&self) -> &EllipticOperator {
        &self.op
    }

    pub fn x0(&self) -> usize {
        self.x0
    }

    /// The potential entering `mode` (zero for the Laplacian).
    pub fn zeroth_order(&self, mode: Mode) -> Field {
        match mode {
            Mode::L0 => self.op.gamma.clone(),
            Mode::L1 => self.op.potential.clone(),
            Mode::Laplacian => Field::zeros(&self.grid),
        }
    }

    pub fn system(&self, mode: Mode) -> Result<&LinearSystem> {
        let cell = &self.systems[mode.slot()];
        if let Some(s) = cell.get() {
            return Ok(s);
        }
        cell.get_or_try_init(|| assemble_with(&self.grid, &self.op, mode, self.options).map(Box::new))
    }
}
