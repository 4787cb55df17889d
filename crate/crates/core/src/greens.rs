//! Discrete Green functions, Green potentials, the resolvent identity and
//! harmonic measure.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::math;
use crate::operator::{DiscreteProblem, Field, GridDomain, Mode};

/// Column `x ↦ G(x, pole)` of the discrete Green function, scaled by `h^{-N}`
/// so that it approximates the continuum kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenField {
    pub pole: usize,
    pub mode: Mode,
    pub values: Field,
}

impl GreenField {
    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }
}

/// Solves with the discrete Dirac mass `h^{-N} e_pole`.
pub fn green_column(problem: &DiscreteProblem, mode: Mode, pole: usize) -> Result<GreenField> {
    let grid = problem.grid();
    if pole >= grid.len() {
        return Err(Error::InvalidPole(format!("pole {pole} is not an interior node ({} nodes)", grid.len())));
    }
    let mut rhs = vec![0.0; grid.len()];
    rhs[pole] = 1.0 / grid.cell_volume();
    let values = problem.system(mode)?.solve(&rhs)?;
    Ok(GreenField { pole, mode, values })
}

/// `h^N Σ G(x₀, x) f(x)`, split into the part from nodes with `δ ≥ 2h`
/// (`value`) and the near-boundary layer `δ < 2h` (`layer`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenPotential {
    pub value: f64,
    pub layer: f64,
}

impl GreenPotential {
    /// Including the layer.
    pub fn total(&self) -> f64 {
        self.value + self.layer
    }
}

pub fn green_potential(grid: &GridDomain, green: &GreenField, density: &[f64]) -> Result<GreenPotential> {
    if density.len() != grid.len() || green.values.len() != grid.len() {
        return Err(Error::FieldLength { expected: grid.len(), found: density.len().min(green.values.len()) });
    }
    if let Some(i) = density.iter().position(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::Precondition(format!("density at node {i} is negative or not finite")));
    }
    let mut inner = Vec::with_capacity(grid.len());
    let mut layer = Vec::new();
    for i in 0..grid.len() {
        let term = green.values[i] * density[i];
        if grid.in_layer(i) {
            layer.push(term);
        } else {
            inner.push(term);
        }
    }
    let w = grid.cell_volume();
    Ok(GreenPotential { value: w * math::pairwise_sum(&inner), layer: w * math::pairwise_sum(&layer) })
}

/// Largest nodewise relative discrepancy in `G⁰ = G¹ + G⁰ M_R G¹` for the
/// Green columns at `pole`, where `R = V − γ` (with `γ = 0` this is
/// `G = G^V + G M_V G^V`).
pub fn verify_resolvent_identity(problem: &DiscreteProblem, pole: usize) -> Result<f64> {
    let g1 = green_column(problem, Mode::L1, pole)?;
    let r = problem.op().remainder();
    if r.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let g0 = green_column(problem, Mode::L0, pole)?;
    let rhs: Vec<f64> = r.iter().zip(g1.values.iter()).map(|(a, b)| a * b).collect();
    let correction = problem.system(Mode::L0)?.solve(&rhs)?;
    let mut worst: f64 = 0.0;
    for i in 0..g0.values.len() {
        let lhs = g0.values[i];
        let rhs = g1.values[i] + correction[i];
        let err = (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// A set of boundary points, by membership predicate.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundarySet {
    All,
    /// Boundary points whose polar angle about the origin lies in
    /// `[from, to]` (radians, taken modulo 2π).
    Arc { from: f64, to: f64 },
    /// Boundary points within `radius` of `center`.
    Ball { center: Point, radius: f64 },
    /// Boundary points inside the axis-aligned box `lo ≤ x ≤ hi`.
    Box { lo: Point, hi: Point },
    Union(Vec<BoundarySet>),
}

impl BoundarySet {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            BoundarySet::All => true,
            BoundarySet::Arc { from, to } => {
                let tau = 2.0 * core::f64::consts::PI;
                let len = to - from;
                if len >= tau {
                    return true;
                }
                let th = math::atan2(p.y(), p.x());
                let d = th - from;
                let rel = d - tau * math::floor(d / tau);
                rel <= len
            }
            BoundarySet::Ball { center, radius } => p.dist(center) <= *radius,
            BoundarySet::Box { lo, hi } => (0..3).all(|k| p.0[k] >= lo.0[k] && p.0[k] <= hi.0[k]),
            BoundarySet::Union(sets) => sets.iter().any(|s| s.contains(p)),
        }
    }
}

/// `𝓛₀`-harmonic extension of the indicator of a boundary set.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicMeasure {
    pub values: Field,
    /// Set when the boundary set meets no boundary link of the grid.
    pub warning: Option<String>,
}

pub fn harmonic_measure(problem: &DiscreteProblem, set: &BoundarySet) -> Result<HarmonicMeasure> {
    let system = problem.system(Mode::L0)?;
    if !system.ghosts().iter().any(|g| set.contains(&g.point)) {
        return Ok(HarmonicMeasure {
            values: Field::zeros(problem.grid()),
            warning: Some("boundary set is empty at grid resolution; harmonic measure is zero".into()),
        });
    }
    let values = system.solve_dirichlet(|p| if set.contains(p) { 1.0 } else { 0.0 })?;
    Ok(HarmonicMeasure { values, warning: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::operator::{EllipticOperator, PotentialSpec};

    fn square(h: f64, v: PotentialSpec) -> DiscreteProblem {
        let g = GridDomain::new(&DomainSpec::unit_square(), h).unwrap();
        let op = EllipticOperator::schrodinger(&g, &v, 1.0).unwrap();
        DiscreteProblem::new(g, op).unwrap()
    }

    #[test]
    fn zero_density_has_zero_potential() {
        let p = square(0.125, PotentialSpec::Zero);
        let g = green_column(&p, Mode::L1, p.x0()).unwrap();
        let gp = green_potential(p.grid(), &g, &Field::zeros(p.grid())).unwrap();
        assert_eq!(gp.total(), 0.0);
    }

    #[test]
    fn unit_density_gives_the_torsion_value() {
        let p = square(1.0 / 32.0, PotentialSpec::Zero);
        let g = green_column(&p, Mode::Laplacian, p.x0()).unwrap();
        let gp = green_potential(p.grid(), &g, &Field::constant(p.grid(), 1.0)).unwrap();
        let torsion = p.system(Mode::Laplacian).unwrap().solve(&vec![1.0; p.grid().len()]).unwrap();
        assert!((gp.total() - torsion[p.x0()]).abs() < 1e-12);
    }

    #[test]
    fn full_boundary_measure_is_one() {
        let p = square(1.0 / 16.0, PotentialSpec::Zero);
        let w = harmonic_measure(&p, &BoundarySet::All).unwrap();
        assert!(w.warning.is_none());
        assert!(w.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_boundary_set_warns() {
        let p = square(1.0 / 16.0, PotentialSpec::Zero);
        let set = BoundarySet::Ball { center: Point::xy(5.0, 5.0), radius: 0.1 };
        let w = harmonic_measure(&p, &set).unwrap();
        assert!(w.warning.is_some());
        assert_eq!(w.values.max(), 0.0);
    }

    #[test]
    fn arc_membership_wraps_around() {
        let arc = BoundarySet::Arc { from: 3.0, to: 3.5 };
        assert!(arc.contains(&Point::xy(-1.0, 0.0)));
        assert!(!arc.contains(&Point::xy(1.0, 0.0)));
    }
}
