//! Almost-everywhere regularity of a boundary set `𝕂`: the harmonic-measure
//! weighted integral, the cone-union integral of `δ V`, and pointwise
//! classification of sampled points of `𝕂`.

use alloc::vec::Vec;

use super::{classify, Classification, ShellTable, Thresholds, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{build_cone, BoundaryPoint, ConeSpec, DomainSpec, Point};
use crate::greens::{green_column, harmonic_measure, BoundarySet};
use crate::operator::{DiscreteProblem, Mode};

/// Shells in these integrals are resolved down to the near-boundary layer:
/// there is no Martin pole to contaminate them.
pub const AE_RESOLUTION_CELLS: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct AeReport {
    /// `h^N Σ ω^𝕂(x) G(x₀, x) R(x)` in shells of the distance to `𝕂`.
    pub harmonic: ShellTable,
    /// `h^N Σ_{x ∈ Ω̃} δ(x) R(x)` in shells of `δ`.
    pub cone_union: ShellTable,
    pub harmonic_warning: Option<alloc::string::String>,
    pub points: Vec<Classification>,
}

impl AeReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.points.iter().filter(|c| c.verdict == verdict).count()
    }

    pub fn fraction(&self, verdict: Verdict) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.count(verdict) as f64 / self.points.len() as f64
    }
}

/// Points of `𝕂` on the boundary, `spacing` apart (planar domains).
pub fn set_samples(domain: &DomainSpec, set: &BoundarySet, spacing: f64) -> Result<Vec<Point>> {
    let pts: Vec<Point> = domain.boundary_samples(spacing)?.into_iter().filter(|p| set.contains(p)).collect();
    if pts.is_empty() {
        return Err(Error::Precondition("the boundary set has no sampled points".into()));
    }
    Ok(pts)
}

/// Cones with vertices along `𝕂` every `spacing`, each with slope `aperture`
/// and height `height` around the pseudo-normal. Points whose cone leaves
/// the domain are skipped. Spacings coarser than the grid step leave
/// uncovered wedges near `𝕂`, so pass `h` unless the union is known to close.
pub fn cone_family(
    domain: &DomainSpec,
    set: &BoundarySet,
    aperture: f64,
    height: f64,
    spacing: f64,
) -> Result<Vec<ConeSpec>> {
    let mut cones = Vec::new();
    for y in set_samples(domain, set, spacing)? {
        let Ok(bp) = BoundaryPoint::at(domain, y) else { continue };
        let c = build_cone(&bp, aperture, height)?;
        if c.contained_in(domain) {
            cones.push(c);
        }
    }
    if cones.is_empty() {
        return Err(Error::InvalidCone("no cone of the family fits in the domain".into()));
    }
    Ok(cones)
}

/// `samples` points of `𝕂` spread evenly along its sampled boundary.
pub fn spread_points(domain: &DomainSpec, set: &BoundarySet, samples: usize, spacing: f64) -> Result<Vec<BoundaryPoint>> {
    let pts = set_samples(domain, set, spacing)?;
    let n = samples.min(pts.len());
    (0..n)
        .map(|j| {
            let idx = ((2 * j + 1) * pts.len()) / (2 * n);
            BoundaryPoint::at(domain, pts[idx])
        })
        .collect()
}

/// Both integral conditions for `𝕂` plus pointwise classification at
/// `samples` points of `𝕂`.
pub fn ae_regularity_tests(
    problem: &DiscreteProblem,
    set: &BoundarySet,
    cones: &[ConeSpec],
    samples: usize,
    thresholds: &Thresholds,
) -> Result<AeReport> {
    thresholds.validate()?;
    if cones.is_empty() {
        return Err(Error::Precondition("the cone family is empty".into()));
    }
    let grid = problem.grid();
    let domain = grid.domain();
    let h = grid.h();
    let w = grid.cell_volume();
    let r = problem.op().remainder();
    let diam = domain.diameter();
    let resolution = AE_RESOLUTION_CELLS * h;

    let kset = set_samples(domain, set, 0.5 * h)?;
    let measure = harmonic_measure(problem, set)?;
    let g = green_column(problem, Mode::L0, problem.x0())?;
    let harmonic_entries = (0..grid.len()).map(|i| {
        let p = grid.point(i);
        let d = kset.iter().map(|k| k.dist(&p)).fold(f64::INFINITY, f64::min);
        (d, w * measure.values[i] * g.values[i] * r[i], grid.in_layer(i))
    });
    let harmonic = ShellTable::build(harmonic_entries, diam, resolution, diam, thresholds);

    let delta = grid.delta();
    let height = cones.iter().map(|c| c.height).fold(f64::INFINITY, f64::min);
    let inside: Vec<bool> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            cones.iter().any(|c| c.contains(&p))
        })
        .collect();
    let union_entries = (0..grid.len())
        .filter(|&i| inside[i])
        .map(|i| (delta[i], w * delta[i] * r[i], grid.in_layer(i)));
    let cone_union = ShellTable::build(union_entries, diam, resolution, height, thresholds);

    let mut points = Vec::with_capacity(samples);
    for bp in spread_points(domain, set, samples, h)? {
        points.push(classify(problem, &bp, thresholds)?);
    }
    Ok(AeReport { harmonic, cone_union, harmonic_warning: measure.warning, points })
}
