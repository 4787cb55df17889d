use alloc::format;
use alloc::vec::Vec;

use super::domain::{ConeUnion, DomainKind, DomainSpec};
use super::Point;
use crate::error::{Error, Result};
use crate::math;

const RADIAL_SAMPLES: usize = 48;
const ANGULAR_SAMPLES: usize = 48;

/// Unit vector orthogonal to `axis` (3D helper).
fn orthonormal_frame(axis: &Point) -> (Point, Point) {
    let a = if axis.x().abs() < 0.9 { Point::xyz(1.0, 0.0, 0.0) } else { Point::xyz(0.0, 1.0, 0.0) };
    let e1 = (a - *axis * axis.dot(&a)).normalized().unwrap_or(Point::xyz(0.0, 0.0, 1.0));
    let e2 = Point::xyz(
        axis.y() * e1.z() - axis.z() * e1.y(),
        axis.z() * e1.x() - axis.x() * e1.z(),
        axis.x() * e1.y() - axis.y() * e1.x(),
    );
    (e1, e2)
}

/// Unit directions sampling the circle (2D) or sphere (3D).
fn sphere_directions(dim: usize, n: usize) -> Vec<Point> {
    let mut out = Vec::new();
    if dim == 2 {
        for i in 0..n {
            let th = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
            out.push(Point::xy(math::cos(th), math::sin(th)));
        }
    } else {
        // Fibonacci sphere.
        let m = n * n / 4;
        let golden = core::f64::consts::PI * (3.0 - math::sqrt(5.0));
        for i in 0..m {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
            let rad = math::sqrt(1.0 - z * z);
            let th = golden * i as f64;
            out.push(Point::xyz(rad * math::cos(th), rad * math::sin(th), z));
        }
    }
    out
}

/// Whether `C(y, ν, η) = {y + t(ν + v) : 0 < t ≤ η, ‖v‖ ≤ η}` lies in Ω
/// (sampled on its boundary, plus an exact vertex test for polygons).
fn pseudo_cone_contained(domain: &DomainSpec, y: &Point, nu: &Point, eta: f64) -> bool {
    if !(eta > 0.0) {
        return false;
    }
    let dirs = sphere_directions(domain.dim(), ANGULAR_SAMPLES);
    for i in 0..RADIAL_SAMPLES {
        // Geometric in t so the vertex region is resolved.
        let t = eta * math::powf(1e-6, i as f64 / (RADIAL_SAMPLES - 1) as f64);
        for v in &dirs {
            let p = *y + (*nu + *v * eta) * t;
            if !domain.contains(&p) {
                return false;
            }
        }
        if !domain.contains(&(*y + *nu * t)) {
            return false;
        }
    }
    if let Some(poly) = domain.outline() {
        for q in poly.vertices() {
            if q.dist(y) < 1e-12 {
                continue;
            }
            // q ∈ C iff min over t ∈ (0, η] of |q - y - tν|² - (tη)² ≤ 0.
            let d = *q - *y;
            let a = 1.0 - eta * eta;
            let b = d.dot(nu);
            let g = |t: f64| (d - *nu * t).norm_sq() - t * t * eta * eta;
            let mut best = g(eta);
            if a > 0.0 {
                let t = (b / a).clamp(1e-300, eta);
                best = best.min(g(t));
            }
            if best < 0.0 {
                return false;
            }
        }
    }
    true
}

/// A boundary point with a pseudo-normal and the margin of its admissible cone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub y: Point,
    pub nu: Point,
    pub eta: f64,
}

impl BoundaryPoint {
    /// Validates an explicit pseudo-normal and margin.
    pub fn new(domain: &DomainSpec, y: Point, nu: Point, eta: f64) -> Result<Self> {
        check_on_boundary(domain, &y)?;
        let nu = nu
            .normalized()
            .ok_or_else(|| Error::InvalidBoundaryPoint("pseudo-normal must be nonzero".into()))?;
        if !(eta > 0.0) {
            return Err(Error::InvalidBoundaryPoint(format!("cone margin must be positive, got {eta}")));
        }
        if !pseudo_cone_contained(domain, &y, &nu, eta) {
            return Err(Error::InvalidBoundaryPoint(format!(
                "the cone C(y, ν, {eta}) at {y:?} leaves the domain"
            )));
        }
        Ok(BoundaryPoint { y, nu, eta })
    }

    /// Pseudo-normal from the domain geometry (inward normal on faces and
    /// edges, bisector at corners) and margin set to half the largest
    /// admissible value found by bisection.
    pub fn at(domain: &DomainSpec, y: Point) -> Result<Self> {
        check_on_boundary(domain, &y)?;
        let nu = pseudo_normal(domain, &y)?;
        let eta_max = largest_margin(domain, &y, &nu)?;
        Ok(BoundaryPoint { y, nu, eta: 0.5 * eta_max })
    }

    /// The point `y + t ν`.
    pub fn along(&self, t: f64) -> Point {
        self.y + self.nu * t
    }
}

fn check_on_boundary(domain: &DomainSpec, y: &Point) -> Result<()> {
    if !y.is_finite() || domain.boundary_distance(y) > 1e-9 * domain.diameter() {
        return Err(Error::InvalidBoundaryPoint(format!("{y:?} is not on the boundary")));
    }
    Ok(())
}

/// Largest `η ∈ (0, 1]` (to bisection precision) with `C(y, ν, η) ⊂ Ω`.
pub(crate) fn largest_margin(domain: &DomainSpec, y: &Point, nu: &Point) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if pseudo_cone_contained(domain, y, nu, hi) {
        return Ok(hi);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if pseudo_cone_contained(domain, y, nu, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(Error::InvalidBoundaryPoint(format!(
            "no admissible cone at {y:?} along {nu:?}"
        )));
    }
    Ok(lo)
}

fn pseudo_normal(domain: &DomainSpec, y: &Point) -> Result<Point> {
    let tol = 1e-9 * domain.diameter();
    let bad = || Error::InvalidBoundaryPoint(format!("no pseudo-normal at {y:?}"));
    match domain.kind() {
        DomainKind::UnitBall => Ok(-y.normalized().ok_or_else(bad)?),
        DomainKind::Box { lo, hi } => {
            let mut n = Point::ORIGIN;
            for k in 0..domain.dim() {
                if (y.0[k] - lo.0[k]).abs() <= tol {
                    n.0[k] += 1.0;
                }
                if (hi.0[k] - y.0[k]).abs() <= tol {
                    n.0[k] -= 1.0;
                }
            }
            n.normalized().ok_or_else(bad)
        }
        DomainKind::Polygon(_) | DomainKind::LipschitzGraph(_) => {
            let poly = domain.outline().ok_or_else(bad)?;
            let mut n = Point::ORIGIN;
            for (a, b) in poly.edges() {
                if super::point_segment_distance(y, &a, &b) <= tol {
                    n = n + (b - a).perp().normalized().ok_or_else(bad)?;
                }
            }
            n.normalized().ok_or_else(bad)
        }
        DomainKind::ConeUnion(_) => Err(Error::Unsupported(
            "pseudo-normals on cone-union subdomains".into(),
        )),
    }
}

/// Truncated cone `{x : 0 < (x-y)·ν < ℓ, |(x-y) - ((x-y)·ν)ν| < K (x-y)·ν}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeSpec {
    pub vertex: Point,
    pub axis: Point,
    pub aperture: f64,
    pub height: f64,
    /// `η` such that `∪_{x∈C} B(x, η|x - vertex|) ⊆ Ω`; zero when not established.
    pub inner_margin: f64,
    pub dim: usize,
}

impl ConeSpec {
    pub fn contains(&self, p: &Point) -> bool {
        let d = *p - self.vertex;
        let s = d.dot(&self.axis);
        if !(s > 0.0 && s < self.height) {
            return false;
        }
        let lateral = (d - self.axis * s).norm();
        lateral < self.aperture * s
    }

    /// Half-opening angle.
    pub fn half_angle(&self) -> f64 {
        math::atan(self.aperture)
    }

    pub fn volume(&self) -> f64 {
        if self.dim == 2 {
            self.aperture * self.height * self.height
        } else {
            core::f64::consts::PI * self.aperture * self.aperture * self.height * self.height * self.height / 3.0
        }
    }

    /// Counterclockwise triangle of a planar cone.
    pub fn triangle(&self) -> [Point; 3] {
        let side = self.axis.perp() * (self.aperture * self.height);
        let top = self.vertex + self.axis * self.height;
        [self.vertex, top - side, top + side]
    }

    /// Sample points of the cone (polar around the vertex, geometric in radius).
    pub fn sample_points(&self, radial: usize, angular: usize) -> Vec<Point> {
        let mut out = Vec::new();
        let phi_max = self.half_angle();
        let (e1, e2) = if self.dim == 2 {
            (self.axis.perp(), Point::ORIGIN)
        } else {
            orthonormal_frame(&self.axis)
        };
        let azimuths = if self.dim == 2 { 2 } else { angular };
        for j in 0..angular {
            let phi = phi_max * (j as f64 + 0.5) / angular as f64 * 0.999;
            let rmax = self.height / math::cos(phi) * 0.999;
            for a in 0..azimuths {
                let dir_perp = if self.dim == 2 {
                    if a == 0 { e1 } else { -e1 }
                } else {
                    let th = 2.0 * core::f64::consts::PI * a as f64 / azimuths as f64;
                    e1 * math::cos(th) + e2 * math::sin(th)
                };
                let dir = self.axis * math::cos(phi) + dir_perp * math::sin(phi);
                for i in 0..radial {
                    let r = rmax * math::powf(1e-4, i as f64 / (radial - 1).max(1) as f64);
                    out.push(self.vertex + dir * r);
                }
            }
        }
        out
    }

    /// Sampled containment of the cone in Ω.
    pub fn contained_in(&self, domain: &DomainSpec) -> bool {
        self.sample_points(RADIAL_SAMPLES, ANGULAR_SAMPLES)
            .iter()
            .all(|p| domain.contains(p))
    }

    /// `inf_{x∈C} δ_Ω(x)/|x - vertex|`, the largest admissible fattening margin (sampled).
    pub fn fattening_margin(&self, domain: &DomainSpec) -> f64 {
        self.sample_points(RADIAL_SAMPLES, ANGULAR_SAMPLES)
            .iter()
            .map(|p| {
                if domain.contains(p) {
                    domain.boundary_distance(p) / p.dist(&self.vertex)
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Same cone with `inner_margin` set to half the sampled fattening margin.
    pub fn strictly_inner(mut self, domain: &DomainSpec) -> Result<Self> {
        let m = self.fattening_margin(domain);
        if !(m > 0.0) {
            return Err(Error::InvalidCone("cone is not strictly inner for the domain".into()));
        }
        self.inner_margin = 0.5 * m;
        Ok(self)
    }
}

/// Cone with vertex `y`, axis `ν`, slope `K` and height `ℓ`.
pub fn build_cone(point: &BoundaryPoint, aperture: f64, height: f64) -> Result<ConeSpec> {
    if !(height > 0.0) || !height.is_finite() {
        return Err(Error::InvalidCone(format!("cone height must be positive, got {height}")));
    }
    if !(aperture > 0.0) || !aperture.is_finite() {
        return Err(Error::InvalidCone(format!("cone aperture must be positive, got {aperture}")));
    }
    let dim = if point.y.z() != 0.0 || point.nu.z() != 0.0 { 3 } else { 2 };
    Ok(ConeSpec {
        vertex: point.y,
        axis: point.nu,
        aperture,
        height,
        inner_margin: 0.0,
        dim,
    })
}

/// Union of the cones `C_y`, `y ∈ points`, as a planar subdomain of Ω.
pub fn cone_union_subdomain(
    domain: &DomainSpec,
    points: &[BoundaryPoint],
    aperture: f64,
    height: f64,
) -> Result<DomainSpec> {
    if points.is_empty() {
        return Err(Error::InvalidDomain("cone union over an empty point list".into()));
    }
    if domain.dim() != 2 {
        return Err(Error::Unsupported("cone-union subdomains are planar".into()));
    }
    let mut cones = Vec::with_capacity(points.len());
    for p in points {
        let c = build_cone(p, aperture, height)?;
        if !c.contained_in(domain) {
            return Err(Error::InvalidCone(format!("cone at {:?} is not contained in Ω", p.y)));
        }
        cones.push(c);
    }
    Ok(DomainSpec::from_cone_union(ConeUnion::new(cones)?))
}
