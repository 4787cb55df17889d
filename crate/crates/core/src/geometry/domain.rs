use alloc::format;
use alloc::vec::Vec;

use super::polygon::{point_segment_distance, Polygon};
use super::{ConeSpec, Point};
use crate::error::{Error, Result};
use crate::math;

/// The bottom of a Lipschitz graph chart `U_f(r, ρ) = {|x'| < r, f(x') < x_N < ρ}`,
/// stored as the polyline through the samples of `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphChart {
    r: f64,
    rho: f64,
    xs: Vec<f64>,
    fs: Vec<f64>,
    lip: f64,
    polygon: Polygon,
}

impl GraphChart {
    /// `samples` are values of `f` on a uniform grid of `[-r, r]` (endpoints included).
    pub fn new(r: f64, rho: f64, samples: &[f64]) -> Result<Self> {
        if !(r > 0.0 && rho > 0.0 && r.is_finite() && rho.is_finite()) {
            return Err(Error::InvalidDomain("graph chart needs r > 0 and ρ > 0".into()));
        }
        if samples.len() < 2 || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain("graph chart needs at least 2 finite samples".into()));
        }
        let n = samples.len();
        let xs: Vec<f64> = (0..n)
            .map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64)
            .collect();
        Self::from_polyline(r, rho, xs, samples.to_vec())
    }

    fn from_polyline(r: f64, rho: f64, xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if 10.0 * r >= rho {
            return Err(Error::InvalidDomain(format!(
                "graph chart requires 10·r < ρ (r = {r}, ρ = {rho})"
            )));
        }
        let lip = xs
            .windows(2)
            .zip(fs.windows(2))
            .map(|(x, f)| ((f[1] - f[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max);
        let bound = rho / (10.0 * r);
        if lip > bound * (1.0 + 1e-12) {
            return Err(Error::InvalidDomain(format!(
                "Lipschitz constant {lip} of the graph exceeds ρ/(10r) = {bound}"
            )));
        }
        let f0 = interpolate(&xs, &fs, 0.0);
        if f0.abs() > 1e-12 * rho {
            return Err(Error::InvalidDomain(format!("graph must satisfy f(0) = 0, got {f0}")));
        }
        if fs.iter().any(|f| *f >= rho) {
            return Err(Error::InvalidDomain("graph must stay below the top wall x_N = ρ".into()));
        }
        let mut vertices: Vec<Point> = xs.iter().zip(&fs).map(|(x, f)| Point::xy(*x, *f)).collect();
        vertices.push(Point::xy(r, rho));
        vertices.push(Point::xy(-r, rho));
        let polygon = Polygon::new(vertices)?;
        Ok(GraphChart { r, rho, xs, fs, lip, polygon })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Lipschitz constant estimated from divided differences.
    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn f(&self, x: f64) -> f64 {
        interpolate(&self.xs, &self.fs, x)
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    /// The distinguished point `A = (0, ρ/2)`.
    pub fn anchor(&self) -> Point {
        Point::xy(0.0, 0.5 * self.rho)
    }

    /// Membership in the open box `T(t) = (-t r, t r) × (-t ρ, t ρ)`.
    pub fn in_box(&self, p: &Point, t: f64) -> bool {
        p.x().abs() < t * self.r && p.y().abs() < t * self.rho
    }

    /// Whether a boundary point belongs to `∂_# U = ∂U ∩ T(1)`, the graph part.
    pub fn on_graph_part(&self, p: &Point) -> bool {
        p.x().abs() < self.r && p.y() < self.rho && (p.y() - self.f(p.x())).abs() <= 1e-9 * self.rho
    }

    /// `U_t = U ∩ T(t)` as a chart in its own right (the same graph clipped to
    /// `[-t r, t r]`, with top wall at `t ρ`).
    pub fn sub_chart(&self, t: f64) -> Result<GraphChart> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidDomain(format!("sub-chart scale must lie in (0, 1], got {t}")));
        }
        let (r, rho) = (t * self.r, t * self.rho);
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        xs.push(-r);
        fs.push(self.f(-r));
        for (x, f) in self.xs.iter().zip(&self.fs) {
            if *x > -r && *x < r {
                xs.push(*x);
                fs.push(*f);
            }
        }
        xs.push(r);
        fs.push(self.f(r));
        GraphChart::from_polyline(r, rho, xs, fs)
    }
}

fn interpolate(xs: &[f64], fs: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return fs[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return fs[n - 1];
    }
    let i = xs.partition_point(|v| *v <= x).saturating_sub(1).min(n - 2);
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    fs[i] + t * (fs[i + 1] - fs[i])
}

/// Union of planar truncated cones, with its boundary resolved into the
/// pieces of cone edges that are not interior to the union.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeUnion {
    cones: Vec<ConeSpec>,
    pieces: Vec<(Point, Point)>,
}

impl ConeUnion {
    pub(crate) fn new(cones: Vec<ConeSpec>) -> Result<Self> {
        if cones.is_empty() {
            return Err(Error::InvalidDomain("cone union of an empty family".into()));
        }
        let triangles: Vec<[Point; 3]> = cones.iter().map(|c| c.triangle()).collect();
        let mut pieces = Vec::new();
        for (i, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (p, q) = (tri[e], tri[(e + 1) % 3]);
                let mut removed: Vec<(f64, f64)> = Vec::new();
                for (j, other) in triangles.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    if let Some(iv) = open_triangle_interval(&p, &q, other) {
                        removed.push(iv);
                    }
                    for f in 0..3 {
                        let (a, b) = (other[f], other[(f + 1) % 3]);
                        if let Some((iv, same_dir)) = collinear_overlap(&p, &q, &a, &b) {
                            if !same_dir || j < i {
                                removed.push(iv);
                            }
                        }
                    }
                }
                for (u0, u1) in complement_intervals(removed) {
                    let a = p + (q - p) * u0;
                    let b = p + (q - p) * u1;
                    if a.dist(&b) > 1e-14 {
                        pieces.push((a, b));
                    }
                }
            }
        }
        Ok(ConeUnion { cones, pieces })
    }

    pub fn cones(&self) -> &[ConeSpec] {
        &self.cones
    }

    /// Oriented boundary segments (counterclockwise around the union).
    pub fn boundary_pieces(&self) -> &[(Point, Point)] {
        &self.pieces
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.cones.iter().any(|c| c.contains(p))
    }

    pub fn boundary_distance(&self, p: &Point) -> f64 {
        self.pieces
            .iter()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Area from the oriented boundary (Green's theorem).
    pub fn area(&self) -> f64 {
        0.5 * self
            .pieces
            .iter()
            .map(|(a, b)| a.x() * b.y() - b.x() * a.y())
            .sum::<f64>()
    }
}

/// Parameter interval of `p + u (q - p)` inside the open triangle.
fn open_triangle_interval(p: &Point, q: &Point, tri: &[Point; 3]) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let d = *q - *p;
    for e in 0..3 {
        let (a, b) = (tri[e], tri[(e + 1) % 3]);
        // Inside means strictly left of each counterclockwise edge: n·(x - a) > 0.
        let n = (b - a).perp();
        let num = n.dot(&(*p - a));
        let den = n.dot(&d);
        if den.abs() < 1e-300 {
            if num <= 1e-14 * (b - a).norm() * (1.0 + p.norm()) {
                return None;
            }
        } else {
            let u = -num / den;
            if den > 0.0 {
                lo = lo.max(u);
            } else {
                hi = hi.min(u);
            }
        }
    }
    (hi - lo > 1e-12).then_some((lo, hi))
}

/// Overlap of segment `[p, q]` with a collinear segment `[a, b]`, as a
/// parameter interval on `[p, q]`, plus whether the directions agree.
fn collinear_overlap(p: &Point, q: &Point, a: &Point, b: &Point) -> Option<((f64, f64), bool)> {
    let d = *q - *p;
    let len = d.norm();
    let tol = 1e-12 * len.max(1.0);
    if super::orient(p, q, a).abs() > tol * len || super::orient(p, q, b).abs() > tol * len {
        return None;
    }
    let ua = (*a - *p).dot(&d) / (len * len);
    let ub = (*b - *p).dot(&d) / (len * len);
    let (lo, hi) = (ua.min(ub).max(0.0), ua.max(ub).min(1.0));
    (hi - lo > 1e-12).then_some(((lo, hi), ub > ua))
}

fn complement_intervals(mut removed: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    removed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut cursor = 0.0;
    for (lo, hi) in removed {
        if lo > cursor {
            out.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor < 1.0 {
        out.push((cursor, 1.0));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    /// The unit disk (N = 2) or unit ball (N = 3).
    UnitBall,
    /// Axis-aligned box `lo < x < hi`.
    Box { lo: Point, hi: Point },
    Polygon(Polygon),
    LipschitzGraph(GraphChart),
    ConeUnion(ConeUnion),
}

/// A bounded open domain in ℝ^N.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    dim: usize,
    kind: DomainKind,
}

impl DomainSpec {
    pub fn unit_disk() -> Self {
        DomainSpec { dim: 2, kind: DomainKind::UnitBall }
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(DomainSpec { dim, kind: DomainKind::UnitBall })
    }

    pub fn unit_square() -> Self {
        DomainSpec {
            dim: 2,
            kind: DomainKind::Box { lo: Point::xy(0.0, 0.0), hi: Point::xy(1.0, 1.0) },
        }
    }

    /// Axis-aligned box; `lo` and `hi` carry `dim` meaningful coordinates.
    pub fn axis_box(dim: usize, lo: Point, hi: Point) -> Result<Self> {
        check_dim(dim)?;
        for k in 0..dim {
            if !(lo.0[k] < hi.0[k]) || !lo.0[k].is_finite() || !hi.0[k].is_finite() {
                return Err(Error::InvalidDomain(format!("box has empty extent along axis {k}")));
            }
        }
        let mut lo = lo;
        let mut hi = hi;
        for k in dim..3 {
            lo.0[k] = 0.0;
            hi.0[k] = 0.0;
        }
        Ok(DomainSpec { dim, kind: DomainKind::Box { lo, hi } })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Ok(DomainSpec { dim: 2, kind: DomainKind::Polygon(Polygon::new(vertices)?) })
    }

    pub fn lipschitz_graph(r: f64, rho: f64, samples: &[f64]) -> Result<Self> {
        Ok(DomainSpec { dim: 2, kind: DomainKind::LipschitzGraph(GraphChart::new(r, rho, samples)?) })
    }

    pub fn from_chart(chart: GraphChart) -> Self {
        DomainSpec { dim: 2, kind: DomainKind::LipschitzGraph(chart) }
    }

    pub(crate) fn from_cone_union(union: ConeUnion) -> Self {
        DomainSpec { dim: 2, kind: DomainKind::ConeUnion(union) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn chart(&self) -> Option<&GraphChart> {
        match &self.kind {
            DomainKind::LipschitzGraph(c) => Some(c),
            _ => None,
        }
    }

    /// Polygonal outline, when the domain has one.
    pub fn outline(&self) -> Option<&Polygon> {
        match &self.kind {
            DomainKind::Polygon(p) => Some(p),
            DomainKind::LipschitzGraph(c) => Some(c.polygon()),
            _ => None,
        }
    }

    /// Open membership.
    pub fn contains(&self, p: &Point) -> bool {
        match &self.kind {
            DomainKind::UnitBall => p.norm_sq() < 1.0,
            DomainKind::Box { lo, hi } => (0..self.dim).all(|k| p.0[k] > lo.0[k] && p.0[k] < hi.0[k]),
            DomainKind::Polygon(poly) => poly.contains(p),
            DomainKind::LipschitzGraph(c) => c.polygon().contains(p),
            DomainKind::ConeUnion(u) => u.contains(p),
        }
    }

    /// Distance to the boundary for points of the closure (unchecked).
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        match &self.kind {
            DomainKind::UnitBall => (1.0 - p.norm()).abs(),
            DomainKind::Box { lo, hi } => (0..self.dim)
                .map(|k| (p.0[k] - lo.0[k]).abs().min((hi.0[k] - p.0[k]).abs()))
                .fold(f64::INFINITY, f64::min),
            DomainKind::Polygon(poly) => poly.boundary_distance(p),
            DomainKind::LipschitzGraph(c) => c.polygon().boundary_distance(p),
            DomainKind::ConeUnion(u) => u.boundary_distance(p),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.kind {
            DomainKind::UnitBall => {
                let mut lo = Point::ORIGIN;
                let mut hi = Point::ORIGIN;
                for k in 0..self.dim {
                    lo.0[k] = -1.0;
                    hi.0[k] = 1.0;
                }
                (lo, hi)
            }
            DomainKind::Box { lo, hi } => (*lo, *hi),
            DomainKind::Polygon(poly) => bbox_of(poly.vertices().iter().copied()),
            DomainKind::LipschitzGraph(c) => bbox_of(c.polygon().vertices().iter().copied()),
            DomainKind::ConeUnion(u) => {
                bbox_of(u.boundary_pieces().iter().flat_map(|(a, b)| [*a, *b]))
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::UnitBall => 2.0,
            DomainKind::Box { lo, hi } => hi.dist(lo),
            DomainKind::Polygon(poly) => max_pair_distance(poly.vertices()),
            DomainKind::LipschitzGraph(c) => max_pair_distance(c.polygon().vertices()),
            DomainKind::ConeUnion(u) => {
                let pts: Vec<Point> = u.boundary_pieces().iter().flat_map(|(a, b)| [*a, *b]).collect();
                max_pair_distance(&pts)
            }
        }
    }

    /// Closest boundary point, for points of the closure (planar domains and balls).
    pub fn project_to_boundary(&self, p: &Point) -> Point {
        match &self.kind {
            DomainKind::UnitBall => p.normalized().unwrap_or(Point::xy(1.0, 0.0)),
            DomainKind::Box { lo, hi } => {
                let mut best = (f64::INFINITY, *p);
                for k in 0..self.dim {
                    for (wall, d) in [(lo.0[k], (p.0[k] - lo.0[k]).abs()), (hi.0[k], (hi.0[k] - p.0[k]).abs())] {
                        if d < best.0 {
                            let mut q = *p;
                            q.0[k] = wall;
                            best = (d, q);
                        }
                    }
                }
                best.1
            }
            DomainKind::Polygon(poly) => closest_on_segments(p, poly.edges()),
            DomainKind::LipschitzGraph(c) => closest_on_segments(p, c.polygon().edges()),
            DomainKind::ConeUnion(u) => closest_on_segments(p, u.boundary_pieces().iter().copied()),
        }
    }

    /// Points on the boundary with spacing at most `spacing` (planar domains).
    pub fn boundary_samples(&self, spacing: f64) -> Result<Vec<Point>> {
        if !(spacing > 0.0) {
            return Err(Error::Precondition("boundary sampling needs a positive spacing".into()));
        }
        let mut out = Vec::new();
        let mut push_segments = |segs: &mut dyn Iterator<Item = (Point, Point)>| {
            for (a, b) in segs {
                let n = math::ceil(a.dist(&b) / spacing).max(1.0) as usize;
                for i in 0..n {
                    out.push(a + (b - a) * (i as f64 / n as f64));
                }
            }
        };
        match &self.kind {
            DomainKind::UnitBall if self.dim == 2 => {
                let n = math::ceil(2.0 * core::f64::consts::PI / spacing) as usize;
                for i in 0..n {
                    let th = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
                    out.push(Point::xy(math::cos(th), math::sin(th)));
                }
            }
            DomainKind::Box { lo, hi } if self.dim == 2 => {
                let c = [*lo, Point::xy(hi.x(), lo.y()), *hi, Point::xy(lo.x(), hi.y())];
                push_segments(&mut (0..4).map(|i| (c[i], c[(i + 1) % 4])));
            }
            DomainKind::Polygon(poly) => push_segments(&mut poly.edges()),
            DomainKind::LipschitzGraph(c) => push_segments(&mut c.polygon().edges()),
            DomainKind::ConeUnion(u) => push_segments(&mut u.boundary_pieces().iter().copied()),
            _ => {
                return Err(Error::Unsupported("boundary sampling is implemented for planar domains".into()))
            }
        }
        Ok(out)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("dimension must be 2 or 3, got {dim}")))
    }
}

fn bbox_of(points: impl Iterator<Item = Point>) -> (Point, Point) {
    let mut lo = Point::xy(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::xy(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for k in 0..2 {
            lo.0[k] = lo.0[k].min(p.0[k]);
            hi.0[k] = hi.0[k].max(p.0[k]);
        }
    }
    (lo, hi)
}

fn max_pair_distance(pts: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max(a.dist(b));
        }
    }
    d
}

fn closest_on_segments(p: &Point, segs: impl Iterator<Item = (Point, Point)>) -> Point {
    let mut best = (f64::INFINITY, *p);
    for (a, b) in segs {
        let ab = b - a;
        let len_sq = ab.norm_sq();
        let t = if len_sq > 0.0 { ((*p - a).dot(&ab) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
        let q = a + ab * t;
        let d = p.dist(&q);
        if d < best.0 {
            best = (d, q);
        }
    }
    best.1
}

/// Exact Euclidean distance from `x` to `∂Ω`; points outside the closure are rejected.
pub fn distance_to_boundary(domain: &DomainSpec, x: &Point) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::OutsideDomain(*x));
    }
    let d = domain.boundary_distance(x);
    if domain.contains(x) || d <= 1e-12 * domain.diameter() {
        Ok(if domain.contains(x) { d } else { 0.0 })
    } else {
        Err(Error::OutsideDomain(*x))
    }
}
