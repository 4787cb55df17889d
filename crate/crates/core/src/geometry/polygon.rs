use alloc::format;
use alloc::vec::Vec;

use super::{orient, Point};
use crate::error::{Error, Result};

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = *b - *a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((*p - *a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    p.dist(&(*a + ab * t))
}

/// Simple, counterclockwise polygon in the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite() || v.z() != 0.0) {
            return Err(Error::InvalidDomain("polygon vertices must be finite planar points".into()));
        }
        let poly = Polygon { vertices };
        if poly.signed_area() <= 0.0 {
            return Err(Error::InvalidDomain(
                "polygon must be positively (counterclockwise) oriented".into(),
            ));
        }
        if let Some((i, j)) = poly.find_self_intersection() {
            return Err(Error::InvalidDomain(format!(
                "polygon is not simple: edges {i} and {j} intersect"
            )));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            s += a.x() * b.y() - b.x() * a.y();
        }
        0.5 * s
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        let mut d = f64::INFINITY;
        for (a, b) in self.edges() {
            let e = point_segment_distance(p, &a, &b);
            if e < d {
                d = e;
            }
        }
        d
    }

    /// Crossing-number test; points on the boundary may land on either side,
    /// callers that care combine it with `boundary_distance`.
    pub fn winding_contains(&self, p: &Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y() > p.y()) != (b.y() > p.y()) {
                let xc = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
                if p.x() < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Open interior membership.
    pub fn contains(&self, p: &Point) -> bool {
        self.winding_contains(p) && self.boundary_distance(p) > 0.0
    }

    fn find_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if adjacent {
                    // Adjacent edges may only share their common vertex; a fold back
                    // along the same line is an overlap.
                    let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    let u = other_a - shared;
                    let v = other_b - shared;
                    if orient(&shared, &other_a, &other_b).abs() <= 1e-14 * u.norm() * v.norm()
                        && u.dot(&v) > 0.0
                    {
                        return Some((i, j));
                    }
                    continue;
                }
                if segments_intersect(&a, &b, &c, &d) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Closed-segment intersection test.
pub(crate) fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point, o: f64| {
        o == 0.0
            && r.x() >= p.x().min(q.x())
            && r.x() <= p.x().max(q.x())
            && r.y() >= p.y().min(q.y())
            && r.y() <= p.y().max(q.y())
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}
