//! Planar (and coarse 3D) Lipschitz domains: exact distance to the
//! boundary, pseudo-normals, truncated cones and cone-union subdomains.

mod cone;
mod domain;
mod polygon;

use core::ops::{Add, Mul, Neg, Sub};

pub use cone::{build_cone, cone_union_subdomain, BoundaryPoint, ConeSpec};
pub use domain::{distance_to_boundary, ConeUnion, DomainKind, DomainSpec, GraphChart};
pub use polygon::{point_segment_distance, Polygon};

use crate::math;

/// A point of ℝ² or ℝ³. Planar points keep `z = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; 3]);

    pub const fn xy(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    pub const fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    pub fn from_slice(c: &[f64]) -> Self {
        let mut p = [0.0; 3];
        for (dst, src) in p.iter_mut().zip(c) {
            *dst = *src;
        }
        Point(p)
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    #[inline]
    pub fn dot(&self, o: &Point) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    #[inline]
    pub fn dist(&self, o: &Point) -> f64 {
        (*self - *o).norm()
    }

    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }

    /// Counterclockwise rotation by a right angle in the xy-plane.
    #[inline]
    pub fn perp(&self) -> Point {
        Point::xy(-self.0[1], self.0[0])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Orientation of the triangle (a, b, c): positive when counterclockwise.
#[inline]
pub(crate) fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x())
}
