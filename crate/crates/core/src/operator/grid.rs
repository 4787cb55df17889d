//! Interior lattice of a domain.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{distance_to_boundary, DomainSpec, Point};
use crate::math;

const ABSENT: u32 = u32::MAX;

/// Unit lattice offsets along each axis, for `dim` axes.
pub(crate) fn axis_offset(axis: usize, dir: i32) -> [i32; 3] {
    let mut o = [0; 3];
    o[axis] = dir;
    o
}

/// Interior nodes `x = h·(i, j[, k])` of a domain, with their exact boundary distances.
#[derive(Clone, Debug)]
pub struct GridDomain {
    domain: DomainSpec,
    h: f64,
    points: Vec<Point>,
    lattice: Vec<[i32; 3]>,
    delta: Vec<f64>,
    near_boundary: Vec<bool>,
    origin: [i32; 3],
    extent: [usize; 3],
    lookup: Vec<u32>,
}

impl GridDomain {
    pub fn new(domain: &DomainSpec, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::DegenerateGrid(format!("grid spacing must be positive, got {h}")));
        }
        let dim = domain.dim();
        let (lo, hi) = domain.bounding_box();
        let mut origin = [0i32; 3];
        let mut extent = [1usize; 3];
        for k in 0..dim {
            let a = math::floor(lo.0[k] / h) as i64 - 1;
            let b = math::ceil(hi.0[k] / h) as i64 + 1;
            if b - a > 1 << 20 {
                return Err(Error::DegenerateGrid(format!("grid spacing {h} is too fine")));
            }
            origin[k] = a as i32;
            extent[k] = (b - a + 1) as usize;
        }
        let total = extent[0] * extent[1] * extent[2];
        let mut lookup = vec![ABSENT; total];
        let mut points = Vec::new();
        let mut lattice = Vec::new();
        let mut delta = Vec::new();
        for c in 0..extent[2] {
            for b in 0..extent[1] {
                for a in 0..extent[0] {
                    let l = [origin[0] + a as i32, origin[1] + b as i32, origin[2] + c as i32];
                    let p = Point([l[0] as f64 * h, l[1] as f64 * h, l[2] as f64 * h]);
                    if !domain.contains(&p) {
                        continue;
                    }
                    // Nodes on the boundary up to rounding are boundary nodes.
                    let d = distance_to_boundary(domain, &p)?;
                    if !(d > 1e-9 * h) {
                        continue;
                    }
                    lookup[a + extent[0] * (b + extent[1] * c)] = points.len() as u32;
                    points.push(p);
                    lattice.push(l);
                    delta.push(d);
                }
            }
        }
        if points.len() < 9 {
            return Err(Error::DegenerateGrid(format!(
                "only {} interior nodes at h = {h}; at least 9 are required",
                points.len()
            )));
        }
        let mut grid = GridDomain {
            domain: domain.clone(),
            h,
            points,
            lattice,
            delta,
            near_boundary: Vec::new(),
            origin,
            extent,
            lookup,
        };
        grid.near_boundary = (0..grid.len())
            .map(|i| (0..dim).any(|k| [-1, 1].iter().any(|&d| grid.neighbor(i, axis_offset(k, d)).is_none())))
            .collect();
        Ok(grid)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `h^N`, the volume carried by one node.
    pub fn cell_volume(&self) -> f64 {
        math::powi(self.h, self.dim() as i32)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn lattice(&self, i: usize) -> [i32; 3] {
        self.lattice[i]
    }

    pub fn lattice_coords(&self) -> &[[i32; 3]] {
        &self.lattice
    }

    /// `δ_Ω` at every node.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// Whether some axis neighbor of node `i` lies outside the domain.
    pub fn is_boundary_adjacent(&self, i: usize) -> bool {
        self.near_boundary[i]
    }

    /// Nodes in the layer `δ < 2h`.
    pub fn in_layer(&self, i: usize) -> bool {
        self.delta[i] < 2.0 * self.h
    }

    pub fn node_at(&self, l: [i32; 3]) -> Option<usize> {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for k in 0..3 {
            let off = l[k] as i64 - self.origin[k] as i64;
            if off < 0 || off >= self.extent[k] as i64 {
                return None;
            }
            idx += off as usize * stride;
            stride *= self.extent[k];
        }
        match self.lookup[idx] {
            ABSENT => None,
            n => Some(n as usize),
        }
    }

    pub fn neighbor(&self, i: usize, offset: [i32; 3]) -> Option<usize> {
        let l = self.lattice[i];
        self.node_at([l[0] + offset[0], l[1] + offset[1], l[2] + offset[2]])
    }

    /// Lattice position `h·l` (whether or not it is a node).
    pub fn lattice_point(&self, l: [i32; 3]) -> Point {
        Point([l[0] as f64 * self.h, l[1] as f64 * self.h, l[2] as f64 * self.h])
    }

    /// Node closest to `p` (searched in the lattice neighborhood of `p`).
    pub fn nearest_node(&self, p: &Point) -> Option<usize> {
        let dim = self.dim();
        let mut base = [0i32; 3];
        for k in 0..dim {
            base[k] = math::round(p.0[k] / self.h) as i32;
        }
        let mut best: Option<(f64, usize)> = None;
        for reach in 0..=3i32 {
            let span = |k: usize| if k < dim { -reach..=reach } else { 0..=0 };
            for dz in span(2) {
                for dy in span(1) {
                    for dx in span(0) {
                        if let Some(n) = self.node_at([base[0] + dx, base[1] + dy, base[2] + dz]) {
                            let d = self.points[n].dist(p);
                            if best.is_none_or(|(bd, bn)| d < bd || (d == bd && n < bn)) {
                                best = Some((d, n));
                            }
                        }
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|b| b.1)
    }

    /// The node of largest `δ_Ω` (lowest index on ties).
    pub fn deepest_node(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.delta[i] > self.delta[best] {
                best = i;
            }
        }
        best
    }

    /// Where the segment from node `i` towards lattice offset `offset` leaves
    /// the domain: returns `θ ∈ (0, 1]` and the crossing point.
    pub fn crossing(&self, i: usize, offset: [i32; 3]) -> (f64, Point) {
        let a = self.points[i];
        let l = self.lattice[i];
        let b = self.lattice_point([l[0] + offset[0], l[1] + offset[1], l[2] + offset[2]]);
        if self.domain.contains(&b) {
            return (1.0, b);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..52 {
            let mid = 0.5 * (lo + hi);
            if self.domain.contains(&(a + (b - a) * mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = hi.max(1e-6);
        (theta, a + (b - a) * theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_has_interior_nodes_only() {
        let g = GridDomain::new(&DomainSpec::unit_square(), 0.25).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.delta().iter().all(|d| *d > 0.0));
        assert_eq!(g.point(g.deepest_node()), Point::xy(0.5, 0.5));
        assert!(!g.is_boundary_adjacent(g.deepest_node()));
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        assert!(matches!(
            GridDomain::new(&DomainSpec::unit_square(), 0.5),
            Err(Error::DegenerateGrid(_))
        ));
    }

    #[test]
    fn crossing_is_found_on_the_circle() {
        let g = GridDomain::new(&DomainSpec::unit_disk(), 0.3).unwrap();
        let i = g.nearest_node(&Point::xy(0.9, 0.0)).unwrap();
        let (theta, p) = g.crossing(i, [1, 0, 0]);
        assert!((p.norm() - 1.0).abs() < 1e-9);
        assert!((theta - (1.0 - 0.9) / 0.3).abs() < 1e-9);
    }
}
