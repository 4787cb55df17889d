//! Potentials `V ≥ 0` and their evaluation on a grid.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::{Field, GridDomain};
use crate::error::{Error, Result};
use crate::geometry::{ConeSpec, Point};
use crate::math;

/// Support region of an indicator potential.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Ball { center: Point, radius: f64 },
    /// Axis-aligned box `lo < x < hi` (first `N` coordinates).
    Box { lo: Point, hi: Point },
    Cone(ConeSpec),
}

impl Region {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Region::Ball { center, radius } => p.dist(center) < *radius,
            Region::Box { lo, hi } => (0..3).all(|k| {
                (lo.0[k] == hi.0[k] && p.0[k] == lo.0[k]) || (p.0[k] > lo.0[k] && p.0[k] < hi.0[k])
            }),
            Region::Cone(c) => c.contains(p),
        }
    }
}

/// Symbolic description of a potential.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `κ`
    Constant(f64),
    /// `κ δ_Ω(x)^{-2}`
    Hardy(f64),
    /// `κ |x - y|^{-s}`
    PowerLaw { kappa: f64, s: f64, center: Point },
    /// `1_C · inner`
    ConeRestricted { inner: Box<PotentialSpec>, cone: ConeSpec },
    /// `κ · 1_region`
    Indicator { region: Region, kappa: f64 },
    /// `factor · inner`
    Scaled { factor: f64, inner: Box<PotentialSpec> },
}

impl PotentialSpec {
    /// `1_C |x - y|^{-s}` with `y` the cone vertex.
    pub fn cone_power_law(cone: ConeSpec, s: f64) -> Self {
        PotentialSpec::ConeRestricted {
            inner: Box::new(PotentialSpec::PowerLaw { kappa: 1.0, s, center: cone.vertex }),
            cone,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        PotentialSpec::Scaled { factor, inner: Box::new(self) }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Constant(k) | PotentialSpec::Hardy(k) => *k == 0.0,
            PotentialSpec::PowerLaw { kappa, .. } | PotentialSpec::Indicator { kappa, .. } => *kappa == 0.0,
            PotentialSpec::ConeRestricted { inner, .. } => inner.is_zero(),
            PotentialSpec::Scaled { factor, inner } => *factor == 0.0 || inner.is_zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidPotential(format!("{name} must be finite and nonnegative, got {v}")))
            }
        };
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant(k) | PotentialSpec::Hardy(k) => nonneg("κ", *k),
            PotentialSpec::PowerLaw { kappa, s, center } => {
                nonneg("κ", *kappa)?;
                if !s.is_finite() {
                    return Err(Error::InvalidPotential(format!("exponent must be finite, got {s}")));
                }
                if !center.is_finite() {
                    return Err(Error::InvalidPotential("power-law center must be finite".into()));
                }
                Ok(())
            }
            PotentialSpec::ConeRestricted { inner, .. } => inner.validate(),
            PotentialSpec::Indicator { kappa, region } => {
                nonneg("κ", *kappa)?;
                match region {
                    Region::Ball { radius, .. } => nonneg("radius", *radius),
                    _ => Ok(()),
                }
            }
            PotentialSpec::Scaled { factor, inner } => {
                nonneg("scale factor", *factor)?;
                inner.validate()
            }
        }
    }

    /// Value at `p`, where `delta = δ_Ω(p)`.
    pub fn evaluate(&self, p: &Point, delta: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant(k) => *k,
            PotentialSpec::Hardy(k) => {
                if *k == 0.0 {
                    0.0
                } else {
                    k / (delta * delta)
                }
            }
            PotentialSpec::PowerLaw { kappa, s, center } => {
                if *kappa == 0.0 {
                    0.0
                } else {
                    kappa * math::powf(p.dist(center), -s)
                }
            }
            PotentialSpec::ConeRestricted { inner, cone } => {
                if cone.contains(p) {
                    inner.evaluate(p, delta)
                } else {
                    0.0
                }
            }
            PotentialSpec::Indicator { region, kappa } => {
                if region.contains(p) {
                    *kappa
                } else {
                    0.0
                }
            }
            PotentialSpec::Scaled { factor, inner } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * inner.evaluate(p, delta)
                }
            }
        }
    }

    /// Nodewise values, checked for membership in `𝒱(Ω, a)`: `V(x) δ(x)² ≤ a`.
    pub fn evaluate_on(&self, grid: &GridDomain, bound: f64) -> Result<Field> {
        self.validate()?;
        let values: Vec<f64> = grid
            .points()
            .iter()
            .zip(grid.delta())
            .map(|(p, d)| self.evaluate(p, *d))
            .collect();
        check_potential(grid, &values, bound)?;
        Ok(Field::from_vec(values))
    }
}

pub(crate) fn check_potential(grid: &GridDomain, values: &[f64], bound: f64) -> Result<()> {
    for (node, (v, d)) in values.iter().zip(grid.delta()).enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(Error::InvalidPotential(format!("value {v} at node {node} is not finite and nonnegative")));
        }
        if v * d * d > bound * (1.0 + 1e-12) {
            return Err(Error::PotentialBound { node, value: v * d * d, bound });
        }
    }
    Ok(())
}
