//! Scenario files: TOML, validated into ready-to-solve problems.

use std::fmt;
use std::path::Path;

use finereg_core::geometry::{build_cone, GraphChart};
use finereg_core::operator::Region;
use finereg_core::regularity::{CriterionId, Thresholds};
use finereg_core::{
    BoundaryPoint, Coefficients, DiscreteProblem, DomainSpec, EllipticOperator, Field, GridDomain, Point, PotentialSpec,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Criteria run when a scenario does not select any.
pub const DEFAULT_CRITERIA: [CriterionId; 5] = [
    CriterionId::IntegralKy,
    CriterionId::IntegralKyV,
    CriterionId::GreenRatio,
    CriterionId::MartinRatio,
    CriterionId::CWeight,
];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl fmt::Display) -> ScenarioError {
    ScenarioError::Field { field: field.into(), message: message.to_string() }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub points: Vec<PointConfig>,
    #[serde(default)]
    pub criteria: CriteriaConfig,
    #[serde(default)]
    pub thresholds: ThresholdsConfig,
    pub monte_carlo: Option<MonteCarloConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Disk,
    Ball { dim: usize },
    Square,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polygon { vertices: Vec<[f64; 2]> },
    Graph { r: f64, rho: f64, samples: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: Option<f64>,
    /// `h = 1/cells`.
    pub cells: Option<u32>,
    pub x0: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    /// Bound `a` in `V δ² ≤ a`; the smallest admissible value when omitted.
    pub bound: Option<f64>,
    #[serde(default)]
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    pub gamma: Option<PotentialConfig>,
    /// `γ = gamma_fraction · V`.
    pub gamma_fraction: Option<f64>,
    #[serde(default)]
    pub boundary_correction: bool,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientsConfig {
    #[default]
    Identity,
    Constant { matrix: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant { kappa: f64 },
    Hardy { kappa: f64 },
    PowerLaw {
        #[serde(default = "one")]
        kappa: f64,
        s: f64,
        center: Vec<f64>,
    },
    ConePowerLaw {
        #[serde(default = "one")]
        kappa: f64,
        s: f64,
        vertex: Vec<f64>,
        aperture: f64,
        height: f64,
        #[serde(default = "yes")]
        strictly_inner: bool,
    },
    Indicator { kappa: f64, region: RegionConfig },
    Scaled { factor: f64, of: Box<PotentialConfig> },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionConfig {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub y: Vec<f64>,
    pub nu: Option<Vec<f64>>,
    pub eta: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CriteriaConfig {
    #[serde(default = "default_select")]
    pub select: Vec<String>,
    #[serde(default = "default_aperture")]
    pub cone_aperture: f64,
    /// Cone-test height; `η` of the point when omitted.
    pub cone_height: Option<f64>,
}

fn default_select() -> Vec<String> {
    DEFAULT_CRITERIA.iter().map(|c| c.as_str().to_string()).collect()
}

fn default_aperture() -> f64 {
    0.5
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        CriteriaConfig { select: default_select(), cone_aperture: default_aperture(), cone_height: None }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub q_reg: Option<f64>,
    pub q_sing: Option<f64>,
    pub fit_shells: Option<usize>,
    pub resolution_cells: Option<f64>,
    pub t_min_cells: Option<f64>,
    pub ratio_factor: Option<f64>,
    pub ratio_band: Option<f64>,
    pub ratio_floor: Option<f64>,
    pub c_reg: Option<f64>,
    pub c_sing: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub paths: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    pub max_steps: Option<u64>,
}

/// Scenario parameter varied by `sweep`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    S,
    Kappa,
    H,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "s" => Some(SweepParam::S),
            "kappa" | "κ" => Some(SweepParam::Kappa),
            "h" => Some(SweepParam::H),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::S => "s",
            SweepParam::Kappa => "kappa",
            SweepParam::H => "h",
        }
    }
}

fn point_from(v: &[f64], field: &str, dim: usize) -> Result<Point, ScenarioError> {
    if v.len() != dim {
        return Err(field_err(field, format!("expected {dim} coordinates, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(field_err(field, "coordinates must be finite"));
    }
    Ok(Point::from_slice(v))
}

fn finite(v: f64, field: &str) -> Result<f64, ScenarioError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be finite, got {v}")))
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", s.schema_version),
            ));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn domain_spec(&self) -> Result<DomainSpec, ScenarioError> {
        let f = "domain";
        let spec = match &self.domain {
            DomainConfig::Disk => DomainSpec::unit_disk(),
            DomainConfig::Ball { dim } => DomainSpec::unit_ball(*dim).map_err(|e| field_err("domain.dim", e))?,
            DomainConfig::Square => DomainSpec::unit_square(),
            DomainConfig::Box { lo, hi } => {
                let dim = lo.len();
                let lo = point_from(lo, "domain.lo", dim)?;
                let hi = point_from(hi, "domain.hi", dim)?;
                DomainSpec::axis_box(dim, lo, hi).map_err(|e| field_err(f, e))?
            }
            DomainConfig::Polygon { vertices } => {
                let pts = vertices.iter().map(|v| Point::xy(v[0], v[1])).collect();
                DomainSpec::polygon(pts).map_err(|e| field_err("domain.vertices", e))?
            }
            DomainConfig::Graph { r, rho, samples } => {
                let chart = GraphChart::new(*r, *rho, samples).map_err(|e| field_err(f, e))?;
                DomainSpec::from_chart(chart)
            }
        };
        Ok(spec)
    }

    pub fn spacing(&self) -> Result<f64, ScenarioError> {
        match (self.grid.h, self.grid.cells) {
            (Some(h), None) if h > 0.0 && h.is_finite() => Ok(h),
            (Some(h), None) => Err(field_err("grid.h", format!("must be positive, got {h}"))),
            (None, Some(c)) if c > 0 => Ok(1.0 / c as f64),
            (None, Some(_)) => Err(field_err("grid.cells", "must be positive")),
            _ => Err(field_err("grid", "exactly one of `h` and `cells` is required")),
        }
    }

    pub fn thresholds(&self) -> Result<Thresholds, ScenarioError> {
        let t = &self.thresholds;
        let d = Thresholds::default();
        let th = Thresholds {
            q_reg: t.q_reg.unwrap_or(d.q_reg),
            q_sing: t.q_sing.unwrap_or(d.q_sing),
            fit_shells: t.fit_shells.unwrap_or(d.fit_shells),
            resolution_cells: t.resolution_cells.unwrap_or(d.resolution_cells),
            t_min_cells: t.t_min_cells.unwrap_or(d.t_min_cells),
            ratio_factor: t.ratio_factor.unwrap_or(d.ratio_factor),
            ratio_band: t.ratio_band.unwrap_or(d.ratio_band),
            ratio_floor: t.ratio_floor.unwrap_or(d.ratio_floor),
            c_reg: t.c_reg.unwrap_or(d.c_reg),
            c_sing: t.c_sing.unwrap_or(d.c_sing),
        };
        th.validate().map_err(|e| field_err("thresholds", e))?;
        Ok(th)
    }

    pub fn criteria(&self) -> Result<Vec<CriterionId>, ScenarioError> {
        let mut out = Vec::new();
        for (i, name) in self.criteria.select.iter().enumerate() {
            let id = CriterionId::parse(name).ok_or_else(|| {
                let known: Vec<&str> = CriterionId::ALL.iter().map(|c| c.as_str()).collect();
                field_err(format!("criteria.select[{i}]"), format!("unknown criterion `{name}` (known: {})", known.join(", ")))
            })?;
            if out.contains(&id) {
                return Err(field_err(format!("criteria.select[{i}]"), format!("`{name}` is listed twice")));
            }
            out.push(id);
        }
        if out.is_empty() {
            return Err(field_err("criteria.select", "no criteria selected"));
        }
        Ok(out)
    }

    /// Sets the varied parameter, reporting scenarios that have no such parameter.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Scenario, ScenarioError> {
        let mut s = self.clone();
        match param {
            SweepParam::H => {
                s.grid.h = Some(value);
                s.grid.cells = None;
            }
            SweepParam::S | SweepParam::Kappa => {
                if !set_potential_param(&mut s.operator.potential, param, value) {
                    return Err(field_err(
                        "operator.potential",
                        format!("potential has no parameter `{}`", param.as_str()),
                    ));
                }
            }
        }
        Ok(s)
    }

    /// Validates everything and builds the discrete problem; no solve happens here.
    pub fn prepare(&self) -> Result<Prepared, ScenarioError> {
        let domain = self.domain_spec()?;
        let h = self.spacing()?;
        let diam = domain.diameter();
        if diam / h < 16.0 {
            return Err(field_err("grid", format!("spacing {h} leaves fewer than 16 nodes across the diameter {diam}")));
        }
        let dim = domain.dim();
        let grid = GridDomain::new(&domain, h).map_err(|e| field_err("grid", e))?;
        let thresholds = self.thresholds()?;
        let criteria = self.criteria()?;
        if !(self.criteria.cone_aperture > 0.0 && self.criteria.cone_aperture.is_finite()) {
            return Err(field_err("criteria.cone_aperture", "must be positive"));
        }

        let mut points = Vec::with_capacity(self.points.len());
        if self.points.is_empty() {
            return Err(field_err("points", "at least one boundary point is required"));
        }
        for (i, p) in self.points.iter().enumerate() {
            let base = format!("points[{i}]");
            let y = point_from(&p.y, &format!("{base}.y"), dim)?;
            let bp = match (&p.nu, p.eta) {
                (None, None) => BoundaryPoint::at(&domain, y),
                (Some(nu), Some(eta)) => {
                    let nu = point_from(nu, &format!("{base}.nu"), dim)?;
                    BoundaryPoint::new(&domain, y, nu, finite(eta, &format!("{base}.eta"))?)
                }
                _ => return Err(field_err(&base, "give both `nu` and `eta` or neither")),
            }
            .map_err(|e| field_err(&base, e))?;
            points.push(bp);
        }

        let potential = potential_spec(&self.operator.potential, &domain, "operator.potential")?;
        potential.validate().map_err(|e| field_err("operator.potential", e))?;
        let bound_probe = f64::MAX;
        let v = potential.evaluate_on(&grid, bound_probe).map_err(|e| field_err("operator.potential", e))?;
        let gamma = match (&self.operator.gamma, self.operator.gamma_fraction) {
            (Some(_), Some(_)) => {
                return Err(field_err("operator", "give at most one of `gamma` and `gamma_fraction`"))
            }
            (Some(g), None) => {
                let spec = potential_spec(g, &domain, "operator.gamma")?;
                spec.validate().map_err(|e| field_err("operator.gamma", e))?;
                spec.evaluate_on(&grid, bound_probe).map_err(|e| field_err("operator.gamma", e))?
            }
            (None, Some(f)) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(field_err("operator.gamma_fraction", format!("must lie in [0, 1], got {f}")));
                }
                v.scaled(f)
            }
            (None, None) => Field::zeros(&grid),
        };
        let needed = grid
            .delta()
            .iter()
            .zip(v.iter())
            .map(|(d, x)| x * d * d)
            .fold(0.0, f64::max);
        let bound = match self.operator.bound {
            Some(a) => finite(a, "operator.bound")?,
            None => needed,
        };
        let coefficients = match &self.operator.coefficients {
            CoefficientsConfig::Identity => Coefficients::Identity,
            CoefficientsConfig::Constant { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                    return Err(field_err("operator.coefficients.matrix", format!("expected a {dim}×{dim} matrix")));
                }
                let mut m = [[0.0; 3]; 3];
                for (i, row) in matrix.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        m[i][j] = finite(*x, "operator.coefficients.matrix")?;
                    }
                }
                Coefficients::Constant(m)
            }
        };
        let op = EllipticOperator::from_fields(&grid, coefficients, gamma, v, bound)
            .map_err(|e| field_err("operator", e))?
            .with_boundary_correction(self.operator.boundary_correction);
        let mut problem = DiscreteProblem::new(grid, op).map_err(|e| field_err("operator", e))?;
        if let Some(x0) = &self.grid.x0 {
            let p = point_from(x0, "grid.x0", dim)?;
            let node = problem
                .grid()
                .nearest_node(&p)
                .ok_or_else(|| field_err("grid.x0", "no grid node near x0"))?;
            problem = problem.with_x0(node).map_err(|e| field_err("grid.x0", e))?;
        }

        if let Some(mc) = &self.monte_carlo {
            if mc.paths < finereg_core::stochastic::MIN_RETAINED {
                return Err(field_err(
                    "monte_carlo.paths",
                    format!("at least {} paths are needed", finereg_core::stochastic::MIN_RETAINED),
                ));
            }
            if !mc.epsilon.is_finite() || mc.epsilon < 4.0 * h * (1.0 - 1e-12) {
                return Err(field_err("monte_carlo.epsilon", format!("must be at least 4h = {}", 4.0 * h)));
            }
            if !matches!(self.operator.coefficients, CoefficientsConfig::Identity) || self.operator.boundary_correction {
                return Err(field_err("monte_carlo", "the walk needs identity coefficients without boundary correction"));
            }
        }

        let mut cones = Vec::with_capacity(points.len());
        for (i, bp) in points.iter().enumerate() {
            let height = self.criteria.cone_height.unwrap_or(bp.eta);
            let cone = if criteria.contains(&CriterionId::ConeTest) {
                let c = build_cone(bp, self.criteria.cone_aperture, height).map_err(|e| field_err("criteria", e))?;
                if !c.contained_in(&domain) {
                    return Err(field_err(format!("points[{i}]"), "the cone-test cone is not contained in the domain"));
                }
                Some(c.strictly_inner(&domain).unwrap_or(c))
            } else {
                None
            };
            cones.push(cone);
        }
        if criteria.contains(&CriterionId::SmoothExplicit)
            && !(matches!(self.domain, DomainConfig::Disk) || matches!(self.domain, DomainConfig::Ball { dim: 2 }))
        {
            return Err(field_err("criteria.select", "smooth-explicit is implemented for the unit disk only"));
        }

        Ok(Prepared { problem, points, cones, potential, thresholds, criteria, monte_carlo: self.monte_carlo.clone() })
    }
}

/// A validated scenario, ready to solve.
#[derive(Debug)]
pub struct Prepared {
    pub problem: DiscreteProblem,
    pub points: Vec<BoundaryPoint>,
    /// Cone for the cone test, per point.
    pub cones: Vec<Option<finereg_core::ConeSpec>>,
    pub potential: PotentialSpec,
    pub thresholds: Thresholds,
    pub criteria: Vec<CriterionId>,
    pub monte_carlo: Option<MonteCarloConfig>,
}

fn set_potential_param(p: &mut PotentialConfig, param: SweepParam, value: f64) -> bool {
    match (p, param) {
        (PotentialConfig::PowerLaw { s, .. } | PotentialConfig::ConePowerLaw { s, .. }, SweepParam::S) => {
            *s = value;
            true
        }
        (
            PotentialConfig::Constant { kappa }
            | PotentialConfig::Hardy { kappa }
            | PotentialConfig::PowerLaw { kappa, .. }
            | PotentialConfig::ConePowerLaw { kappa, .. }
            | PotentialConfig::Indicator { kappa, .. },
            SweepParam::Kappa,
        ) => {
            *kappa = value;
            true
        }
        (PotentialConfig::Scaled { of, .. }, _) => set_potential_param(of, param, value),
        _ => false,
    }
}

/// Converts a potential table to its symbolic form.
pub fn potential_spec(p: &PotentialConfig, domain: &DomainSpec, field: &str) -> Result<PotentialSpec, ScenarioError> {
    let dim = domain.dim();
    Ok(match p {
        PotentialConfig::Zero => PotentialSpec::Zero,
        PotentialConfig::Constant { kappa } => PotentialSpec::Constant(*kappa),
        PotentialConfig::Hardy { kappa } => PotentialSpec::Hardy(*kappa),
        PotentialConfig::PowerLaw { kappa, s, center } => PotentialSpec::PowerLaw {
            kappa: *kappa,
            s: *s,
            center: point_from(center, &format!("{field}.center"), dim)?,
        },
        PotentialConfig::ConePowerLaw { kappa, s, vertex, aperture, height, strictly_inner } => {
            let y = point_from(vertex, &format!("{field}.vertex"), dim)?;
            let bp = BoundaryPoint::at(domain, y).map_err(|e| field_err(format!("{field}.vertex"), e))?;
            let mut cone = build_cone(&bp, *aperture, *height).map_err(|e| field_err(field, e))?;
            if !cone.contained_in(domain) {
                return Err(field_err(field, "the potential's cone is not contained in the domain"));
            }
            if *strictly_inner {
                cone = cone.strictly_inner(domain).map_err(|e| field_err(field, e))?;
            }
            let base = PotentialSpec::cone_power_law(cone, *s);
            if *kappa == 1.0 {
                base
            } else {
                base.scaled(*kappa)
            }
        }
        PotentialConfig::Indicator { kappa, region } => {
            let region = match region {
                RegionConfig::Ball { center, radius } => Region::Ball {
                    center: point_from(center, &format!("{field}.region.center"), dim)?,
                    radius: finite(*radius, &format!("{field}.region.radius"))?,
                },
                RegionConfig::Box { lo, hi } => Region::Box {
                    lo: point_from(lo, &format!("{field}.region.lo"), dim)?,
                    hi: point_from(hi, &format!("{field}.region.hi"), dim)?,
                },
            };
            PotentialSpec::Indicator { region, kappa: *kappa }
        }
        PotentialConfig::Scaled { factor, of } => potential_spec(of, domain, &format!("{field}.of"))?.scaled(*factor),
    })
}
