//! Fine-regularity criteria for boundary points, rendered as verdicts from
//! dyadic shell sums or from ratio sequences along the pseudo-normal.

mod ae;
mod localization;
mod shells;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use ae::{ae_regularity_tests, cone_family, set_samples, spread_points, AeReport, AE_RESOLUTION_CELLS};
pub use localization::{verify_weighted_energy_localization, LocalizationReport};
pub use shells::{coarsest_shell, fit_ratio, shell_index, Shell, ShellTable};

use crate::error::{Error, Result};
use crate::geometry::{build_cone, BoundaryPoint, ConeSpec, DomainKind, DomainSpec};
use crate::greens::{green_column, GreenField};
use crate::kernels::{c_weight, martin_kernel, ratio_along_cone, CWeight, MartinApprox, RatioSample};
use crate::math;
use crate::operator::{DiscreteProblem, Field, Mode, PotentialSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Regular,
    Singular,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Regular => "regular",
            Verdict::Singular => "singular",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn is_confident(self) -> bool {
        self != Verdict::Inconclusive
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CriterionId {
    IntegralKyV,
    IntegralKy,
    SmoothExplicit,
    ConeTest,
    GreenRatio,
    MartinRatio,
    CWeight,
    RelativeR,
}

impl CriterionId {
    pub const ALL: [CriterionId; 8] = [
        CriterionId::IntegralKyV,
        CriterionId::IntegralKy,
        CriterionId::SmoothExplicit,
        CriterionId::ConeTest,
        CriterionId::GreenRatio,
        CriterionId::MartinRatio,
        CriterionId::CWeight,
        CriterionId::RelativeR,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::IntegralKyV => "integral-KyV",
            CriterionId::IntegralKy => "integral-Ky",
            CriterionId::SmoothExplicit => "smooth-explicit",
            CriterionId::ConeTest => "cone-test",
            CriterionId::GreenRatio => "green-ratio",
            CriterionId::MartinRatio => "martin-ratio",
            CriterionId::CWeight => "c-weight",
            CriterionId::RelativeR => "relative-R",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.as_str().eq_ignore_ascii_case(s))
    }
}

/// Verdict thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Shell decay ratio at or below which an integral is judged finite.
    pub q_reg: f64,
    /// Shell decay ratio at or above which an integral is judged divergent.
    pub q_sing: f64,
    /// Number of innermost resolvable shells used in the fit.
    pub fit_shells: usize,
    /// Shells with outer radius below `resolution_cells · h` are unresolved.
    pub resolution_cells: f64,
    /// `t_min = t_min_cells · h`.
    pub t_min_cells: f64,
    /// Ratio sequences: monotone change by at least this factor is singular.
    pub ratio_factor: f64,
    /// Ratio sequences: the last three samples within this relative band are stable.
    pub ratio_band: f64,
    /// Ratio sequences: stable values must stay above this floor.
    pub ratio_floor: f64,
    /// `c(y)` estimates at or above this are regular (with shell ratio at most `q_reg`).
    pub c_reg: f64,
    /// `c(y)` estimates at or below this are singular (with shell ratio above `q_reg`).
    pub c_sing: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            q_reg: 0.8,
            q_sing: 0.95,
            fit_shells: 4,
            resolution_cells: 16.0,
            t_min_cells: 4.0,
            ratio_factor: 4.0,
            ratio_band: 0.2,
            ratio_floor: 0.01,
            c_reg: 0.1,
            c_sing: 0.02,
        }
    }
}

impl Thresholds {
    pub fn shell_verdict(&self, q: f64) -> Verdict {
        if q <= self.q_reg {
            Verdict::Regular
        } else if q >= self.q_sing {
            Verdict::Singular
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.q_reg > 0.0
            && self.q_reg < self.q_sing
            && self.fit_shells >= 2
            && self.resolution_cells > 0.0
            && self.t_min_cells >= 4.0
            && self.ratio_factor > 1.0
            && self.ratio_band > 0.0
            && self.ratio_floor >= 0.0
            && self.c_sing < self.c_reg;
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("inconsistent thresholds {self:?}")))
        }
    }
}

/// Result of one criterion at one boundary point.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub id: CriterionId,
    /// Empty for ratio-sequence criteria.
    pub shells: Vec<Shell>,
    pub q: Option<f64>,
    pub resolved_total: f64,
    pub unresolved: f64,
    pub extrapolated_total: f64,
    /// Mass from the near-boundary layer `δ < 2h`, excluded from the shells.
    pub layer: f64,
    pub verdict: Verdict,
    /// Ratio samples along the pseudo-normal (ratio criteria).
    pub samples: Vec<RatioSample>,
    /// Criterion-specific scalar: `c(y)` for the c-weight, the last ratio
    /// for ratio criteria, the extrapolated total otherwise.
    pub value: f64,
    /// `∫ t V(y + tν) dt` along the resolved part of the normal ray.
    pub ray_integral: Option<f64>,
    pub notes: Vec<String>,
}

impl CriterionReport {
    fn from_table(id: CriterionId, table: ShellTable) -> Self {
        CriterionReport {
            id,
            q: table.q,
            resolved_total: table.resolved_total,
            unresolved: table.unresolved,
            extrapolated_total: table.extrapolated_total,
            layer: table.layer,
            verdict: table.verdict,
            value: table.extrapolated_total,
            shells: table.shells,
            samples: Vec::new(),
            ray_integral: None,
            notes: Vec::new(),
        }
    }

    fn from_samples(id: CriterionId, samples: Vec<RatioSample>, verdict: Verdict) -> Self {
        let value = samples.last().map_or(f64::NAN, |s| s.ratio);
        CriterionReport {
            id,
            shells: Vec::new(),
            q: None,
            resolved_total: 0.0,
            unresolved: 0.0,
            extrapolated_total: 0.0,
            layer: 0.0,
            verdict,
            samples,
            value,
            ray_integral: None,
            notes: Vec::new(),
        }
    }
}

/// Martin kernels of `𝓛₀` and `𝓛₁` at a boundary point and the Green
/// columns at `x₀`, shared by the criteria.
#[derive(Clone, Debug)]
pub struct PointKernels {
    pub point: BoundaryPoint,
    pub k0: MartinApprox,
    pub k1: MartinApprox,
    pub g0: GreenField,
    pub g1: GreenField,
}

impl PointKernels {
    pub fn compute(problem: &DiscreteProblem, point: &BoundaryPoint, thresholds: &Thresholds) -> Result<Self> {
        let t_min = thresholds.t_min_cells * problem.grid().h();
        let k0 = martin_kernel(problem, Mode::L0, point, Some(t_min))?;
        let k1 = martin_kernel(problem, Mode::L1, point, Some(t_min))?;
        let g0 = green_column(problem, Mode::L0, problem.x0())?;
        let g1 = green_column(problem, Mode::L1, problem.x0())?;
        Ok(PointKernels { point: *point, k0, k1, g0, g1 })
    }

    pub fn ts(&self) -> &[f64] {
        &self.k0.ts
    }
}

/// Which Martin kernel enters the integral criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelChoice {
    /// `K_y`, the `𝓛₀`-Martin kernel.
    Ky,
    /// `K_y^V`, the `𝓛₁`-Martin kernel.
    KyV,
}

fn shell_table_on_grid(
    problem: &DiscreteProblem,
    point: &BoundaryPoint,
    density: impl Fn(usize) -> f64,
    thresholds: &Thresholds,
) -> ShellTable {
    let grid = problem.grid();
    let w = grid.cell_volume();
    let entries = (0..grid.len()).map(|i| (grid.point(i).dist(&point.y), w * density(i), grid.in_layer(i)));
    let diam = grid.domain().diameter();
    ShellTable::build(entries, diam, thresholds.resolution_cells * grid.h(), local_scale(point), thresholds)
}

/// Radius beyond which shells describe the domain rather than the point:
/// the cone margin `η` rounded up to a power of two.
pub fn local_scale(point: &BoundaryPoint) -> f64 {
    math::powi(2.0, math::ceil(math::log2(point.eta) - 1e-9) as i32)
}

/// `h^N Σ G⁰(x₀, x) R(x) K(x)` with `R = V − γ`, split into shells around `y`
/// (with `γ = 0`: `G(V K_y)(x₀)` or `G(V K_y^V)(x₀)`).
pub fn criterion_integral(
    problem: &DiscreteProblem,
    kernels: &PointKernels,
    which: KernelChoice,
    thresholds: &Thresholds,
) -> Result<CriterionReport> {
    let r = problem.op().remainder();
    let k = match which {
        KernelChoice::Ky => kernels.k0.kernel(),
        KernelChoice::KyV => kernels.k1.kernel(),
    };
    let g = &kernels.g0.values;
    let table = shell_table_on_grid(problem, &kernels.point, |i| g[i] * r[i] * k[i], thresholds);
    let id = match which {
        KernelChoice::Ky => CriterionId::IntegralKy,
        KernelChoice::KyV => CriterionId::IntegralKyV,
    };
    let mut report = CriterionReport::from_table(id, table);
    report.ray_integral = Some(ray_integral(problem, &kernels.point, &r));
    Ok(report)
}

/// Relative criterion for the pair `(𝓛₀, 𝓛₁)`: `G⁰(R K_y)(x₀)` with `R = V − γ`.
/// Shares its computation with [`criterion_integral`]; only the id differs.
pub fn criterion_relative(problem: &DiscreteProblem, kernels: &PointKernels, thresholds: &Thresholds) -> Result<CriterionReport> {
    let op = problem.op();
    if let Some(i) = (0..problem.grid().len()).find(|&i| op.gamma()[i] > op.potential()[i]) {
        return Err(Error::Precondition(format!("γ exceeds V at node {i}")));
    }
    let mut report = criterion_integral(problem, kernels, KernelChoice::Ky, thresholds)?;
    report.id = CriterionId::RelativeR;
    Ok(report)
}

/// Shell analysis of `δ(x)² |x − y|^{-N} V(x)` on the grid; no solve needed.
/// Restricted to the unit disk, the smooth representative here.
pub fn criterion_smooth_explicit(
    problem: &DiscreteProblem,
    point: &BoundaryPoint,
    thresholds: &Thresholds,
) -> Result<CriterionReport> {
    let grid = problem.grid();
    if !matches!(grid.domain().kind(), DomainKind::UnitBall) || grid.dim() != 2 {
        return Err(Error::Unsupported("the explicit smooth-domain criterion is implemented for the unit disk".into()));
    }
    let v = problem.op().remainder();
    let delta = grid.delta();
    let table = shell_table_on_grid(
        problem,
        point,
        |i| {
            let r = grid.point(i).dist(&point.y);
            delta[i] * delta[i] / (r * r) * v[i]
        },
        thresholds,
    );
    Ok(CriterionReport::from_table(CriterionId::SmoothExplicit, table))
}

/// Number of dyadic shells integrated by the cone test.
pub const CONE_TEST_SHELLS: usize = 24;

/// Shell analysis of `∫_C V(x) |x − y|^{2−N} dx` by Gauss–Legendre
/// quadrature in polar coordinates around the vertex (planar cones).
pub fn criterion_cone_test(
    domain: &DomainSpec,
    cone: &ConeSpec,
    potential: &PotentialSpec,
    thresholds: &Thresholds,
) -> Result<CriterionReport> {
    if cone.dim != 2 || domain.dim() != 2 {
        return Err(Error::Unsupported("the cone test is implemented for planar cones".into()));
    }
    if !cone.contained_in(domain) {
        return Err(Error::InvalidCone("cone is not contained in the domain".into()));
    }
    potential.validate()?;
    let (nodes, weights) = math::gauss_legendre(16);
    let phi_c = cone.half_angle();
    let perp = cone.axis.perp();
    let reach = cone.height * math::sqrt(1.0 + cone.aperture * cone.aperture);
    let k_top = math::ceil(-math::log2(reach)) as i32 - 1;
    let mut sums = Vec::with_capacity(CONE_TEST_SHELLS);
    for s in 0..CONE_TEST_SHELLS {
        let outer = math::powi(2.0, -(k_top + s as i32));
        let inner = 0.5 * outer;
        let mut terms = Vec::with_capacity(nodes.len() * nodes.len());
        for (xa, wa) in nodes.iter().zip(&weights) {
            let phi = phi_c * xa;
            let (c, sn) = (math::cos(phi), math::sin(phi));
            let r_hi = outer.min(cone.height / c);
            if r_hi <= inner {
                continue;
            }
            let half = 0.5 * (r_hi - inner);
            for (xb, wb) in nodes.iter().zip(&weights) {
                let r = inner + half * (1.0 + xb);
                let p = cone.vertex + (cone.axis * c + perp * sn) * r;
                let d = domain.boundary_distance(&p);
                terms.push(wa * phi_c * wb * half * potential.evaluate(&p, d) * r);
            }
        }
        sums.push(math::pairwise_sum(&terms));
    }
    let table = ShellTable::from_shells(shells::shells_from_integrals(k_top, &sums), 0.0, thresholds);
    let mut report = CriterionReport::from_table(CriterionId::ConeTest, table);
    if !(cone.inner_margin > 0.0) {
        report
            .notes
            .push("cone is not strictly inner: a singular verdict does not imply singularity of the point".into());
    }
    Ok(report)
}

/// Verdict of a ratio sequence ordered towards the boundary point.
pub fn ratio_verdict(values: &[f64], singular_when_increasing: bool, thresholds: &Thresholds) -> Verdict {
    if values.len() < 3 || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Verdict::Inconclusive;
    }
    let first = values[0];
    let last = *values.last().unwrap();
    let monotone = if singular_when_increasing {
        values.windows(2).all(|w| w[1] > w[0])
    } else {
        values.windows(2).all(|w| w[1] < w[0])
    };
    let factor = thresholds.ratio_factor;
    let moved = if singular_when_increasing { last >= factor * first } else { last * factor <= first };
    if monotone && moved && first > 0.0 {
        return Verdict::Singular;
    }
    let tail = &values[values.len() - 3..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if hi > 0.0 && (hi - lo) <= thresholds.ratio_band * hi && lo >= thresholds.ratio_floor {
        return Verdict::Regular;
    }
    Verdict::Inconclusive
}

/// `g¹_{x₀}/g⁰_{x₀}` at the poles `y + tν`, expected to decay to zero at
/// singular points.
pub fn criterion_green_ratio(problem: &DiscreteProblem, kernels: &PointKernels, thresholds: &Thresholds) -> Result<CriterionReport> {
    let cone = normal_ray(&kernels.point)?;
    let samples = ratio_along_cone(problem.grid(), &kernels.g1.values, &kernels.g0.values, &cone, kernels.ts())?;
    let values: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
    let verdict = ratio_verdict(&values, false, thresholds);
    Ok(CriterionReport::from_samples(CriterionId::GreenRatio, samples, verdict))
}

/// `K_y^V / K_y` along the pseudo-normal, expected to blow up at singular points.
pub fn criterion_martin_ratio(problem: &DiscreteProblem, kernels: &PointKernels, thresholds: &Thresholds) -> Result<CriterionReport> {
    let cone = normal_ray(&kernels.point)?;
    let samples = ratio_along_cone(problem.grid(), kernels.k1.kernel(), kernels.k0.kernel(), &cone, kernels.ts())?;
    let values: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
    let verdict = ratio_verdict(&values, true, thresholds);
    Ok(CriterionReport::from_samples(CriterionId::MartinRatio, samples, verdict))
}

/// `c(y) = 1 − G¹(R K_y)(x₀)`, with the integral continued past the resolved
/// shells by its geometric tail.
pub fn criterion_c_weight(problem: &DiscreteProblem, kernels: &PointKernels, thresholds: &Thresholds) -> Result<(CriterionReport, CWeight)> {
    let cw = c_weight(problem, &kernels.k0)?;
    let r = problem.op().remainder();
    let k = kernels.k0.kernel();
    let g = &kernels.g1.values;
    let table = shell_table_on_grid(problem, &kernels.point, |i| g[i] * r[i] * k[i], thresholds);
    let mut report = CriterionReport::from_table(CriterionId::CWeight, table);
    let c_ext = 1.0 - (report.extrapolated_total + report.layer);
    report.value = c_ext.max(0.0);
    // A vanishing c(y) counts as singular only when the mass sits at small
    // scales (slow shell decay); a globally strong potential also drives c
    // towards zero but with fast decay.
    report.verdict = match report.q {
        _ if report.shells.iter().all(|s| s.sum == 0.0) && report.layer == 0.0 => Verdict::Regular,
        None => Verdict::Inconclusive,
        Some(q) if c_ext >= thresholds.c_reg && q <= thresholds.q_reg => Verdict::Regular,
        Some(q) if c_ext <= thresholds.c_sing && q > thresholds.q_reg => Verdict::Singular,
        Some(_) => Verdict::Inconclusive,
    };
    report.notes.push(format!("c(y) at t_min without tail: {}", cw.unclamped));
    Ok((report, cw))
}

/// Degenerate cone along the pseudo-normal, used to sample rays.
fn normal_ray(point: &BoundaryPoint) -> Result<ConeSpec> {
    build_cone(point, 1e-9, point.eta)
}

/// `Σ t V(y + tν) Δt` over lattice-spaced samples `t = jh`, `2h ≤ t ≤ η`,
/// using the nearest node.
fn ray_integral(problem: &DiscreteProblem, point: &BoundaryPoint, v: &Field) -> f64 {
    let grid = problem.grid();
    let h = grid.h();
    let mut terms = Vec::new();
    let mut j = 2;
    while (j as f64) * h <= point.eta {
        let t = j as f64 * h;
        if let Some(n) = grid.nearest_node(&point.along(t)) {
            terms.push(t * v[n] * h);
        }
        j += 1;
    }
    math::pairwise_sum(&terms)
}

/// Consolidated verdict over the equivalent criteria.
#[derive(Clone, Debug)]
pub struct Classification {
    pub point: BoundaryPoint,
    pub reports: Vec<CriterionReport>,
    pub c_weight: CWeight,
    pub verdict: Verdict,
    /// Two confident criteria disagree.
    pub consistency_failure: bool,
}

impl Classification {
    pub fn report(&self, id: CriterionId) -> Option<&CriterionReport> {
        self.reports.iter().find(|r| r.id == id)
    }
}

/// Majority verdict among confident reports, with a disagreement flag.
pub fn consolidate(reports: &[CriterionReport]) -> (Verdict, bool) {
    let reg = reports.iter().filter(|r| r.verdict == Verdict::Regular).count();
    let sing = reports.iter().filter(|r| r.verdict == Verdict::Singular).count();
    let verdict = if reg > sing {
        Verdict::Regular
    } else if sing > reg {
        Verdict::Singular
    } else {
        Verdict::Inconclusive
    };
    (verdict, reg > 0 && sing > 0)
}

/// Runs integral-Ky, integral-KyV, green-ratio, martin-ratio and c-weight.
pub fn classify(problem: &DiscreteProblem, point: &BoundaryPoint, thresholds: &Thresholds) -> Result<Classification> {
    thresholds.validate()?;
    let kernels = PointKernels::compute(problem, point, thresholds)?;
    classify_with(problem, &kernels, thresholds)
}

pub fn classify_with(problem: &DiscreteProblem, kernels: &PointKernels, thresholds: &Thresholds) -> Result<Classification> {
    let (cw_report, cw) = criterion_c_weight(problem, kernels, thresholds)?;
    let reports = alloc::vec![
        criterion_integral(problem, kernels, KernelChoice::Ky, thresholds)?,
        criterion_integral(problem, kernels, KernelChoice::KyV, thresholds)?,
        criterion_green_ratio(problem, kernels, thresholds)?,
        criterion_martin_ratio(problem, kernels, thresholds)?,
        cw_report,
    ];
    let (verdict, consistency_failure) = consolidate(&reports);
    Ok(Classification { point: kernels.point, reports, c_weight: cw, verdict, consistency_failure })
}
