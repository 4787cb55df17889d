//! Lattice walk conditioned by a positive harmonic `h` (Doob transform),
//! accumulating `Σ V(X) dt` until it enters a ball around the target point.
//!
//! Path `i` draws from `ChaCha8Rng::seed_from_u64(seed)` with stream `i`, so
//! any partition of the paths over threads reproduces the same outcomes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::math;
use crate::operator::grid::axis_offset;
use crate::operator::sparse::{nested_dissection, CholeskyFactor};
use crate::operator::{DiscreteProblem, Field, GridDomain, Mode};

/// Smallest admissible number of retained paths.
pub const MIN_RETAINED: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    /// Positive harmonic function of the simple walk away from `target`.
    pub h: Field,
    pub start: usize,
    pub target: Point,
    /// Walks stop on entering `|X − target| < epsilon`.
    pub epsilon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Per-path step cap; longer paths are dropped as failures.
    pub max_steps: u64,
}

impl WalkConfig {
    pub fn new(h: Field, start: usize, target: Point, epsilon: f64, paths: usize, seed: u64) -> Self {
        WalkConfig { h, start, target, epsilon, paths, seed, max_steps: 100_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathOutcome {
    /// Entered the target ball; accumulated `Σ V dt`.
    Absorbed { functional: f64, steps: u64 },
    /// Killed away from the target (where `h` is strictly superharmonic) or out of steps.
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkStatistics {
    pub mean: f64,
    pub std_error: f64,
    pub retained: usize,
    pub failures: usize,
    pub mean_steps: f64,
}

/// Transition tables of the `h`-transformed simple walk.
#[derive(Clone, Debug)]
pub struct ConditionedWalk {
    /// Per node: neighbours and cumulative probabilities `h(z)/(2N h(x))`.
    next: Vec<[(u32, f64); 6]>,
    degree: usize,
    absorbing: Vec<bool>,
    v: Vec<f64>,
    dt: f64,
    start: usize,
    seed: u64,
    max_steps: u64,
}

impl ConditionedWalk {
    pub fn new(grid: &GridDomain, v: &Field, cfg: &WalkConfig) -> Result<Self> {
        let n = grid.len();
        for (what, len) in [("h", cfg.h.len()), ("V", v.len())] {
            if len != n {
                return Err(Error::Precondition(format!("{what} has {len} values for {n} nodes")));
            }
        }
        let h = grid.h();
        if !(cfg.epsilon >= 4.0 * h * (1.0 - 1e-12)) {
            return Err(Error::Precondition(format!("truncation radius {} below 4h = {}", cfg.epsilon, 4.0 * h)));
        }
        if cfg.start >= n {
            return Err(Error::Precondition(format!("start node {} out of range", cfg.start)));
        }
        let absorbing: Vec<bool> = (0..n).map(|i| grid.point(i).dist(&cfg.target) < cfg.epsilon).collect();
        if absorbing[cfg.start] {
            return Err(Error::Precondition("the start node lies inside the truncation ball".into()));
        }
        if !(cfg.h[cfg.start] > 0.0) {
            return Err(Error::Precondition("h must be positive at the start node".into()));
        }
        if let Some(i) = cfg.h.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Precondition(format!("h is negative or not finite at node {i}")));
        }
        let dim = grid.dim();
        let degree = 2 * dim;
        let mut next = vec![[(u32::MAX, 0.0); 6]; n];
        for i in 0..n {
            if absorbing[i] || cfg.h[i] == 0.0 {
                continue;
            }
            let mut cum = 0.0;
            for (k, slot) in next[i].iter_mut().take(degree).enumerate() {
                let off = axis_offset(k / 2, if k % 2 == 0 { -1 } else { 1 });
                let (j, hz) = match grid.neighbor(i, off) {
                    Some(j) => (j as u32, cfg.h[j]),
                    None => (u32::MAX, 0.0),
                };
                cum += hz / (degree as f64 * cfg.h[i]);
                *slot = (j, cum);
            }
            if cum > 1.0 + 1e-9 {
                return Err(Error::Precondition(format!(
                    "h is not superharmonic for the walk at node {i} (transition mass {cum})"
                )));
            }
        }
        Ok(ConditionedWalk {
            next,
            degree,
            absorbing,
            v: v.values().to_vec(),
            dt: h * h / degree as f64,
            start: cfg.start,
            seed: cfg.seed,
            max_steps: cfg.max_steps,
        })
    }

    /// Runs path `index` on its own stream.
    pub fn path(&self, index: u64) -> PathOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let mut x = self.start;
        let mut acc = Vec::new();
        let mut steps = 0u64;
        loop {
            if self.absorbing[x] {
                return PathOutcome::Absorbed { functional: self.dt * math::pairwise_sum(&acc), steps };
            }
            if steps >= self.max_steps {
                return PathOutcome::Failed;
            }
            if self.v[x] != 0.0 {
                acc.push(self.v[x]);
            }
            let u = math::unit_interval(&mut rng);
            let row = &self.next[x][..self.degree];
            match row.iter().find(|(_, c)| u < *c) {
                Some(&(j, _)) if j != u32::MAX => x = j as usize,
                _ => return PathOutcome::Failed,
            }
            steps += 1;
        }
    }
}

/// Mean and standard error over absorbed paths, summed in path order.
pub fn summarize(outcomes: &[PathOutcome]) -> Result<WalkStatistics> {
    let mut values = Vec::with_capacity(outcomes.len());
    let mut steps = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if let PathOutcome::Absorbed { functional, steps: s } = o {
            values.push(*functional);
            steps.push(*s as f64);
        }
    }
    let retained = values.len();
    if retained < MIN_RETAINED {
        return Err(Error::InsufficientStatistics { retained, required: MIN_RETAINED });
    }
    let n = retained as f64;
    let mean = math::pairwise_sum(&values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = math::pairwise_sum(&dev) / (n - 1.0);
    Ok(WalkStatistics {
        mean,
        std_error: math::sqrt(var / n),
        retained,
        failures: outcomes.len() - retained,
        mean_steps: math::pairwise_sum(&steps) / n,
    })
}

/// Runs `cfg.paths` conditioned walks from `cfg.start`.
pub fn conditioned_functional(grid: &GridDomain, v: &Field, cfg: &WalkConfig) -> Result<WalkStatistics> {
    let walk = ConditionedWalk::new(grid, v, cfg)?;
    let outcomes: Vec<PathOutcome> = (0..cfg.paths as u64).map(|i| walk.path(i)).collect();
    summarize(&outcomes)
}

/// Expected walk functional by linear algebra: `h^N Σ G_ε(x₀, x) V(x) h(x)/h(x₀)`
/// with `G_ε` the Green function of `−Δ` on the nodes outside the ball.
pub fn truncated_quadrature(problem: &DiscreteProblem, v: &Field, h_field: &Field, start: usize, target: &Point, epsilon: f64) -> Result<f64> {
    if problem.op().boundary_correction() {
        return Err(Error::Unsupported("the walk matches the uncorrected lattice Laplacian".into()));
    }
    let grid = problem.grid();
    let a = problem.system(Mode::Laplacian)?.matrix();
    let keep: Vec<usize> = (0..grid.len()).filter(|&i| grid.point(i).dist(target) >= epsilon).collect();
    let pos = keep
        .iter()
        .position(|&i| i == start)
        .ok_or_else(|| Error::Precondition("the start node lies inside the truncation ball".into()))?;
    let sub = a.principal_submatrix(&keep);
    let coords: Vec<[i32; 3]> = keep.iter().map(|&i| grid.lattice(i)).collect();
    let factor = CholeskyFactor::factor(&sub, nested_dissection(&coords))?;
    let mut e = vec![0.0; keep.len()];
    e[pos] = 1.0;
    let z = factor.solve(&e);
    let h0 = h_field[start];
    let terms: Vec<f64> = keep.iter().zip(&z).map(|(&i, zi)| zi * v[i] * h_field[i] / h0).collect();
    Ok(math::pairwise_sum(&terms))
}
