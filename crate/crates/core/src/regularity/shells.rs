//! Dyadic shell decomposition of nonnegative integrals around a point.

use alloc::vec::Vec;

use super::{Thresholds, Verdict};
use crate::math;

/// Contributions from `{2^{-k-1} ≤ |x − y| < 2^{-k}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shell {
    pub k: i32,
    pub inner: f64,
    pub outer: f64,
    pub sum: f64,
    pub nodes: usize,
    /// Outer radius at least the resolution limit and at most the local scale.
    pub resolvable: bool,
    /// Inside the local scale of the point; only local resolvable shells are fitted.
    pub local: bool,
}

/// Per-shell sums with the fitted decay ratio and the verdict it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellTable {
    pub shells: Vec<Shell>,
    /// `exp` of the least-squares slope of `ln S_k` over the last resolvable shells.
    pub q: Option<f64>,
    /// Sum over resolvable shells.
    pub resolved_total: f64,
    /// Sum over shells finer than the resolution limit.
    pub unresolved: f64,
    /// `resolved_total` plus the geometric tail `S_last q/(1 − q)` (infinite for `q ≥ 1`).
    pub extrapolated_total: f64,
    /// Contributions excluded as near-boundary layer.
    pub layer: f64,
    pub verdict: Verdict,
}

/// Index `k` of the shell containing distance `r`, never coarser than `k0`.
pub fn shell_index(r: f64, k0: i32) -> i32 {
    let k = math::ceil(-math::log2(r)) as i32 - 1;
    k.max(k0)
}

/// Coarsest shell index: the largest `k` with `2^{-k} ≥ diam`.
pub fn coarsest_shell(diam: f64) -> i32 {
    math::floor(-math::log2(diam)) as i32
}

impl ShellTable {
    /// `entries` are `(|x − y|, contribution, in_layer)`; contributions must be
    /// nonnegative. Shells with `2^{-k} < resolution` are unresolved; shells
    /// with `2^{-k} > local_scale` are summed but kept out of the fit.
    pub fn build(
        entries: impl Iterator<Item = (f64, f64, bool)>,
        diam: f64,
        resolution: f64,
        local_scale: f64,
        thresholds: &Thresholds,
    ) -> Self {
        let k0 = coarsest_shell(diam);
        let mut per_shell: Vec<Vec<f64>> = Vec::new();
        let mut layer = Vec::new();
        for (r, value, in_layer) in entries {
            if in_layer {
                layer.push(value);
                continue;
            }
            if !(r > 0.0) {
                continue;
            }
            let idx = (shell_index(r, k0) - k0) as usize;
            if idx >= per_shell.len() {
                per_shell.resize(idx + 1, Vec::new());
            }
            per_shell[idx].push(value);
        }
        let shells: Vec<Shell> = per_shell
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = k0 + i as i32;
                let outer = math::powi(2.0, -k);
                Shell {
                    k,
                    inner: 0.5 * outer,
                    outer,
                    sum: math::pairwise_sum(v),
                    nodes: v.len(),
                    resolvable: outer >= resolution * (1.0 - 1e-12),
                    local: outer <= local_scale * (1.0 + 1e-9),
                }
            })
            .collect();
        Self::from_shells(shells, math::pairwise_sum(&layer), thresholds)
    }

    pub fn from_shells(shells: Vec<Shell>, layer: f64, thresholds: &Thresholds) -> Self {
        let resolved: Vec<f64> = shells.iter().filter(|s| s.resolvable).map(|s| s.sum).collect();
        let fitted: Vec<f64> = shells.iter().filter(|s| s.resolvable && s.local).map(|s| s.sum).collect();
        let unresolved = math::pairwise_sum(&shells.iter().filter(|s| !s.resolvable).map(|s| s.sum).collect::<Vec<_>>());
        let resolved_total = math::pairwise_sum(&resolved);
        let m = thresholds.fit_shells;
        let (q, verdict) = if fitted.len() < m.max(2) {
            (None, Verdict::Inconclusive)
        } else {
            let q = fit_ratio(&fitted[fitted.len() - m..]);
            (Some(q), thresholds.shell_verdict(q))
        };
        let extrapolated_total = match q {
            Some(q) if q < 1.0 => resolved_total + resolved.last().copied().unwrap_or(0.0) * q / (1.0 - q),
            Some(_) if resolved.last().copied().unwrap_or(0.0) > 0.0 => f64::INFINITY,
            _ => resolved_total,
        };
        ShellTable { shells, q, resolved_total, unresolved, extrapolated_total, layer, verdict }
    }

    /// Shells entering the fit.
    pub fn fitted_count(&self) -> usize {
        self.shells.iter().filter(|s| s.resolvable && s.local).count()
    }
}

/// Geometric decay ratio of a run of shell sums. Zero sums are handled as
/// exhausted support: a trailing zero gives `q = 0`; leading zeros are
/// dropped from the fit (growth from nothing counts as `q = ∞` when only one
/// nonzero sum is left).
pub fn fit_ratio(sums: &[f64]) -> f64 {
    if sums.iter().all(|s| *s == 0.0) || *sums.last().unwrap() == 0.0 {
        return 0.0;
    }
    let start = sums.iter().rposition(|s| *s == 0.0).map_or(0, |i| i + 1);
    let run = &sums[start..];
    if run.len() < 2 {
        return f64::INFINITY;
    }
    let n = run.len() as f64;
    let xs: Vec<f64> = (0..run.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = run.iter().map(|s| math::ln(*s)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    math::exp(num / den)
}

/// Shells of the exact integral `∫ w(r) dr` over `r ∈ [2^{-k-1}, 2^{-k})`
/// for `k = k_top, …, k_top + depth − 1`, given per-shell integrals.
pub(crate) fn shells_from_integrals(k_top: i32, sums: &[f64]) -> Vec<Shell> {
    sums.iter()
        .enumerate()
        .map(|(i, s)| {
            let k = k_top + i as i32;
            let outer = math::powi(2.0, -k);
            Shell { k, inner: 0.5 * outer, outer, sum: *s, nodes: 0, resolvable: true, local: true }
        })
        .collect()
}
