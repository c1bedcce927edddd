//! KL-UCB for arbitrary rewards on `[0, 1]`.
//!
//! The index is the largest mean of a distribution `q` on the empirical
//! support (plus the point 1) with `KL(p, q) <= delta`. Lagrangian duality
//! reduces this `n`-dimensional problem to the scalar root `f(lambda) = delta`,
//! where
//!
//! ```text
//! f(lambda) = sum_i p_i log(lambda - a_i) + log(sum_i p_i / (lambda - a_i))
//! ```
//!
//! is strictly decreasing on `(l, inf)` and bounded by
//! `(l - a_1)^2 / (8 (lambda - l)^2)`, which yields a finite bisection bracket.

use std::collections::BTreeMap;

use crate::divergences::UnitScalar;
use crate::error::{ensure_positive, Error, Result};
use crate::policies::exploration_bonus;

/// Default bisection tolerance on `lambda`, relative to its distance from the pole.
pub const LAMBDA_TOL: f64 = 1e-12;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Weights on a strictly increasing support whose last point is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Validates and normalises. Only the weight on the final point 1 may be zero.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        if support.is_empty() || support.len() != weights.len() {
            return bad(format!(
                "support has {} points but {} weights",
                support.len(),
                weights.len()
            ));
        }
        if support.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("support points must lie in [0, 1]".into());
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return bad("support must be strictly increasing".into());
        }
        if *support.last().unwrap() != 1.0 {
            return bad("last support point must be 1".into());
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return bad("weights must be nonnegative".into());
        }
        let n = weights.len();
        if weights[..n - 1].iter().any(|w| *w == 0.0) {
            return bad("only the weight on the point 1 may be zero".into());
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return bad(format!("weights sum to {total}"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(EmpiricalDistribution { support, weights })
    }

    /// Empirical distribution of observed rewards. Repeated values merge and
    /// the point 1 is appended with zero weight when unobserved.
    pub fn from_observations<I>(observations: I) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut counts = BTreeMap::new();
        for x in observations {
            let x = UnitScalar::new(x)?.get() + 0.0;
            *counts.entry(x.to_bits()).or_insert(0u64) += 1;
        }
        Self::from_counts(&counts)
    }

    /// Builds from a histogram keyed by `f64::to_bits` of nonnegative values,
    /// whose bit order matches numeric order.
    pub fn from_counts(counts: &BTreeMap<u64, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("no observations".into()));
        }
        let mut support = Vec::with_capacity(counts.len() + 1);
        let mut weights = Vec::with_capacity(counts.len() + 1);
        for (&bits, &count) in counts {
            support.push(f64::from_bits(bits));
            weights.push(count as f64 / total as f64);
        }
        if *support.last().unwrap() != 1.0 {
            support.push(1.0);
            weights.push(0.0);
        }
        let sum: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(EmpiricalDistribution { support, weights })
    }

    /// Two-point distribution on `{0, 1}` with mean `p`.
    pub fn bernoulli(p: UnitScalar) -> Self {
        let p = p.get();
        if p >= 1.0 {
            EmpiricalDistribution { support: vec![1.0], weights: vec![1.0] }
        } else {
            EmpiricalDistribution { support: vec![0.0, 1.0], weights: vec![1.0 - p, p] }
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// The pole `l` of `f`: 1 when the point 1 carries weight, else the
    /// second-largest support point.
    pub fn pole(&self) -> f64 {
        let n = self.len();
        if self.weights[n - 1] > 0.0 || n == 1 {
            self.support[n - 1]
        } else {
            self.support[n - 2]
        }
    }

    /// `sum_{p_i > 0} p_i log(p_i / q_i)`.
    pub fn kl_to(&self, q: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(q)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| if *q > 0.0 { p * (p / q).ln() } else { f64::INFINITY })
            .sum()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.weights.iter().copied()).filter(|(_, w)| *w > 0.0)
    }

    /// `f(lambda)` for `lambda > pole`. The common `log lambda` is cancelled
    /// analytically so large `lambda` keeps full precision.
    fn dual(&self, lambda: f64) -> f64 {
        let mut log_sum = 0.0;
        let mut inv_sum = 0.0;
        for (a, w) in self.terms() {
            let r = a / lambda;
            log_sum += w * (-r).ln_1p();
            inv_sum += w / (1.0 - r);
        }
        log_sum + inv_sum.ln()
    }

    /// Maximiser weights `q_i ∝ p_i / (lambda - a_i)`.
    fn tilt(&self, lambda: f64) -> Vec<f64> {
        let raw: Vec<f64> = self
            .support
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| if *w > 0.0 { w / (lambda - a) } else { 0.0 })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }
}

/// Evaluates the dual function `f` at `lambda`, which must exceed the pole.
pub fn f_eval(dist: &EmpiricalDistribution, lambda: f64) -> Result<f64> {
    let pole = dist.pole();
    if !(lambda > pole) {
        return Err(Error::LambdaAtPole { lambda, pole });
    }
    Ok(dist.dual(lambda))
}

/// Optimal distribution of the constrained problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub q: Vec<f64>,
    pub mean: f64,
    /// Root of `f(lambda) = delta`; `None` when the mass-shift closed form applies.
    pub lambda: Option<f64>,
}

/// Upper end of the bisection bracket: `f` is at most `delta` there.
pub fn bracket_upper(dist: &EmpiricalDistribution, delta: f64) -> f64 {
    let l = dist.pole();
    l + (l - dist.support[0]) / (2.0 * (2.0 * delta).sqrt())
}

/// Solves the constrained maximisation through its dual.
///
/// `tol` bounds the final bracket width relative to the distance from the
/// pole. The returned `q` is feasible: `KL(p, q) <= delta` up to rounding.
pub fn solve_p2(dist: &EmpiricalDistribution, delta: f64, tol: f64) -> Result<DualSolution> {
    ensure_positive("delta", delta)?;
    ensure_positive("tol", tol)?;
    let n = dist.len();
    if n == 1 {
        return Err(Error::DegenerateSupport(dist.support[0]));
    }

    if dist.weights[n - 1] == 0.0 {
        let f1 = dist.dual(1.0);
        if f1 < delta {
            let scale = (f1 - delta).exp();
            let denom: f64 =
                dist.terms().filter(|(a, _)| *a < 1.0).map(|(a, w)| w / (1.0 - a)).sum();
            let mut q: Vec<f64> = dist.support[..n - 1]
                .iter()
                .zip(&dist.weights[..n - 1])
                .map(|(a, w)| scale * (w / (1.0 - a)) / denom)
                .collect();
            q.push(-(f1 - delta).exp_m1());
            let mean = dist.support.iter().zip(&q).map(|(a, w)| a * w).sum();
            return Ok(DualSolution { q, mean, lambda: None });
        }
    }

    let pole = dist.pole();
    let mut lo = pole * (1.0 + 1e-12) + 1e-300;
    let mut hi = bracket_upper(dist, delta);
    while dist.dual(hi) > delta {
        // Only reachable through rounding at the Lemma-style bound.
        hi = pole + 2.0 * (hi - pole);
    }
    if dist.dual(lo) <= delta {
        hi = lo;
    }
    // f(lo) > delta >= f(hi)
    for _ in 0..2048 {
        if hi - lo <= tol * (hi - pole) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist.dual(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = dist.tilt(hi);
    let mean = dist.support.iter().zip(&q).map(|(a, w)| a * w).sum();
    Ok(DualSolution { q, mean, lambda: Some(hi) })
}

/// KL-UCB index of one arm: the dual solution's mean at the exploration bonus.
pub fn klucb_general_index(
    dist: &EmpiricalDistribution,
    t: u64,
    pulls: u64,
    c: f64,
) -> Result<UnitScalar> {
    if dist.len() == 1 {
        return Ok(UnitScalar::saturating(dist.support[0]));
    }
    let delta = exploration_bonus(t, pulls, c);
    let solution = solve_p2(dist, delta, LAMBDA_TOL)?;
    Ok(UnitScalar::saturating(solution.mean))
}
