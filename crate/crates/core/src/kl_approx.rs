//! Three solvers for `P1(kl)`, which has no closed form.
//!
//! * [`solve_ucboost_eps`]: bisection over a geometric grid of step
//!   divergences `q_k = 1 - (1 - eta)^k`, boosted with `sq` and `lb`. The
//!   answer is an upper bound whose KL gap is at most `eps`, found in
//!   `O(log(1/eps))` divergence evaluations.
//! * [`solve_klucb_alt`]: bisection over the grid `q_k = exp(-k eps / p)` of
//!   generalised `lb` functions, finished with a closed form.
//! * [`solve_klucb_reference`]: plain bisection on `q`; the kl-UCB baseline
//!   and the test oracle for the other two.

use crate::divergences::{self, kl, lb_bound, lb_bound_shifted, sq_bound, xlogx, UnitScalar};
use crate::error::{ensure_positive, Error, Result};

/// Default q-tolerance of the reference bisection.
pub const REFERENCE_TOL: f64 = 1e-10;

/// Geometric threshold grid `q_k = 1 - (1 - eta)^k` with `eta = eps / (1 + eps)`,
/// restricted to the window `[tau1, tau2]` for one empirical mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGrid {
    pub eps: f64,
    pub eta: f64,
    /// Smallest `k` with `q_k >= p`.
    pub tau1: u64,
    /// Smallest `k` with `q_k >= exp(-eps / p)`; zero when `p = 0`.
    pub tau2: u64,
    pub p: UnitScalar,
    /// `log(1 - eta) = -log(1 + eps)`.
    log_keep: f64,
}

fn check_eps_open_unit(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(eps))
    }
}

/// Smallest `k` with `threshold(k) >= target`, starting from an analytic
/// guess. Returns `k` and `threshold(k)`.
fn first_at_or_above(guess: f64, target: f64, threshold: impl Fn(u64) -> f64) -> (u64, f64) {
    let mut k = if guess.is_finite() && guess > 0.0 { guess.ceil() as u64 } else { 0 };
    let mut q = threshold(k);
    while q < target {
        k += 1;
        q = threshold(k);
    }
    while k > 0 {
        let below = threshold(k - 1);
        if below < target {
            break;
        }
        k -= 1;
        q = below;
    }
    (k, q)
}

fn tau1_index(p: f64, log_keep: f64) -> u64 {
    let threshold = |k: u64| -((k as f64) * log_keep).exp_m1();
    first_at_or_above((-p).ln_1p() / log_keep, p, threshold).0
}

/// `tau2` and `q_tau2`; `(0, 0)` when `p = 0`.
fn tau2_index(p: f64, eps: f64, log_keep: f64) -> (u64, f64) {
    if p == 0.0 {
        return (0, 0.0);
    }
    let threshold = |k: u64| -((k as f64) * log_keep).exp_m1();
    let target = (-eps / p).exp();
    first_at_or_above((-target).ln_1p() / log_keep, target, threshold)
}

/// Builds the step grid for mean `p` and approximation error `eps`.
pub fn build_step_grid(p: UnitScalar, eps: f64) -> Result<StepGrid> {
    check_eps_open_unit(eps)?;
    let pv = p.get();
    if pv >= 1.0 {
        return Err(Error::Config("the step grid is undefined at p = 1".into()));
    }
    let log_keep = -eps.ln_1p();
    let tau1 = tau1_index(pv, log_keep);
    let (tau2, _) = tau2_index(pv, eps, log_keep);
    Ok(StepGrid { eps, eta: eps / (1.0 + eps), tau1, tau2, p, log_keep })
}

impl StepGrid {
    /// `q_k = 1 - (1 - eta)^k`.
    #[inline]
    pub fn threshold(&self, k: u64) -> f64 {
        -((k as f64) * self.log_keep).exp_m1()
    }

    /// `kl(p, q_k)` using the exact `log(1 - q_k) = k log(1 - eta)`.
    #[inline]
    fn kl_at(&self, k: u64) -> f64 {
        self.kl_with(k, self.threshold(k))
    }

    /// [`Self::kl_at`] with `q_k` already known.
    #[inline]
    fn kl_with(&self, k: u64, qk: f64) -> f64 {
        let p = self.p.get();
        let log_tail = (k as f64) * self.log_keep;
        let head = if p > 0.0 { p * (p.ln() - qk.ln()) } else { 0.0 };
        head + (1.0 - p) * ((-p).ln_1p() - log_tail)
    }

    /// Number of step divergences in the window.
    pub fn len(&self) -> u64 {
        if self.tau1 <= self.tau2 {
            self.tau2 - self.tau1 + 1
        } else {
            0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pointwise maximum of `{sq, lb, step_tau1, ..., step_tau2}` at `q`.
    pub fn envelope(&self, q: f64) -> f64 {
        let p = self.p.get();
        let mut best = 2.0 * (p - q) * (p - q);
        best = best.max(divergences::evaluate_raw(divergences::Divergence::Lb, p, q));
        for k in self.tau1..=self.tau2 {
            let qk = self.threshold(k);
            if q > qk {
                best = best.max(kl(p, qk));
            }
        }
        best
    }
}

/// Which branch of the step-grid search produced the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsBranch {
    /// `p = 1`.
    Saturated,
    /// Empty window: `tau1 > tau2`.
    EmptyWindow,
    /// `kl(p, q_tau2) < delta`: the `lb` closed form is within `eps`.
    LowerBound,
    /// `kl(p, q_tau1) >= delta`.
    FirstStep,
    /// Bisection located `kl(p, q_{k-1}) < delta <= kl(p, q_k)`.
    Bracket(u64),
}

/// Result of an instrumented search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome<B> {
    pub value: UnitScalar,
    /// Bisection loop iterations.
    pub iterations: u32,
    pub branch: B,
}

/// UCBoost(eps) index: see [`ucboost_eps_search`].
#[inline]
pub fn solve_ucboost_eps(p: UnitScalar, delta: f64, eps: f64) -> Result<UnitScalar> {
    ucboost_eps_search(p, delta, eps).map(|o| o.value)
}

/// Solves `P1` for the envelope `max{sq, lb, step_tau1, ..., step_tau2}` by
/// bisection over the step index.
///
/// The result is never below the exact kl-UCB bound and its KL divergence
/// from `p` exceeds `delta` by at most `eps`.
pub fn ucboost_eps_search(p: UnitScalar, delta: f64, eps: f64) -> Result<SearchOutcome<EpsBranch>> {
    ensure_positive("delta", delta)?;
    check_eps_open_unit(eps)?;
    let pv = p.get();
    if pv >= 1.0 {
        return Ok(SearchOutcome { value: UnitScalar::ONE, iterations: 0, branch: EpsBranch::Saturated });
    }
    let cap = sq_bound(pv, delta);
    let done = |q: f64, iterations, branch| SearchOutcome {
        value: UnitScalar::saturating(q.min(cap)),
        iterations,
        branch,
    };

    // tau1 > tau2 exactly when q_tau2 < p, and both that case and
    // kl(p, q_tau2) < delta end in the lb closed form, so tau1 is only
    // computed once a bracket is needed.
    let log_keep = -eps.ln_1p();
    let (tau2, q_tau2) = tau2_index(pv, eps, log_keep);
    let mut grid = StepGrid { eps, eta: eps / (1.0 + eps), tau1: 0, tau2, p, log_keep };
    if q_tau2 < pv {
        return Ok(done(lb_bound(pv, delta), 0, EpsBranch::EmptyWindow));
    }
    if grid.kl_with(tau2, q_tau2) < delta {
        return Ok(done(lb_bound(pv, delta), 0, EpsBranch::LowerBound));
    }
    grid.tau1 = tau1_index(pv, log_keep);
    if grid.kl_at(grid.tau1) >= delta {
        return Ok(done(grid.threshold(grid.tau1), 0, EpsBranch::FirstStep));
    }

    // kl(q_lo) < delta <= kl(q_hi)
    let (mut lo, mut hi) = (grid.tau1, grid.tau2);
    let mut iterations = 0;
    while hi - lo > 1 {
        iterations += 1;
        let mid = lo + (hi - lo) / 2;
        if grid.kl_at(mid) >= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(done(grid.threshold(hi), iterations, EpsBranch::Bracket(hi)))
}

/// Grid `q_k = exp(-k eps / p)` for `k <= cap`, where `cap` is the largest
/// `k` with `q_k >= p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltGrid {
    pub eps: f64,
    pub cap: u64,
    pub p: UnitScalar,
}

/// Builds the exponential grid. `p = 0` gives `cap = 0`.
pub fn build_alt_grid(p: UnitScalar, eps: f64) -> Result<AltGrid> {
    ensure_positive("eps", eps)?;
    let pv = p.get();
    if pv == 0.0 || pv >= 1.0 {
        return Ok(AltGrid { eps, cap: 0, p });
    }
    let threshold = |k: u64| (-(k as f64) * eps / pv).exp();
    let mut cap = (-pv * pv.ln() / eps).floor() as u64;
    while cap > 0 && threshold(cap) < pv {
        cap -= 1;
    }
    while threshold(cap + 1) >= pv {
        cap += 1;
    }
    Ok(AltGrid { eps, cap, p })
}

impl AltGrid {
    #[inline]
    pub fn threshold(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else {
            (-(k as f64) * self.eps / self.p.get()).exp()
        }
    }

    /// `kl(p, q_k)` using the exact `log q_k = -k eps / p`.
    #[inline]
    fn kl_at(&self, k: u64) -> f64 {
        if k == 0 {
            return f64::INFINITY;
        }
        let p = self.p.get();
        let x = (k as f64) * self.eps / p;
        xlogx(p) + (k as f64) * self.eps + (1.0 - p) * ((-p).ln_1p() - (-(-x).exp_m1()).ln())
    }

    /// The generalised lower bound `d_lb^k(p, q)`.
    pub fn lower_bound_k(&self, k: u64, q: f64) -> f64 {
        let p = self.p.get();
        let qk = self.threshold(k);
        let head = if p > 0.0 { p * (p / qk).ln() } else { 0.0 };
        let tail_q = if q <= qk { q } else { qk };
        let tail = if p >= 1.0 {
            0.0
        } else if tail_q >= 1.0 {
            f64::INFINITY
        } else {
            (1.0 - p) * ((1.0 - p) / (1.0 - tail_q)).ln()
        };
        head + tail
    }

    /// `max_{k <= cap} d_lb^k(p, q)`.
    pub fn envelope(&self, q: f64) -> f64 {
        (0..=self.cap).map(|k| self.lower_bound_k(k, q)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// kl-UCB bound via the exponential-grid search. See [`klucb_alt_search`].
#[inline]
pub fn solve_klucb_alt(p: UnitScalar, delta: f64, eps: f64) -> Result<UnitScalar> {
    klucb_alt_search(p, delta, eps).map(|o| o.value)
}

/// Finds `k` with `kl(p, q_{k+1}) < delta <= kl(p, q_k)` by bisection over
/// `[0, cap]` and returns the solution of `d_lb^k(p, q) = delta`.
///
/// The branch value is the selected `k`. The result `q'` satisfies
/// `q' >= q*` and `0 <= kl(p, q') - delta <= eps`.
pub fn klucb_alt_search(p: UnitScalar, delta: f64, eps: f64) -> Result<SearchOutcome<u64>> {
    ensure_positive("delta", delta)?;
    ensure_positive("eps", eps)?;
    let pv = p.get();
    if pv >= 1.0 {
        return Ok(SearchOutcome { value: UnitScalar::ONE, iterations: 0, branch: 0 });
    }
    let grid = build_alt_grid(p, eps)?;
    // kl(q_lo) >= delta > kl(q_hi); q_0 = 1 and index cap + 1 counts as zero.
    let (mut lo, mut hi) = (0u64, grid.cap + 1);
    let mut iterations = 0;
    while hi - lo > 1 {
        iterations += 1;
        let mid = lo + (hi - lo) / 2;
        if grid.kl_at(mid) >= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = lb_bound_shifted(pv, delta, lo as f64 * eps);
    Ok(SearchOutcome { value: UnitScalar::saturating(q), iterations, branch: lo })
}

/// Bisection on `kl(p, .) = delta` over `[p, 1)` until the bracket is
/// narrower than `tol`. Returns the lower end, so `kl(p, result) <= delta`.
pub fn solve_klucb_reference(p: UnitScalar, delta: f64, tol: f64) -> Result<UnitScalar> {
    ensure_positive("delta", delta)?;
    ensure_positive("tol", tol)?;
    let pv = p.get();
    if pv >= 1.0 {
        return Ok(UnitScalar::ONE);
    }
    let (mut lo, mut hi) = (pv, 1.0);
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kl(pv, mid) > delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(UnitScalar::saturating(lo))
}
