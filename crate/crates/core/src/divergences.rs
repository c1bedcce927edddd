//! Semi-distance functions on the unit square and closed-form solutions of
//! the one-dimensional problem
//!
//! ```text
//! P1(d):  maximize q over [0, 1]  subject to  d(p, q) <= delta
//! ```
//!
//! Every family here is dominated pointwise by the Bernoulli KL divergence,
//! so each closed-form solution is an upper bound on the kl-UCB index.
//!
//! Conventions: `0 log 0 = 0`, `0 log(0/0) = 0`, and `x log(x/0) = +inf` for
//! `x > 0`. Infinite values are returned explicitly as `f64::INFINITY`.

use std::fmt;

use crate::error::{ensure_positive, Error, Result};

/// Inputs within this distance of `[0, 1]` are clamped rather than rejected.
pub const UNIT_CLAMP_BAND: f64 = 1e-12;

/// Largest `f64` strictly below one.
pub(crate) const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// A real number in `[0, 1]`: empirical means, thresholds and indices.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitScalar(f64);

impl UnitScalar {
    pub const ZERO: UnitScalar = UnitScalar(0.0);
    pub const ONE: UnitScalar = UnitScalar(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || !(-UNIT_CLAMP_BAND..=1.0 + UNIT_CLAMP_BAND).contains(&value) {
            return Err(Error::OutOfUnitInterval(value));
        }
        Ok(UnitScalar(value.clamp(0.0, 1.0)))
    }

    /// Clamps without validation. Only for values already known to be in
    /// `[0, 1]` up to rounding.
    pub(crate) fn saturating(value: f64) -> Self {
        UnitScalar(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for UnitScalar {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        UnitScalar::new(value)
    }
}

impl From<UnitScalar> for f64 {
    fn from(u: UnitScalar) -> f64 {
        u.0
    }
}

impl fmt::Display for UnitScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One semi-distance family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    /// Bernoulli Kullback-Leibler divergence.
    Kl,
    /// `2 (p - q)^2`; UCB(sq) is UCB1.
    Sq,
    /// Biquadratic: `2 (p - q)^2 + 4/9 (p - q)^4`.
    Bq,
    /// Twice the squared Hellinger distance between Bernoulli laws.
    H,
    /// `p log p + (1 - p) log((1 - p) / (1 - q))`, a lower bound on kl.
    Lb,
    /// Shifted tangent line of kl through `(1 + p) / 2`.
    T,
    /// `kl(p, q_k) 1{q > q_k}` with `q_k = 1 - (1 - eta)^k`.
    Step { k: u32, eta: f64 },
}

impl Divergence {
    /// Builds a step divergence, validating `eta` in `(0, 1)`.
    pub fn step(k: u32, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Config(format!("step eta must lie in (0, 1), got {eta}")));
        }
        Ok(Divergence::Step { k, eta })
    }

    /// Threshold `q_k` of a step divergence.
    pub fn step_threshold(k: u32, eta: f64) -> f64 {
        -(f64::from(k) * (-eta).ln_1p()).exp_m1()
    }

    /// Nonnegative, zero exactly on the diagonal, and monotone.
    pub fn is_strong(&self) -> bool {
        matches!(self, Divergence::Kl | Divergence::Sq | Divergence::Bq | Divergence::H)
    }

    /// Whether `P1` is solved by a formula that does not depend on `p`
    /// satisfying extra preconditions. Usable inside a boosted set.
    pub fn boostable(&self) -> bool {
        matches!(
            self,
            Divergence::Sq | Divergence::Bq | Divergence::H | Divergence::Lb | Divergence::T
        )
    }

    /// Short name used in policy strings.
    pub fn short_name(&self) -> String {
        match self {
            Divergence::Kl => "kl".into(),
            Divergence::Sq => "sq".into(),
            Divergence::Bq => "bq".into(),
            Divergence::H => "h".into(),
            Divergence::Lb => "lb".into(),
            Divergence::T => "t".into(),
            Divergence::Step { k, eta } => format!("step{k}@{eta}"),
        }
    }

    pub fn from_short_name(name: &str) -> Option<Self> {
        Some(match name {
            "kl" => Divergence::Kl,
            "sq" => Divergence::Sq,
            "bq" => Divergence::Bq,
            "h" => Divergence::H,
            "lb" => Divergence::Lb,
            "t" => Divergence::T,
            _ => return None,
        })
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_name())
    }
}

/// `x log(x / y)` with the entropy conventions.
#[inline]
fn xlog_ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// `x log x` with `0 log 0 = 0`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Bernoulli KL divergence on raw floats.
#[inline]
pub fn kl(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    xlog_ratio(p, q) + xlog_ratio(1.0 - p, 1.0 - q)
}

fn lb(p: f64, q: f64) -> f64 {
    xlogx(p) + xlog_ratio(1.0 - p, 1.0 - q)
}

fn hellinger(p: f64, q: f64) -> f64 {
    let a = p.sqrt() - q.sqrt();
    let b = (1.0 - p).sqrt() - (1.0 - q).sqrt();
    a * a + b * b
}

fn tangent(p: f64, q: f64) -> f64 {
    2.0 * q / (p + 1.0) + xlog_ratio(p, p + 1.0) + (2.0 / (std::f64::consts::E * (1.0 + p))).ln()
}

/// Evaluates `d(p, q)`. Total on the unit square.
pub fn evaluate(d: Divergence, p: UnitScalar, q: UnitScalar) -> f64 {
    evaluate_raw(d, p.get(), q.get())
}

pub(crate) fn evaluate_raw(d: Divergence, p: f64, q: f64) -> f64 {
    match d {
        Divergence::Kl => kl(p, q),
        Divergence::Sq => 2.0 * (p - q) * (p - q),
        Divergence::Bq => {
            let x2 = (p - q) * (p - q);
            2.0 * x2 + 4.0 / 9.0 * x2 * x2
        }
        Divergence::H => hellinger(p, q),
        Divergence::Lb => lb(p, q),
        Divergence::T => tangent(p, q),
        Divergence::Step { k, eta } => {
            let qk = Divergence::step_threshold(k, eta);
            if q > qk {
                kl(p, qk)
            } else {
                0.0
            }
        }
    }
}

/// `min(1, p + sqrt(delta / 2))`, the UCB1 bound.
#[inline]
pub(crate) fn sq_bound(p: f64, delta: f64) -> f64 {
    (p + (delta / 2.0).sqrt()).min(1.0)
}

/// Below this `1 - q`, the `lb` closed form is rounded down to a
/// floating-point feasible value.
const LB_SNAP_TAIL: f64 = 1e-6;

/// Closed-form `P1(d_lb)` solution, kept strictly below one for `p < 1`
/// since `d_lb(p, 1) = +inf`.
#[inline]
pub(crate) fn lb_bound(p: f64, delta: f64) -> f64 {
    lb_bound_shifted(p, delta, 0.0)
}

/// Solution of `d_lb(p, q) + shift = delta`, i.e. the `P1` solution of the
/// generalised lower bound whose `p log p` term is raised by `shift`.
#[inline]
pub(crate) fn lb_bound_shifted(p: f64, delta: f64, shift: f64) -> f64 {
    let tail = (1.0 - p) * ((xlogx(p) - delta + shift) / (1.0 - p)).exp();
    let mut q = (1.0 - tail).min(BELOW_ONE);
    if tail < LB_SNAP_TAIL {
        // One ulp of q moves d_lb by about (1 - p) ulp / tail here.
        while q > p && lb(p, q) + shift > delta {
            q = q.next_down();
        }
    }
    q
}

fn bq_bound(p: f64, delta: f64) -> f64 {
    // x^2 = -9/4 + sqrt(81/16 + 9 delta / 4), rationalised to avoid cancellation.
    let x2 = (2.25 * delta) / (2.25 + (81.0 / 16.0 + 2.25 * delta).sqrt());
    (p + x2.sqrt()).min(1.0)
}

fn hellinger_bound(p: f64, delta: f64) -> f64 {
    if delta >= 2.0 - 2.0 * p.sqrt() {
        return 1.0;
    }
    let root = (1.0 - delta / 2.0) * p.sqrt() + ((1.0 - p) * (delta - delta * delta / 4.0)).sqrt();
    (root * root).min(1.0)
}

fn tangent_bound(p: f64, delta: f64) -> f64 {
    let offset = xlog_ratio(p, p + 1.0) + (2.0 / (std::f64::consts::E * (1.0 + p))).ln();
    ((p + 1.0) / 2.0 * (delta - offset)).min(1.0)
}

/// Solves `P1(d)` in closed form: the largest `q` in `[0, 1]` with
/// `d(p, q) <= delta`.
///
/// `kl` is rejected (see [`crate::kl_approx`]); a step divergence must have
/// its threshold at or above `p`.
pub fn solve_p1_closed_form(d: Divergence, p: UnitScalar, delta: f64) -> Result<UnitScalar> {
    ensure_positive("delta", delta)?;
    let p = p.get();
    if let Divergence::Kl = d {
        return Err(Error::NoClosedForm(d.short_name()));
    }
    if p >= 1.0 {
        return Ok(UnitScalar::ONE);
    }
    let q = match d {
        Divergence::Kl => unreachable!(),
        Divergence::Sq => sq_bound(p, delta),
        Divergence::Bq => bq_bound(p, delta),
        Divergence::H => hellinger_bound(p, delta),
        Divergence::Lb => lb_bound(p, delta),
        Divergence::T => tangent_bound(p, delta),
        Divergence::Step { k, eta } => {
            let qk = Divergence::step_threshold(k, eta);
            if qk < p {
                return Err(Error::StepBelowMean { k, threshold: qk, p });
            }
            if delta < kl(p, qk) {
                qk
            } else {
                1.0
            }
        }
    };
    Ok(UnitScalar::saturating(q))
}

/// Raw-float variant used on the policy hot path; `d` must be boostable.
#[inline]
pub(crate) fn solve_boostable(d: Divergence, p: f64, delta: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    match d {
        Divergence::Sq => sq_bound(p, delta),
        Divergence::Bq => bq_bound(p, delta),
        Divergence::H => hellinger_bound(p, delta),
        Divergence::Lb => lb_bound(p, delta),
        Divergence::T => tangent_bound(p, delta),
        Divergence::Kl | Divergence::Step { .. } => unreachable!("not boostable: {d}"),
    }
}
