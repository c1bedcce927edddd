//! Index policies built on the generic UCB loop: one initialization pull per
//! arm, then always the arm with the largest upper confidence bound.
//!
//! Arm ids are 0-based. Time is 1-based: the `t`-th decision is made when
//! `t - 1` decisions have already been recorded.

use std::collections::BTreeMap;
use std::fmt;

use crate::divergences::{self, solve_p1_closed_form, Divergence, UnitScalar};
use crate::error::{ensure_positive, Error, Result};
use crate::kl_approx::{solve_klucb_reference, solve_ucboost_eps};
use crate::klucb_dual::{klucb_general_index, EmpiricalDistribution};

/// `(log t + c log(max(1, log t))) / pulls`.
#[inline]
pub fn exploration_bonus(t: u64, pulls: u64, c: f64) -> f64 {
    let log_t = (t as f64).ln();
    let bonus = if c == 0.0 { log_t } else { log_t + c * log_t.max(1.0).ln() };
    bonus / pulls as f64
}

/// The divergence set used by the `ucboost_d` preset.
pub fn default_boost_set() -> Vec<Divergence> {
    vec![Divergence::Bq, Divergence::H, Divergence::Lb]
}

/// Minimum of the closed-form bounds over `divs`, i.e. the `P1` solution for
/// their pointwise maximum.
pub fn ucboost_index(divs: &[Divergence], p: UnitScalar, delta: f64) -> Result<UnitScalar> {
    if divs.is_empty() {
        return Err(Error::InvalidDivergenceSet("empty".into()));
    }
    let mut best = 1.0f64;
    for &d in divs {
        best = best.min(solve_p1_closed_form(d, p, delta)?.get());
    }
    Ok(UnitScalar::saturating(best))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    /// UCB(sq).
    Ucb1,
    UcbBq,
    UcbH,
    /// Boosted minimum over a feasible divergence set.
    UcBoost(Vec<Divergence>),
    UcBoostEps { eps: f64 },
    /// kl-UCB by reference bisection with the given q-tolerance.
    KlUcbRef { tol: f64 },
    /// KL-UCB on the empirical reward distribution.
    KlUcbGeneral,
}

/// Parameters used when a policy string omits them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDefaults {
    pub epsilon: f64,
    pub kl_tol: f64,
}

impl Default for PolicyDefaults {
    fn default() -> Self {
        PolicyDefaults { epsilon: 0.01, kl_tol: crate::kl_approx::REFERENCE_TOL }
    }
}

impl PolicyKind {
    /// Parses `ucb1`, `ucb_bq`, `ucb_h`, `ucboost_d[:bq+h+lb]`,
    /// `ucboost_eps[:EPS]`, `klucb_ref[:TOL]` or `klucb_general`.
    pub fn parse(s: &str, defaults: PolicyDefaults) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let unknown = || Error::UnknownPolicy(s.to_string());
        let number = |a: &str| a.parse::<f64>().map_err(|_| unknown());
        let kind = match (name.to_ascii_lowercase().as_str(), arg) {
            ("ucb1", None) => PolicyKind::Ucb1,
            ("ucb_bq", None) => PolicyKind::UcbBq,
            ("ucb_h", None) => PolicyKind::UcbH,
            ("ucboost_d", None) => PolicyKind::UcBoost(default_boost_set()),
            ("ucboost_d", Some(set)) => PolicyKind::UcBoost(
                set.split('+')
                    .map(|d| Divergence::from_short_name(d.trim()).ok_or_else(unknown))
                    .collect::<Result<_>>()?,
            ),
            ("ucboost_eps", None) => PolicyKind::UcBoostEps { eps: defaults.epsilon },
            ("ucboost_eps", Some(e)) => PolicyKind::UcBoostEps { eps: number(e)? },
            ("klucb_ref", None) => PolicyKind::KlUcbRef { tol: defaults.kl_tol },
            ("klucb_ref", Some(t)) => PolicyKind::KlUcbRef { tol: number(t)? },
            ("klucb_general", None) => PolicyKind::KlUcbGeneral,
            _ => return Err(unknown()),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PolicyKind::UcBoost(divs) => {
                if divs.is_empty() {
                    return Err(Error::InvalidDivergenceSet("empty".into()));
                }
                if let Some(d) = divs.iter().find(|d| !d.boostable()) {
                    return Err(Error::InvalidDivergenceSet(format!("{d} has no closed form")));
                }
                if !divs.iter().any(Divergence::is_strong) {
                    return Err(Error::InvalidDivergenceSet(
                        "needs at least one strong semi-distance (sq, bq or h)".into(),
                    ));
                }
                Ok(())
            }
            PolicyKind::UcBoostEps { eps } if !(*eps > 0.0 && *eps < 1.0) => {
                Err(Error::EpsilonOutOfRange(*eps))
            }
            PolicyKind::KlUcbRef { tol } => ensure_positive("kl tolerance", *tol),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Ucb1 => f.write_str("ucb1"),
            PolicyKind::UcbBq => f.write_str("ucb_bq"),
            PolicyKind::UcbH => f.write_str("ucb_h"),
            PolicyKind::UcBoost(divs) => {
                let names: Vec<String> = divs.iter().map(Divergence::short_name).collect();
                write!(f, "ucboost_d:{}", names.join("+"))
            }
            PolicyKind::UcBoostEps { eps } => write!(f, "ucboost_eps:{eps}"),
            PolicyKind::KlUcbRef { tol } => write!(f, "klucb_ref:{tol:e}"),
            PolicyKind::KlUcbGeneral => f.write_str("klucb_general"),
        }
    }
}

/// A policy kind plus the exploration constant `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub c: f64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, c: f64) -> Result<Self> {
        kind.validate()?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Config(format!("c must be a nonnegative number, got {c}")));
        }
        Ok(PolicyConfig { kind, c })
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }
}

/// Pull count and reward sum of one arm. The reward histogram is kept only
/// for policies that need the full empirical distribution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmStatistics {
    pub pulls: u64,
    pub reward_sum: f64,
    histogram: Option<BTreeMap<u64, u64>>,
}

impl ArmStatistics {
    pub fn new(pulls: u64, reward_sum: f64) -> Result<Self> {
        if !(reward_sum >= 0.0) || reward_sum > pulls as f64 + divergences::UNIT_CLAMP_BAND {
            return Err(Error::Config(format!(
                "reward sum {reward_sum} is inconsistent with {pulls} pulls"
            )));
        }
        Ok(ArmStatistics { pulls, reward_sum, histogram: None })
    }

    fn tracking() -> Self {
        ArmStatistics { histogram: Some(BTreeMap::new()), ..Default::default() }
    }

    /// Empirical mean; `None` before the first pull.
    pub fn mean(&self) -> Option<UnitScalar> {
        (self.pulls > 0).then(|| UnitScalar::saturating(self.reward_sum / self.pulls as f64))
    }

    /// Empirical reward distribution if observations are tracked.
    pub fn distribution(&self) -> Option<Result<EmpiricalDistribution>> {
        self.histogram.as_ref().map(EmpiricalDistribution::from_counts)
    }

    fn record(&mut self, reward: f64) {
        self.pulls += 1;
        self.reward_sum += reward;
        if let Some(h) = self.histogram.as_mut() {
            *h.entry((reward + 0.0).to_bits()).or_insert(0) += 1;
        }
    }
}

/// Upper confidence bound of one arm at decision time `t`.
///
/// `klucb_general` uses the tracked histogram when present and otherwise
/// the two-point distribution on `{0, 1}` with the arm's mean.
pub fn index(cfg: &PolicyConfig, arm: &ArmStatistics, t: u64) -> Result<UnitScalar> {
    let p = arm
        .mean()
        .ok_or_else(|| Error::Config("index requires at least one pull".into()))?;
    let delta = exploration_bonus(t, arm.pulls, cfg.c);
    ensure_positive("exploration bonus", delta)?;
    match &cfg.kind {
        PolicyKind::Ucb1 => Ok(raw_closed_form(Divergence::Sq, p, delta)),
        PolicyKind::UcbBq => Ok(raw_closed_form(Divergence::Bq, p, delta)),
        PolicyKind::UcbH => Ok(raw_closed_form(Divergence::H, p, delta)),
        PolicyKind::UcBoost(divs) => {
            let q = divs
                .iter()
                .map(|&d| divergences::solve_boostable(d, p.get(), delta))
                .fold(1.0, f64::min);
            Ok(UnitScalar::saturating(q))
        }
        PolicyKind::UcBoostEps { eps } => solve_ucboost_eps(p, delta, *eps),
        PolicyKind::KlUcbRef { tol } => solve_klucb_reference(p, delta, *tol),
        PolicyKind::KlUcbGeneral => {
            let dist = match arm.distribution() {
                Some(d) => d?,
                None => EmpiricalDistribution::bernoulli(p),
            };
            klucb_general_index(&dist, t, arm.pulls, cfg.c)
        }
    }
}

#[inline]
fn raw_closed_form(d: Divergence, p: UnitScalar, delta: f64) -> UnitScalar {
    UnitScalar::saturating(divergences::solve_boostable(d, p.get(), delta))
}

/// Per-arm statistics and the number of decisions made so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    arms: Vec<ArmStatistics>,
    t: u64,
}

impl PolicyState {
    pub fn new(num_arms: usize, cfg: &PolicyConfig) -> Self {
        let fresh = if cfg.kind == PolicyKind::KlUcbGeneral {
            ArmStatistics::tracking()
        } else {
            ArmStatistics::default()
        };
        PolicyState { arms: vec![fresh; num_arms], t: 0 }
    }

    pub fn arms(&self) -> &[ArmStatistics] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Decisions recorded so far.
    pub fn time(&self) -> u64 {
        self.t
    }

    /// Indices of every arm for the next decision.
    pub fn indices(&self, cfg: &PolicyConfig) -> Result<Vec<UnitScalar>> {
        let t = self.t + 1;
        self.arms.iter().map(|arm| index(cfg, arm, t)).collect()
    }
}

/// Next arm: arm `t - 1` during initialization, then the largest index with
/// ties going to the lowest id.
pub fn select_arm(state: &PolicyState, cfg: &PolicyConfig) -> Result<usize> {
    let k = state.arms.len();
    if k == 0 {
        return Err(Error::Config("no arms".into()));
    }
    if (state.t as usize) < k {
        return Ok(state.t as usize);
    }
    let t = state.t + 1;
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (a, arm) in state.arms.iter().enumerate() {
        let v = index(cfg, arm, t)?.get();
        if v > best_value {
            best = a;
            best_value = v;
        }
    }
    Ok(best)
}

/// Records one reward for `arm` and advances time.
pub fn update(state: &mut PolicyState, arm: usize, reward: f64) -> Result<()> {
    let reward = UnitScalar::new(reward)?.get();
    let slot = state
        .arms
        .get_mut(arm)
        .ok_or_else(|| Error::Config(format!("arm {arm} out of range")))?;
    slot.record(reward);
    state.t += 1;
    Ok(())
}
