//! Reward models and experiment scenarios.
//!
//! Every (master seed, run, arm) triple owns an independent ChaCha8 stream
//! keyed by all three values, so a replication's rewards do not depend on
//! execution order or on which policy consumes them.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmSpec {
    Bernoulli { mean: f64 },
    Beta { a: f64, b: f64 },
}

impl ArmSpec {
    pub fn bernoulli(mean: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mean) {
            return Err(Error::OutOfUnitInterval(mean));
        }
        Ok(ArmSpec::Bernoulli { mean })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::Config(format!("beta shapes must be positive, got ({a}, {b})")));
        }
        Ok(ArmSpec::Beta { a, b })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmSpec::Bernoulli { mean } => mean,
            ArmSpec::Beta { a, b } => a / (a + b),
        }
    }

    pub fn sampler(&self) -> ArmSampler {
        match *self {
            ArmSpec::Bernoulli { mean } => ArmSampler::Bernoulli(mean),
            ArmSpec::Beta { a, b } => ArmSampler::Beta(
                Gamma::new(a, 1.0).expect("validated shape"),
                Gamma::new(b, 1.0).expect("validated shape"),
            ),
        }
    }
}

impl fmt::Display for ArmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmSpec::Bernoulli { mean } => write!(f, "bernoulli {mean}"),
            ArmSpec::Beta { a, b } => write!(f, "beta {a} {b}"),
        }
    }
}

/// Prepared sampler for one arm.
#[derive(Debug, Clone)]
pub enum ArmSampler {
    Bernoulli(f64),
    /// `X / (X + Y)` with `X ~ Gamma(a, 1)` and `Y ~ Gamma(b, 1)`.
    Beta(Gamma<f64>, Gamma<f64>),
}

impl ArmSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ArmSampler::Bernoulli(mean) => {
                if rng.random::<f64>() < *mean {
                    1.0
                } else {
                    0.0
                }
            }
            ArmSampler::Beta(x, y) => {
                let x = x.sample(rng);
                let y = y.sample(rng);
                (x / (x + y)).clamp(0.0, 1.0)
            }
        }
    }
}

/// Draws one reward from `arm`.
pub fn sample<R: Rng + ?Sized>(arm: &ArmSpec, rng: &mut R) -> f64 {
    arm.sampler().sample(rng)
}

/// Reward stream for one arm of one replication.
pub fn reward_stream(seed: u64, run: u64, arm: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&run.to_le_bytes());
    key[16..24].copy_from_slice(&arm.to_le_bytes());
    key[24..].copy_from_slice(b"rewards\0");
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub arms: Vec<ArmSpec>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, arms: Vec<ArmSpec>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::Config(format!("a scenario needs at least 2 arms, got {}", arms.len())));
        }
        Ok(Scenario { name: name.into(), arms })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn best_mean(&self) -> f64 {
        self.arms.iter().map(ArmSpec::mean).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Suboptimality gaps `mu* - mu_a`.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.arms.iter().map(|a| best - a.mean()).collect()
    }
}

pub const PRESETS: [&str; 3] = ["bernoulli1", "bernoulli2", "beta"];

/// Named experiment scenarios.
pub fn preset(name: &str) -> Result<Scenario> {
    let arms = match name {
        "bernoulli1" => (1..=9).map(|i| ArmSpec::Bernoulli { mean: i as f64 / 10.0 }).collect(),
        "bernoulli2" => [0.01, 0.01, 0.01, 0.02, 0.02, 0.02, 0.05, 0.05, 0.05, 0.1]
            .into_iter()
            .map(|mean| ArmSpec::Bernoulli { mean })
            .collect(),
        "beta" => (1..=9).map(|i| ArmSpec::Beta { a: i as f64, b: 2.0 }).collect(),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Scenario::new(name, arms)
}

/// Parses the line format: `bernoulli <mu>` or `beta <a> <b>` per line;
/// blank lines and `#` comments are skipped.
pub fn parse_scenario(name: &str, text: &str) -> Result<Scenario> {
    let mut arms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::ScenarioParse { line: line_no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number")));
        let arm = match fields.as_slice() {
            ["bernoulli", mu] => ArmSpec::bernoulli(num(mu)?).map_err(|e| err(e.to_string()))?,
            ["beta", a, b] => ArmSpec::beta(num(a)?, num(b)?).map_err(|e| err(e.to_string()))?,
            _ => return Err(err(format!("expected `bernoulli <mu>` or `beta <a> <b>`, got `{line}`"))),
        };
        arms.push(arm);
    }
    Scenario::new(name, arms)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&path.display().to_string(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(preset("bernoulli1").unwrap().arms[8].mean(), 0.9);
        let b2 = preset("bernoulli2").unwrap();
        assert_eq!(b2.num_arms(), 10);
        assert_eq!(b2.arms[9].mean(), 0.1);
        let beta = preset("beta").unwrap();
        assert!((beta.arms[0].mean() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(beta.num_arms(), 9);
        assert!(matches!(preset("gauss"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn degenerate_bernoulli_arms() {
        let mut rng = reward_stream(1, 1, 0);
        for _ in 0..1000 {
            assert_eq!(sample(&ArmSpec::Bernoulli { mean: 0.0 }, &mut rng), 0.0);
            assert_eq!(sample(&ArmSpec::Bernoulli { mean: 1.0 }, &mut rng), 1.0);
        }
    }

    #[test]
    fn beta_mean_million_draws() {
        let s = ArmSpec::beta(3.0, 2.0).unwrap().sampler();
        let mut rng = reward_stream(7, 0, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = s.sample(&mut rng);
            assert!((0.0..=1.0).contains(&x));
            sum += x;
        }
        assert!((sum / n as f64 - 0.6).abs() < 0.002);
    }

    #[test]
    fn streams_are_keyed() {
        let draw = |s, r, a| {
            let mut rng = reward_stream(s, r, a);
            (0..8).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(draw(1, 2, 3), draw(1, 2, 3));
        assert_ne!(draw(1, 2, 3), draw(1, 3, 2));
        assert_ne!(draw(1, 2, 3), draw(2, 2, 3));
    }

    #[test]
    fn scenario_files() {
        let s = parse_scenario("x", "bernoulli 0.3\nbernoulli 0.7").unwrap();
        assert_eq!(s.arms, vec![ArmSpec::Bernoulli { mean: 0.3 }, ArmSpec::Bernoulli { mean: 0.7 }]);
        let s = parse_scenario("x", "# two arms\n\nbeta 1 2\nbernoulli 0.5  # trailing\n").unwrap();
        assert!((s.arms[0].mean() - 1.0 / 3.0).abs() < 1e-15);
        match parse_scenario("x", "bernoulli 1.5\nbernoulli 0.2") {
            Err(Error::ScenarioParse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_scenario("x", "bernoulli 0.5\nbeta 1\n") {
            Err(Error::ScenarioParse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_scenario("x", "beta 0 1\nbernoulli 0.1"), Err(Error::ScenarioParse { line: 1, .. })));
        assert!(parse_scenario("x", "bernoulli 0.5").is_err());
    }
}
