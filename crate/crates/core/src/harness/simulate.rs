use crate::environments::{reward_stream, ArmSampler, Scenario};
use crate::error::{Error, Result};
use crate::par::{map_range, Execution};
use crate::policies::{select_arm, update, PolicyConfig, PolicyKind, PolicyState};

/// Everything needed to reproduce a regret experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub policies: Vec<PolicyKind>,
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub c: f64,
    pub stride: u64,
    pub execution: Execution,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let k = self.scenario.num_arms() as u64;
        if self.horizon < k {
            return Err(Error::Config(format!(
                "horizon {} is shorter than the {k} initialization pulls",
                self.horizon
            )));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        for p in &self.policies {
            PolicyConfig::new(p.clone(), self.c)?;
        }
        Ok(())
    }

    pub fn policy_configs(&self) -> Result<Vec<PolicyConfig>> {
        self.policies.iter().map(|p| PolicyConfig::new(p.clone(), self.c)).collect()
    }
}

/// Timesteps at which regret is recorded: multiples of `stride`, plus the horizon.
pub fn record_times(horizon: u64, stride: u64) -> Vec<u64> {
    let mut times: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
    if times.last() != Some(&horizon) {
        times.push(horizon);
    }
    times
}

/// One replication of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Cumulative pseudo-regret at each recorded time.
    pub regret: Vec<f64>,
    /// Pulls per arm at the horizon.
    pub pulls: Vec<u64>,
}

/// Runs replication `run` (1-based) of `policy` on the scenario.
pub fn run_once(cfg: &RunConfig, policy: &PolicyConfig, run: u64) -> Result<RunOutcome> {
    let k = cfg.scenario.num_arms();
    let gaps = cfg.scenario.gaps();
    let samplers: Vec<ArmSampler> = cfg.scenario.arms.iter().map(|a| a.sampler()).collect();
    let mut streams: Vec<_> = (0..k as u64).map(|a| reward_stream(cfg.seed, run, a)).collect();
    let times = record_times(cfg.horizon, cfg.stride);

    let mut state = PolicyState::new(k, policy);
    let mut regret = 0.0;
    let mut recorded = Vec::with_capacity(times.len());
    let mut next = times.iter().peekable();
    for t in 1..=cfg.horizon {
        let arm = select_arm(&state, policy)?;
        let reward = samplers[arm].sample(&mut streams[arm]);
        update(&mut state, arm, reward)?;
        regret += gaps[arm];
        if next.peek() == Some(&&t) {
            recorded.push(regret);
            next.next();
        }
    }
    let pulls = state.arms().iter().map(|a| a.pulls).collect();
    Ok(RunOutcome { regret: recorded, pulls })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: u64,
    pub mean_regret: f64,
    pub stderr: f64,
}

/// Mean cumulative pseudo-regret of one policy across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub policy: String,
    pub points: Vec<TracePoint>,
}

impl RegretTrace {
    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }
}

/// Mean and standard error of the mean, summed in the given order.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every policy for `runs` replications. Output is identical for
/// serial and parallel execution.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<RegretTrace>> {
    cfg.validate()?;
    let times = record_times(cfg.horizon, cfg.stride);
    let mut traces = Vec::with_capacity(cfg.policies.len());
    for policy in cfg.policy_configs()? {
        let outcomes: Vec<RunOutcome> = map_range(cfg.execution, 1..cfg.runs + 1, |r| {
            run_once(cfg, &policy, r)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let points = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let column: Vec<f64> = outcomes.iter().map(|o| o.regret[i]).collect();
                let (mean_regret, stderr) = mean_and_stderr(&column);
                TracePoint { t, mean_regret, stderr }
            })
            .collect();
        traces.push(RegretTrace { policy: policy.name(), points });
    }
    Ok(traces)
}
