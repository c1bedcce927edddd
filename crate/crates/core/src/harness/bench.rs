use std::hint::black_box;
use std::time::Instant;

use crate::environments::{preset, reward_stream, ArmSampler};
use crate::error::{Error, Result};
use crate::policies::{index, select_arm, update, ArmStatistics, PolicyConfig, PolicyKind, PolicyState};

/// Calls discarded before timing starts.
pub const WARMUP_CALLS: usize = 1_000;
/// Smallest accepted sample size.
pub const MIN_SAMPLES: usize = 10_000;
/// Evaluations per timed sample. One clock read costs more than the cheapest
/// indices, so each sample times this many back-to-back calls on the same
/// input and records the average.
pub const REPEAT: u32 = 16;
/// Size of the shared input pool.
pub const POOL_SIZE: usize = 4_096;

/// One index-computation input: arm statistics at decision time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexInput {
    pub arm: ArmStatistics,
    pub t: u64,
}

/// Inputs taken from a recorded bernoulli1 trajectory of UCBoost({bq, h, lb}):
/// every arm's statistics at every post-initialization round, thinned to
/// `POOL_SIZE` evenly spaced entries.
pub fn recorded_pool(seed: u64, horizon: u64) -> Result<Vec<IndexInput>> {
    let scenario = preset("bernoulli1")?;
    let k = scenario.num_arms();
    let policy = PolicyConfig::new(PolicyKind::UcBoost(crate::policies::default_boost_set()), 0.0)?;
    let samplers: Vec<ArmSampler> = scenario.arms.iter().map(|a| a.sampler()).collect();
    let mut streams: Vec<_> = (0..k as u64).map(|a| reward_stream(seed, 0, a)).collect();
    let mut state = PolicyState::new(k, &policy);
    let mut all = Vec::with_capacity(horizon as usize * k);
    for _ in 0..horizon {
        if state.time() >= k as u64 {
            let t = state.time() + 1;
            all.extend(state.arms().iter().map(|arm| IndexInput { arm: arm.clone(), t }));
        }
        let arm = select_arm(&state, &policy)?;
        let reward = samplers[arm].sample(&mut streams[arm]);
        update(&mut state, arm, reward)?;
    }
    if all.is_empty() {
        return Err(Error::Config("trajectory too short to build an input pool".into()));
    }
    let step = (all.len() / POOL_SIZE).max(1);
    Ok(all.into_iter().step_by(step).take(POOL_SIZE).collect())
}

/// Latency statistics for one policy, in nanoseconds per index call.
/// `calls` counts timed samples; each sample averages `REPEAT` evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub policy: String,
    pub calls: u64,
    pub median_ns: f64,
    pub mean_ns: f64,
    pub p99_ns: f64,
}

/// Median (midpoint average for even counts), mean and nearest-rank p99.
pub fn summarize(policy: String, mut latencies: Vec<f64>) -> TimingReport {
    latencies.sort_by(f64::total_cmp);
    let n = latencies.len();
    let median = if n % 2 == 1 {
        latencies[n / 2]
    } else {
        0.5 * (latencies[n / 2 - 1] + latencies[n / 2])
    };
    let mean = latencies.iter().sum::<f64>() / n as f64;
    let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
    TimingReport { policy, calls: n as u64, median_ns: median, mean_ns: mean, p99_ns: latencies[rank - 1] }
}

/// Times `samples` index computations per policy over the same input pool,
/// cycling through it in order. Only index computations sit between the two
/// clock reads.
pub fn bench(policies: &[PolicyConfig], samples: usize, pool: &[IndexInput]) -> Result<Vec<TimingReport>> {
    if samples < MIN_SAMPLES {
        return Err(Error::Config(format!("bench needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if pool.is_empty() {
        return Err(Error::Config("empty input pool".into()));
    }
    for cfg in policies {
        for i in 0..WARMUP_CALLS {
            let input = &pool[i % pool.len()];
            black_box(index(cfg, &input.arm, input.t)?);
        }
    }
    // Policies take turns on each input so that clock drift and machine
    // noise fall on all of them alike.
    let mut latencies = vec![Vec::with_capacity(samples); policies.len()];
    for i in 0..samples {
        let input = &pool[i % pool.len()];
        for (cfg, out) in policies.iter().zip(&mut latencies) {
            let (arm, t) = (black_box(&input.arm), black_box(input.t));
            let start = Instant::now();
            for _ in 0..REPEAT {
                black_box(index(cfg, black_box(arm), black_box(t))?);
            }
            let elapsed = start.elapsed();
            out.push(elapsed.as_nanos() as f64 / f64::from(REPEAT));
        }
    }
    Ok(policies.iter().zip(latencies).map(|(cfg, l)| summarize(cfg.name(), l)).collect())
}
