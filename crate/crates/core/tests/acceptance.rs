//! Acceptance criteria, run in order with one PASS/FAIL line each.
//! Exits nonzero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ucboost::cli::run_with;
use ucboost::divergences::{evaluate, kl, solve_p1_closed_form, Divergence, UnitScalar};
use ucboost::harness::{bench, read_regret_csv, recorded_pool, RegretTrace, TimingReport};
use ucboost::kl_approx::{build_alt_grid, build_step_grid, klucb_alt_search, solve_klucb_reference, ucboost_eps_search};
use ucboost::klucb_dual::{f_eval, solve_p2, EmpiricalDistribution, LAMBDA_TOL};
use ucboost::policies::{PolicyConfig, PolicyDefaults, PolicyKind};

const SEED: u64 = 1;
const Z95: f64 = 1.96;

fn u(x: f64) -> UnitScalar {
    UnitScalar::new(x).unwrap()
}

/// `delta` log-uniform on `[1e-6, 10]`, covering every exploration bonus of a
/// `T = 10^4` run.
fn random_budget(rng: &mut ChaCha8Rng) -> f64 {
    (rng.random_range(1e-6f64.ln()..10f64.ln())).exp()
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// The root of `d(p, .) = delta` lies between `q` and the next float up.
fn brackets_root(d: Divergence, p: f64, q: f64, delta: f64, tol: f64) -> bool {
    evaluate(d, u(p), u(q)) <= delta + tol && (q >= 1.0 || evaluate(d, u(p), u(q.next_up())) >= delta - tol)
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = Instant::now();
    let (mut literal, mut at_one, mut failures) = (0, 0, Vec::new());
    let mut bracketed = std::collections::BTreeMap::<&str, u32>::new();
    let n = 10_000;
    for i in 0..n {
        let p: f64 = rng.random();
        let delta = random_budget(&mut rng);
        let d = match i % 6 {
            0 => Divergence::Sq,
            1 => Divergence::Bq,
            2 => Divergence::H,
            3 => Divergence::Lb,
            4 => Divergence::T,
            _ => {
                let eps = rng.random_range(0.005..0.5);
                let grid = build_step_grid(u(p), eps).unwrap();
                let k = if grid.is_empty() { grid.tau1 } else { rng.random_range(grid.tau1..=grid.tau2) };
                Divergence::step(k as u32, eps / (1.0 + eps)).unwrap()
            }
        };
        let q = solve_p1_closed_form(d, u(p), delta).unwrap().get();
        let value = evaluate(d, u(p), u(q));
        if q >= 1.0 {
            at_one += 1;
            if !(value <= delta + 1e-12) {
                failures.push(format!("{d} p={p} delta={delta}: d(p,1)={value}"));
            }
        } else if (value - delta).abs() <= 1e-9 {
            literal += 1;
        } else if brackets_root(d, p, q, delta, 1e-9) {
            let family = if let Divergence::Step { .. } = d { "step" } else if d == Divergence::Lb { "lb" } else { "other" };
            *bracketed.entry(family).or_default() += 1;
        } else {
            failures.push(format!("{d} p={p} delta={delta}: q={q} d={value}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(1);
    verdict(
        pass,
        format!(
            "{n} cases in {elapsed:.2?}: {literal} |d-delta|<=1e-9, root within one ulp above q* {bracketed:?}, \
             {at_one} at q*=1, {} failures {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let tol = 1e-12;
    let mut problems = Vec::new();
    let mut check = |name: String, d: &dyn Fn(f64, f64) -> f64, strong: bool, candidate_only: bool, valid_p: &dyn Fn(f64) -> bool| {
        for &p in grid.iter().filter(|p| valid_p(**p)) {
            let dpp = d(p, p);
            if candidate_only {
                if dpp > tol {
                    problems.push(format!("{name}: d({p},{p})={dpp} > 0"));
                }
            } else if dpp.abs() > tol {
                problems.push(format!("{name}: d({p},{p})={dpp} != 0"));
            }
            for &q in &grid {
                let v = d(p, q);
                if !candidate_only && v < -tol {
                    problems.push(format!("{name}: d({p},{q})={v} < 0"));
                }
                if strong && p != q && v <= 0.0 {
                    problems.push(format!("{name}: d({p},{q})={v} but p != q"));
                }
                if v > kl(p, q) + tol {
                    problems.push(format!("{name}: d({p},{q})={v} > kl={}", kl(p, q)));
                }
                if q >= p {
                    for &q2 in grid.iter().filter(|&&x| x >= q) {
                        if v > d(p, q2) + tol {
                            problems.push(format!("{name}: not increasing in q at ({p},{q},{q2})"));
                        }
                    }
                    for &p2 in grid.iter().filter(|&&x| x >= p && x <= q && valid_p(x)) {
                        if v < d(p2, q) - tol {
                            problems.push(format!("{name}: not decreasing in p at ({p},{p2},{q})"));
                        }
                    }
                }
            }
        }
    };
    for (d, strong) in [
        (Divergence::Kl, true),
        (Divergence::Sq, true),
        (Divergence::Bq, true),
        (Divergence::H, true),
        (Divergence::Lb, false),
        (Divergence::T, false),
    ] {
        let candidate_only = matches!(d, Divergence::Lb | Divergence::T);
        check(d.to_string(), &|p, q| evaluate(d, u(p), u(q)), strong, candidate_only, &|_| true);
    }
    // Step divergences are semi-distances on the means at or below their threshold.
    for eps in [0.01, 0.05, 0.2] {
        let eta = eps / (1.0 + eps);
        for k in [1u32, 5, 20, 60, 150] {
            let d = Divergence::step(k, eta).unwrap();
            let qk = Divergence::step_threshold(k, eta);
            check(d.to_string(), &|p, q| evaluate(d, u(p), u(q)), false, false, &|p| p <= qk);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        problems.is_empty() && elapsed < Duration::from_secs(5),
        format!("101x101 grid, 21 families in {elapsed:.2?}: {} violations {:?}", problems.len(), problems.iter().take(3).collect::<Vec<_>>()),
    )
}

fn criterion_3() -> Verdict {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let bound = (-1.0f64).exp() + 1e-12;
    let (mut worst, mut at, mut bad) = (f64::NEG_INFINITY, (0.0, 0.0), 0);
    for &m in &grid {
        for &star in grid.iter().filter(|&&s| s > m) {
            let k = kl(m, star);
            let best = [Divergence::Bq, Divergence::H, Divergence::Lb]
                .iter()
                .map(|&d| evaluate(d, u(m), u(star)))
                .fold(f64::NEG_INFINITY, f64::max);
            // At mu* = 1 both kl and lb are infinite; their difference is the
            // limit m log(1 / mu*) = 0.
            let gap = if k.is_infinite() && best.is_infinite() { 0.0 } else { k - best };
            if gap > worst {
                worst = gap;
                at = (m, star);
            }
            if !(gap <= bound) {
                bad += 1;
            }
        }
    }
    verdict(bad == 0, format!("max gap {worst:.6} at {at:?} (1/e = {:.6}), {bad} violations", (-1.0f64).exp()))
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut problems = Vec::new();
    let (mut max_iter_eps, mut max_iter_alt, mut ulp_cases) = (0u32, 0u32, 0);
    for eps in [0.01, 0.05, 0.2] {
        for _ in 0..10_000 {
            let p: f64 = rng.random();
            let delta = random_budget(&mut rng);
            let reference = solve_klucb_reference(u(p), delta, 1e-13).unwrap().get();

            let out = ucboost_eps_search(u(p), delta, eps).unwrap();
            let q = out.value.get();
            if q < reference {
                problems.push(format!("eps: q={q} < reference {reference} (p={p} delta={delta} eps={eps})"));
            }
            if !(kl(p, q) <= delta + eps) {
                problems.push(format!("eps: kl={} > delta+eps (p={p} delta={delta} eps={eps})", kl(p, q)));
            }
            let grid = build_step_grid(u(p), eps).unwrap();
            let limit = (grid.len().max(1) as f64).log2().ceil() as u32 + 2;
            max_iter_eps = max_iter_eps.max(out.iterations);
            if out.iterations > limit {
                problems.push(format!("eps: {} iterations > {limit}", out.iterations));
            }

            let alt = klucb_alt_search(u(p), delta, eps).unwrap();
            let q2 = alt.value.get();
            if q2 < reference {
                problems.push(format!("alt: q'={q2} < reference {reference} (p={p} delta={delta} eps={eps})"));
            }
            let gap = kl(p, q2) - delta;
            if !(gap <= eps + 1e-9) {
                problems.push(format!("alt: gap {gap} > eps (p={p} delta={delta} eps={eps})"));
            }
            if gap < -1e-9 {
                // The root lies within one ulp above q'.
                if kl(p, q2.next_up()) >= delta {
                    ulp_cases += 1;
                } else {
                    problems.push(format!("alt: gap {gap} < 0 (p={p} delta={delta} eps={eps})"));
                }
            }
            let alt_grid = build_alt_grid(u(p), eps).unwrap();
            let limit = ((alt_grid.cap + 1) as f64).log2().ceil() as u32 + 2;
            max_iter_alt = max_iter_alt.max(alt.iterations);
            if alt.iterations > limit {
                problems.push(format!("alt: {} iterations > {limit}", alt.iterations));
            }
        }
    }
    verdict(
        problems.is_empty(),
        format!(
            "3 x 10000 cases: max iterations {max_iter_eps} (step grid) / {max_iter_alt} (exp grid), \
             {ulp_cases} alt gaps negative only by one ulp of q, {} violations {:?}",
            problems.len(),
            problems.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> EmpiricalDistribution {
    let mut support: Vec<f64> = Vec::with_capacity(n);
    while support.len() < n - 1 {
        let x: f64 = rng.random();
        if !support.contains(&x) {
            support.push(x);
        }
    }
    support.sort_by(f64::total_cmp);
    support.push(1.0);
    let mut weights: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    if rng.random::<bool>() {
        weights[n - 1] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    EmpiricalDistribution::new(support, weights).unwrap()
}

/// Best feasible mean over simplex points whose free coordinates lie on
/// multiples of `h` within `window` of `center` (the whole simplex when
/// `center` is `None`).
fn grid_search(dist: &EmpiricalDistribution, delta: f64, h: f64, center: Option<&[f64]>, window: f64) -> (f64, Vec<f64>) {
    let n = dist.len();
    let a = dist.support();
    let range = |i: usize| -> (i64, i64) {
        match center {
            None => (0, (1.0 / h).round() as i64),
            Some(c) => (((c[i] - window) / h).floor().max(0.0) as i64, ((c[i] + window) / h).ceil().min(1.0 / h) as i64),
        }
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut q = vec![0.0; n];
    fn rec(
        i: usize,
        rest: f64,
        q: &mut Vec<f64>,
        h: f64,
        range: &dyn Fn(usize) -> (i64, i64),
        dist: &EmpiricalDistribution,
        a: &[f64],
        delta: f64,
        best: &mut (f64, Vec<f64>),
    ) {
        let n = q.len();
        if i == n - 1 {
            if rest < -1e-12 {
                return;
            }
            q[n - 1] = rest.max(0.0);
            if dist.kl_to(q) <= delta {
                let mean: f64 = a.iter().zip(q.iter()).map(|(x, w)| x * w).sum();
                if mean > best.0 {
                    *best = (mean, q.clone());
                }
            }
            return;
        }
        let (lo, hi) = range(i);
        for j in lo..=hi {
            let x = j as f64 * h;
            if x > rest + 1e-12 {
                break;
            }
            q[i] = x;
            rec(i + 1, rest - x, q, h, range, dist, a, delta, best);
        }
    }
    rec(0, 1.0, &mut q, h, &range, dist, a, delta, &mut best);
    best
}

/// Exhaustive 1e-3 grid for n <= 3; coarse-to-fine for n = 4.
fn dense_oracle(dist: &EmpiricalDistribution, delta: f64) -> f64 {
    if dist.len() <= 3 {
        return grid_search(dist, delta, 1e-3, None, 0.0).0;
    }
    let (_, coarse) = grid_search(dist, delta, 1.0 / 50.0, None, 0.0);
    let (_, mid) = grid_search(dist, delta, 1.0 / 500.0, Some(&coarse), 0.06);
    grid_search(dist, delta, 1e-4, Some(&mid), 0.006).0
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut problems = Vec::new();
    let (mut worst_mean, mut worst_kl) = (0.0f64, f64::NEG_INFINITY);
    for i in 0..200 {
        let n = 2 + i % 3;
        let dist = random_distribution(&mut rng, n);
        for delta in [0.05, 0.2, 1.0] {
            let sol = solve_p2(&dist, delta, LAMBDA_TOL).unwrap();
            let oracle = dense_oracle(&dist, delta);
            worst_mean = worst_mean.max((sol.mean - oracle).abs());
            if (sol.mean - oracle).abs() > 2e-3 {
                problems.push(format!("mean {} vs grid {oracle} for {dist:?}, delta {delta}", sol.mean));
            }
            let excess = dist.kl_to(&sol.q) - delta;
            worst_kl = worst_kl.max(excess);
            if excess > 1e-6 {
                problems.push(format!("KL excess {excess} for {dist:?}, delta {delta}"));
            }
        }
        let l = dist.pole();
        let spread = l - dist.support()[0];
        for j in 0..100 {
            let lambda = l + 1e-4 * 1.15f64.powi(j);
            let f = f_eval(&dist, lambda).unwrap();
            let bound = spread * spread / (8.0 * (lambda - l) * (lambda - l));
            if f > bound * (1.0 + 1e-9) + 1e-14 {
                problems.push(format!("f({lambda}) = {f} above bound {bound} for {dist:?}"));
            }
        }
    }
    let mut worst_bern = 0.0f64;
    for i in 0..=100 {
        let p = i as f64 / 100.0;
        let dist = EmpiricalDistribution::bernoulli(u(p));
        if dist.len() == 1 {
            continue;
        }
        for delta in [1e-3, 0.05, 0.2, 1.0, 5.0] {
            let dual = solve_p2(&dist, delta, LAMBDA_TOL).unwrap().mean;
            let reference = solve_klucb_reference(u(p), delta, 1e-12).unwrap().get();
            worst_bern = worst_bern.max((dual - reference).abs());
        }
    }
    if worst_bern > 1e-6 {
        problems.push(format!("Bernoulli reduction off by {worst_bern}"));
    }
    let elapsed = start.elapsed();
    verdict(
        problems.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "600 problems in {elapsed:.1?}: max |mean - grid| {worst_mean:.2e}, max KL excess {worst_kl:.2e}, \
             Bernoulli reduction {worst_bern:.2e}, {} violations {:?}",
            problems.len(),
            problems.iter().take(2).collect::<Vec<_>>()
        ),
    )
}

fn simulate_cli(scenario: &str, policies: &str, out: &Path, serial: bool) -> Duration {
    let start = Instant::now();
    let mut args = vec![
        "ucboost", "simulate", "--scenario", scenario, "--policies", policies, "--horizon", "10000",
        "--runs", "200", "--seed", "1", "--c", "0", "--out", out.to_str().unwrap(),
    ];
    if serial {
        args.push("--serial");
    }
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run_with(args, &mut o, &mut e);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&e));
    start.elapsed()
}

fn final_point(traces: &[RegretTrace], policy: &str) -> (f64, f64) {
    let tr = traces.iter().find(|t| t.policy == policy).unwrap_or_else(|| panic!("no trace for {policy}"));
    let last = tr.last().unwrap();
    assert_eq!(last.t, 10_000);
    (last.mean_regret, last.stderr)
}

struct Checks(Vec<(String, bool)>);

impl Checks {
    fn add(&mut self, label: String, ok: bool) {
        self.0.push((label, ok));
    }
    fn verdict(self, prefix: String) -> Verdict {
        let pass = self.0.iter().all(|(_, ok)| *ok);
        let body: Vec<String> = self.0.into_iter().map(|(l, ok)| format!("{l} [{}]", if ok { "ok" } else { "FAIL" })).collect();
        verdict(pass, format!("{prefix}; {}", body.join("; ")))
    }
}

fn regret_checks(traces: &[RegretTrace]) -> Checks {
    let (r_ref, se_ref) = final_point(traces, "klucb_ref:1e-5");
    let (r_eps, se_eps) = final_point(traces, "ucboost_eps:0.01");
    let (r_d, se_d) = final_point(traces, "ucboost_d:bq+h+lb");
    let (r_ucb1, se_ucb1) = final_point(traces, "ucb1");
    let mut checks = Checks(Vec::new());
    checks.add(
        format!("(a) klucb_ref {r_ref:.2}±{se_ref:.2} vs ucboost_eps {r_eps:.2}±{se_eps:.2}, ratio {:.3}", r_ref.max(r_eps) / r_ref.min(r_eps)),
        r_ref.max(r_eps) <= 1.1 * r_ref.min(r_eps),
    );
    checks.add(
        format!("(b) ucboost_d 95% CI upper {:.2} < ucb1 95% CI lower {:.2}", r_d + Z95 * se_d, r_ucb1 - Z95 * se_ucb1),
        r_d + Z95 * se_d < r_ucb1 - Z95 * se_ucb1,
    );
    checks.add(format!("(c) klucb_ref {r_ref:.2} <= ucboost_d + 2 se {:.2}", r_d + 2.0 * se_d), r_ref <= r_d + 2.0 * se_d);
    checks
}

fn criterion_6(dir: &Path) -> Verdict {
    let out = dir.join("bernoulli1.csv");
    let elapsed = simulate_cli("bernoulli1", "klucb_ref:1e-5,ucboost_eps:0.01,ucboost_d,ucb1", &out, false);
    let traces = read_regret_csv(&out).unwrap();
    let mut checks = regret_checks(&traces);
    checks.add(format!("runtime {elapsed:.1?}"), elapsed < Duration::from_secs(600));
    checks.verdict("bernoulli1, T=10^4, R=200".into())
}

fn criterion_7(dir: &Path) -> Verdict {
    let out = dir.join("bernoulli2.csv");
    let elapsed = simulate_cli("bernoulli2", "klucb_ref:1e-5,ucboost_eps:0.01,ucboost_d,ucb1,ucb_h,ucb_bq", &out, false);
    let traces = read_regret_csv(&out).unwrap();
    let mut checks = regret_checks(&traces);
    let (r_ucb1, se_ucb1) = final_point(&traces, "ucb1");
    let (r_h, se_h) = final_point(&traces, "ucb_h");
    let (r_bq, se_bq) = final_point(&traces, "ucb_bq");
    checks.add(
        format!("ucb_h 95% CI upper {:.2} < ucb1 95% CI lower {:.2}", r_h + Z95 * se_h, r_ucb1 - Z95 * se_ucb1),
        r_h + Z95 * se_h < r_ucb1 - Z95 * se_ucb1,
    );
    checks.add(
        format!("|ucb_bq {r_bq:.2}±{se_bq:.2} - ucb1 {r_ucb1:.2}| <= 2 se(ucb1) {:.2}", 2.0 * se_ucb1),
        (r_bq - r_ucb1).abs() <= 2.0 * se_ucb1,
    );
    checks.add(format!("runtime {elapsed:.1?}"), elapsed < Duration::from_secs(600));
    checks.verdict("bernoulli2, T=10^4, R=200".into())
}

fn criterion_8() -> Verdict {
    let pool = recorded_pool(SEED, 10_000).unwrap();
    let configs: Vec<PolicyConfig> = ["ucboost_d", "ucboost_eps:0.01", "klucb_ref:1e-5"]
        .iter()
        .map(|s| PolicyConfig::new(PolicyKind::parse(s, PolicyDefaults::default()).unwrap(), 0.0).unwrap())
        .collect();
    let reports: Vec<TimingReport> = bench(&configs, 200_000, &pool).unwrap();
    let (d, e, r) = (reports[0].median_ns, reports[1].median_ns, reports[2].median_ns);
    let mut checks = Checks(Vec::new());
    checks.add(format!("median ucboost_eps / klucb_ref = {e:.1} / {r:.1} = {:.3} <= 0.1", e / r), e <= 0.1 * r);
    checks.add(format!("median ucboost_d {d:.1} < ucboost_eps {e:.1}"), d < e);
    checks.add(format!("ucboost_eps {e:.1} < klucb_ref {r:.1}"), e < r);
    checks.verdict(format!("{} inputs, 200000 samples, ns per index", pool.len()))
}

fn criterion_9(dir: &Path) -> Verdict {
    let policies = "klucb_ref:1e-5,ucboost_eps:0.01,ucboost_d,ucb1";
    let first = dir.join("bernoulli1.csv");
    if !first.exists() {
        simulate_cli("bernoulli1", policies, &first, false);
    }
    let reference = std::fs::read(&first).unwrap();
    let parallel = dir.join("bernoulli1_parallel.csv");
    let serial = dir.join("bernoulli1_serial.csv");
    simulate_cli("bernoulli1", policies, &parallel, false);
    simulate_cli("bernoulli1", policies, &serial, true);
    let same_parallel = std::fs::read(&parallel).unwrap() == reference;
    let same_serial = std::fs::read(&serial).unwrap() == reference;
    verdict(
        same_parallel && same_serial,
        format!("{} bytes; parallel rerun identical: {same_parallel}; serial identical: {same_serial}", reference.len()),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("1 closed-form residuals", Box::new(criterion_1)),
        ("2 semi-distance axioms and kl-domination", Box::new(criterion_2)),
        ("3 boosted gap below 1/e", Box::new(criterion_3)),
        ("4 eps-band and iteration counts", Box::new(criterion_4)),
        ("5 dual method vs grid oracle", Box::new(criterion_5)),
        ("6 regret ordering, bernoulli1", Box::new(|| criterion_6(dir.path()))),
        ("7 regret ordering, bernoulli2", Box::new(|| criterion_7(dir.path()))),
        ("8 timing ratios", Box::new(criterion_8)),
        ("9 determinism", Box::new(|| criterion_9(dir.path()))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let v = run();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {name}: {} -- {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
