//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synapse_core::arbitration::{allocate_samples, arbitrate_timestep, initial_window};
use synapse_core::metrics::{
    crps_series, crps_timestep, lumpiness, mase, pearson_correlation, pinball_loss,
    weighted_quantile_loss,
};
use synapse_core::oracle::{synapse_selection_ranking, topk_selection_accuracy};
use synapse_core::quantile_dist::{empirical_quantiles, fit_inverse_cdf, sample, InverseCdf};
use synapse_core::synthetic::{build_benchmark_suite, build_suite, SuiteConfig, DECILE_Z};
use synapse_core::{
    oracle_select, run_arbitration, ArbitrationTrace, ArbitratorConfig, Error, ForecastPanel,
    QuantileForecast, QuantileLevels, SeedStream, WeightVector,
};
use synapse_harness::eval::{
    aggregate, evaluate_panels, run_evaluation, run_pool_scaling, selection_accuracy, EvalConfig,
    Method, PanelOutcome,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

const SUITE_SEED: u64 = 42;
const SUITE_PANELS: usize = 200;

// Pinned from the first run of the seeded 200-panel suite.
const GOLDEN_SYNAPSE_CRPS: f64 = 0.02722040817865136;
const GOLDEN_MEDIAN_CRPS: f64 = 0.06150454978530439;
const GOLDEN_STATIC_CRPS: f64 = 0.04225186786630037;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn deciles(values: Vec<f64>) -> QuantileForecast {
    QuantileForecast::new(QuantileLevels::deciles(), values).unwrap()
}

fn gaussian(mu: f64, sigma: f64) -> QuantileForecast {
    deciles(DECILE_Z.iter().map(|z| mu + sigma * z).collect())
}

fn metric_units() -> Check {
    let start = Instant::now();
    // Pinball and wQL examples.
    ensure!(pinball_loss(0.5, 0.0, 2.0) == 1.0, "pinball (0.5,0,2)");
    ensure!(pinball_loss(0.9, 3.0, 3.0) == 0.0, "pinball (0.9,3,3)");
    ensure!(
        rel_close(pinball_loss(0.1, 5.0, 2.0), 2.7, 1e-12),
        "pinball (0.1,5,2)"
    );
    ensure!(
        weighted_quantile_loss(0.5, 0.0, 2.0) == 1.0,
        "wql (0.5,0,2)"
    );
    ensure!(
        weighted_quantile_loss(0.5, 4.0, 4.0) == 0.0,
        "wql (0.5,4,4)"
    );
    ensure!(
        rel_close(weighted_quantile_loss(0.2, 1.0, -2.0), 2.4, 1e-12),
        "wql (0.2,1,-2)"
    );

    // CRPS: constant forecast at the actual, then the 1..9 enumeration.
    ensure!(
        crps_timestep(&deciles(vec![5.0; 9]), 5.0) == 0.0,
        "perfect constant forecast"
    );
    let levels = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let mut total = 0.0;
    for (k, alpha) in levels.iter().enumerate() {
        let q = (k + 1) as f64;
        let rho = if 5.0 > q {
            alpha * (5.0 - q)
        } else {
            (1.0 - alpha) * (q - 5.0)
        };
        total += 2.0 * rho / 5.0;
    }
    let expected = total / 9.0;
    let f19 = deciles((1..=9).map(f64::from).collect());
    let got = crps_timestep(&f19, 5.0);
    ensure!(
        rel_close(got, expected, 1e-12),
        "crps 1..9: {got} vs {expected}"
    );
    let doubled = deciles((1..=9).map(|v| 2.0 * v as f64).collect());
    ensure!(
        rel_close(crps_timestep(&doubled, 10.0), got, 1e-12),
        "crps scale invariance"
    );

    // Series aggregation.
    let a = crps_timestep(&f19, 3.0);
    let b = crps_timestep(&f19, 7.5);
    let s = crps_series(&[f19.clone(), f19.clone()], &[3.0, 7.5]).map_err(|e| e.to_string())?;
    ensure!(rel_close(s.crps, (a + b) / 2.0, 1e-12), "series mean");
    ensure!(
        crps_series(std::slice::from_ref(&f19), &[5.0])
            .unwrap()
            .crps
            == got,
        "single-step series"
    );
    ensure!(
        matches!(
            crps_series(std::slice::from_ref(&f19), &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ),
        "length mismatch"
    );

    // MASE.
    ensure!(
        mase(&[1.0, 2.0], &[1.0, 2.0], &[0.0, 1.0, 3.0], 1).unwrap() == 0.0,
        "perfect mase"
    );
    ensure!(
        matches!(
            mase(&[3.0, 3.0], &[1.0, 2.0], &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0], 2),
            Err(Error::ZeroDenominator { .. })
        ),
        "periodic context"
    );
    let denom = ((1.0f64 - 0.0).abs() + (3.0f64 - 1.0).abs()) / 2.0;
    let m = mase(&[4.0], &[2.0], &[0.0, 1.0, 3.0], 1).unwrap();
    ensure!(rel_close(m, 2.0 / denom, 1e-12), "mase 4/3: {m}");

    // Lumpiness against a two-pass oracle on white noise.
    ensure!(
        lumpiness(&[2.0; 40], 10).unwrap() == 0.0,
        "constant lumpiness"
    );
    let tile: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
    let repeated: Vec<f64> = tile.iter().cycle().take(100).copied().collect();
    ensure!(
        lumpiness(&repeated, 10).unwrap().abs() < 1e-20,
        "identical tiles"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise: Vec<f64> = (0..1000)
        .map(|_| rng.sample(rand_distr::StandardNormal))
        .collect();
    let var = |xs: &[f64]| {
        let n = xs.len() as f64;
        let mu = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0)
    };
    let mu = noise.iter().sum::<f64>() / 1000.0;
    let sd = var(&noise).sqrt();
    let z: Vec<f64> = noise.iter().map(|x| (x - mu) / sd).collect();
    let tile_vars: Vec<f64> = z.chunks(10).map(var).collect();
    let oracle = var(&tile_vars);
    let got = lumpiness(&noise, 10).unwrap();
    ensure!(
        got > 0.0 && rel_close(got, oracle, 1e-12),
        "lumpiness {got} vs {oracle}"
    );

    // Pearson.
    let xs = [1.0, 2.0, 3.0];
    ensure!(
        rel_close(pearson_correlation(&xs, &xs).unwrap(), 1.0, 1e-12),
        "pearson self"
    );
    ensure!(
        rel_close(
            pearson_correlation(&xs, &[-1.0, -2.0, -3.0]).unwrap(),
            -1.0,
            1e-12
        ),
        "pearson neg"
    );
    let r = pearson_correlation(&xs, &[2.0, 4.0, 7.0]).unwrap();
    let expected = 5.0 / (2.0f64 * 38.0 / 3.0).sqrt();
    ensure!(rel_close(r, expected, 1e-12), "pearson {r} vs {expected}");

    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("all examples matched in {elapsed:.2?}"))
}

fn inverse_cdf_round_trip() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let mu = rng.random_range(-200.0..200.0);
        let sigma = rng.random_range(0.1..20.0);
        let skew = rng.random_range(-0.5..0.5f64);
        let values: Vec<f64> = DECILE_Z
            .iter()
            .map(|z| {
                if skew.abs() < 1e-3 {
                    mu + sigma * z
                } else {
                    mu + sigma * ((skew * z).exp() - 1.0) / skew
                }
            })
            .collect();
        let q = deciles(values);
        let scale = q.values()[8] - q.values()[0];
        let tol = f64::max(1e-2, 1e-2 * scale);
        let draws = sample(&fit_inverse_cdf(&q), 200_000, &mut rng);
        let back = empirical_quantiles(&draws, q.levels()).map_err(|e| e.to_string())?;
        for (a, b) in back.values().iter().zip(q.values()) {
            let err = (a - b).abs();
            worst = worst.max(err / tol);
            ensure!(err <= tol, "case {case}: {a} vs {b} (tol {tol})");
        }
    }
    let mut violations = 0;
    for _ in 0..10_000 {
        let mut values: Vec<f64> = (0..9).map(|_| rng.random_range(-100.0..100.0)).collect();
        values.sort_by(f64::total_cmp);
        if rng.random_bool(0.1) {
            let k = rng.random_range(1..9);
            values[k] = values[k - 1];
        }
        let icdf = fit_inverse_cdf(&deciles(values));
        let p1: f64 = rng.random();
        let p2: f64 = rng.random_range(p1..=1.0);
        if icdf.eval(p1) > icdf.eval(p2) {
            violations += 1;
        }
    }
    ensure!(violations == 0, "{violations} monotonicity violations");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "worst error {:.2} of tolerance, 0/10000 violations, {elapsed:.2?}",
        worst
    ))
}

fn cdf_of(icdf: &InverseCdf, x: f64) -> f64 {
    if x < icdf.eval(0.0) {
        return 0.0;
    }
    if x >= icdf.eval(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if icdf.eval(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn mixture_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let config = ArbitratorConfig {
        n_total: 200_000,
        ..ArbitratorConfig::default()
    };
    let weights = WeightVector::new(vec![0.5, 0.5]).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        // Supports overlap, so every mixture quantile is unique.
        let a = gaussian(rng.random_range(-1.0..1.0), rng.random_range(0.6..1.5));
        let b = gaussian(rng.random_range(-1.0..1.0), rng.random_range(0.6..1.5));
        ensure!(
            fit_inverse_cdf(&a).eval(1.0) > fit_inverse_cdf(&b).eval(0.0)
                && fit_inverse_cdf(&b).eval(1.0) > fit_inverse_cdf(&a).eval(0.0),
            "case {case}: disjoint supports"
        );
        let mut streams = [
            ChaCha8Rng::seed_from_u64(case),
            ChaCha8Rng::seed_from_u64(1000 + case),
        ];
        let (pooled, _) =
            arbitrate_timestep(&[a.clone(), b.clone()], &weights, &config, &mut streams)
                .map_err(|e| e.to_string())?;
        let (fa, fb) = (fit_inverse_cdf(&a), fit_inverse_cdf(&b));
        for (k, &alpha) in a.levels().as_slice().iter().enumerate() {
            let mut lo = fa.eval(0.0).min(fb.eval(0.0));
            let mut hi = fa.eval(1.0).max(fb.eval(1.0));
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if 0.5 * cdf_of(&fa, mid) + 0.5 * cdf_of(&fb, mid) < alpha {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let err = (pooled.values()[k] - 0.5 * (lo + hi)).abs();
            worst = worst.max(err);
            ensure!(err <= 2e-2, "case {case} level {alpha}: error {err}");
        }
    }
    Ok(format!("50 cases x 9 levels, worst abs error {worst:.4}"))
}

fn arbitrate(panel: &ForecastPanel, seed: u64) -> ArbitrationTrace {
    let config = ArbitratorConfig::default();
    let window = initial_window(panel, config.resolved_window(panel.horizon())).unwrap();
    run_arbitration(panel, window, &config, &SeedStream::new(seed)).unwrap()
}

fn algorithm_conformance() -> Check {
    let panels = build_benchmark_suite(SUITE_PANELS, SUITE_SEED).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut steps = 0;
    for panel in &panels {
        let trace = arbitrate(panel, SUITE_SEED);
        ensure!(
            trace == arbitrate(panel, SUITE_SEED),
            "{}: repeated run differs",
            panel.series_id()
        );
        for step in &trace.steps {
            let sum: f64 = step.weights.as_slice().iter().sum();
            ensure!(
                (sum - 1.0).abs() <= 1e-9,
                "{}: weights sum to {sum}",
                panel.series_id()
            );
            let n: usize = step.sample_counts.iter().sum();
            ensure!(n == 1500, "{}: allocation sums to {n}", panel.series_id());
            steps += 1;
        }
        let mut perm: Vec<usize> = (0..panel.n_models()).collect();
        perm.shuffle(&mut rng);
        let permuted = arbitrate(&panel.select_models(&perm).unwrap(), SUITE_SEED);
        for (a, b) in trace.steps.iter().zip(&permuted.steps) {
            ensure!(
                a.quantiles == b.quantiles,
                "{}: permuted quantiles differ",
                panel.series_id()
            );
            for (j, &i) in perm.iter().enumerate() {
                ensure!(
                    a.weights.as_slice()[i].to_bits() == b.weights.as_slice()[j].to_bits()
                        && a.sample_counts[i] == b.sample_counts[j],
                    "{}: permuted weights differ",
                    panel.series_id()
                );
            }
        }
    }
    // Direct allocator check over random weight vectors.
    for _ in 0..2_000 {
        let n = rng.random_range(1..=8);
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            continue;
        }
        let w = WeightVector::new(raw.iter().map(|x| x / total).collect());
        if let Ok(w) = w {
            ensure!(
                allocate_samples(&w, 1500).iter().sum::<usize>() == 1500,
                "allocator"
            );
        }
    }
    Ok(format!(
        "{} panels, {steps} steps: sums, N_total = 1500, determinism and equivariance hold",
        panels.len()
    ))
}

fn oracle_dominance() -> Check {
    let panels = build_benchmark_suite(1000, 404).map_err(|e| e.to_string())?;
    let mut exceptions = 0;
    for panel in &panels {
        let oracle = oracle_select(panel)
            .map_err(|e| e.to_string())?
            .oracle_crps();
        let actuals = panel.actuals().unwrap();
        for m in panel.models() {
            if oracle > crps_series(&m.steps, actuals).unwrap().crps {
                exceptions += 1;
            }
        }
    }
    ensure!(exceptions == 0, "{exceptions} constituents beat the oracle");

    let outcomes = evaluate_panels(
        &panels,
        &[Method::Synapse, Method::Median],
        &EvalConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    for (panel, o) in panels.iter().zip(&outcomes) {
        let ranking = synapse_selection_ranking(o.synapse_trace.as_ref().unwrap());
        let acc: Vec<f64> = (1..=panel.n_models())
            .map(|k| topk_selection_accuracy(&ranking, &o.oracle, k).unwrap())
            .collect();
        ensure!(
            acc.windows(2).all(|w| w[0] <= w[1]),
            "{}: top-k not monotone",
            panel.series_id()
        );
        ensure!(
            *acc.last().unwrap() == 1.0,
            "{}: top-N is {}",
            panel.series_id(),
            acc.last().unwrap()
        );
    }
    let pooled = selection_accuracy(&outcomes).map_err(|e| e.to_string())?;
    for series in [&pooled.synapse, &pooled.median] {
        ensure!(
            series.windows(2).all(|w| w[0] <= w[1]),
            "pooled top-k not monotone"
        );
        ensure!(*series.last().unwrap() == 1.0, "pooled top-N below 1");
    }
    Ok("1000 panels, zero exceptions; top-k monotone with top-N = 1.0".into())
}

fn headline_claims() -> Check {
    let start = Instant::now();
    let panels = build_benchmark_suite(SUITE_PANELS, SUITE_SEED).map_err(|e| e.to_string())?;
    let config = EvalConfig {
        seed: SUITE_SEED,
        ..EvalConfig::default()
    };
    let methods = [
        Method::Synapse,
        Method::SynapseStatic,
        Method::Median,
        Method::PerModel,
    ];
    let eval = run_evaluation(&panels, &methods, &config).map_err(|e| e.to_string())?;
    let crps = |m: &str| {
        eval.overall(m)
            .map(|r| r.crps)
            .ok_or(format!("missing {m}"))
    };
    let (synapse, stat, median) = (crps("synapse")?, crps("synapse-static")?, crps("median")?);

    // Best individual expert: every expert against SYNAPSE on exactly the
    // panels that contain it, since pool sizes vary across the suite.
    let mut best = f64::INFINITY;
    let mut best_gap = f64::INFINITY;
    for row in eval.rows.iter().filter(|r| {
        r.method.starts_with("model:") && r.grouping == "overall" && r.horizon_class == "all"
    }) {
        let subset: Vec<PanelOutcome> = eval
            .outcomes
            .iter()
            .filter(|o| o.score(&row.method).is_some())
            .cloned()
            .collect();
        let synapse_here = aggregate(&subset, config.aggregation)
            .into_iter()
            .find(|r| r.method == "synapse" && r.grouping == "overall" && r.horizon_class == "all")
            .unwrap()
            .crps;
        ensure!(
            synapse_here < row.crps,
            "(a) failed: synapse {synapse_here} vs {} {} on {} panels",
            row.method,
            row.crps,
            row.panels
        );
        best = best.min(row.crps);
        best_gap = best_gap.min(row.crps - synapse_here);
    }
    let acc = selection_accuracy(&eval.outcomes).map_err(|e| e.to_string())?;
    let (top1_syn, top1_med) = (acc.synapse[0], acc.median[0]);

    let detail = format!(
        "synapse {synapse:.6}, static {stat:.6}, median {median:.6}, best expert {best:.6}, top-1 {top1_syn:.4} vs {top1_med:.4}"
    );
    ensure!(best_gap > 0.0 && synapse < best, "(a) failed: {detail}");
    ensure!(synapse < median, "(b) failed: {detail}");
    ensure!(synapse < stat && stat < median, "(c) failed: {detail}");
    ensure!(top1_syn > top1_med, "(d) failed: {detail}");
    for (name, got, golden) in [
        ("synapse", synapse, GOLDEN_SYNAPSE_CRPS),
        ("static", stat, GOLDEN_STATIC_CRPS),
        ("median", median, GOLDEN_MEDIAN_CRPS),
    ] {
        ensure!(
            rel_close(got, golden, 1e-9),
            "golden {name}: {got:?} vs {golden:?} (synapse {synapse:?}, static {stat:?}, median {median:?})"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("{detail}, {elapsed:.2?}"))
}

fn pool_scaling() -> Check {
    let generated = build_suite(&SuiteConfig::new(SUITE_PANELS, SUITE_SEED).with_experts(6, 6))
        .map_err(|e| e.to_string())?;
    let panels: Vec<ForecastPanel> = generated.into_iter().map(|g| g.panel).collect();
    let order: Vec<String> = panels[0]
        .model_names()
        .into_iter()
        .map(String::from)
        .collect();
    let config = EvalConfig {
        seed: SUITE_SEED,
        ..EvalConfig::default()
    };
    let rows = run_pool_scaling(&panels, &order, &config).map_err(|e| e.to_string())?;
    ensure!(
        rows.iter().map(|r| r.pool_size).eq(2..=6),
        "pool sizes {:?}",
        rows.iter().map(|r| r.pool_size).collect::<Vec<_>>()
    );
    let mut parts = Vec::new();
    for r in &rows {
        ensure!(
            r.synapse_crps <= r.best_crps,
            "pool {}: synapse {} > best {} ({})",
            r.pool_size,
            r.synapse_crps,
            r.best_crps,
            r.best_model
        );
        parts.push(format!(
            "{}:{:.4}<={:.4}",
            r.pool_size, r.synapse_crps, r.best_crps
        ));
    }
    Ok(parts.join(" "))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("metric unit suite", metric_units),
        ("inverse-CDF round trip", inverse_cdf_round_trip),
        ("mixture oracle", mixture_oracle),
        ("arbitration algorithm conformance", algorithm_conformance),
        ("oracle dominance and top-k", oracle_dominance),
        ("headline directional claims", headline_claims),
        ("pool-scaling sweep", pool_scaling),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
