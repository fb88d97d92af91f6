//! End-to-end acceptance criteria. Each criterion prints one PASS or FAIL
//! line with its runtime; the test fails if any criterion does.

use std::process::Command;
use std::time::{Duration, Instant};

use cfx_core::models::{synthetic, LogisticObjective, Monomial};
use cfx_core::shapley::active_features;
use cfx_core::{
    bench_consistency, credit_study, ebe_search, oracle_all_explanations, repro_examples,
    shapley_exact, shapley_permutation_sample, shapley_sampled, targeting_study, AttributionTarget,
    ConsistencyConfig, CostFunction, CounterfactualPolicy, CreditConfig, DecisionRule,
    DecisionSystem, FeatureSet, Instance, ScoringFunction, SearchConfig, SearchOrdering,
    TargetingStudyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Id, name, check and wall-clock limit.
type Criterion = (&'static str, &'static str, fn() -> Outcome, Duration);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn sets(explanations: &[cfx_core::Explanation]) -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = explanations
        .iter()
        .map(|e| e.set.indices().to_vec())
        .collect();
    v.sort();
    v
}

fn random_terms(m: usize, rng: &mut ChaCha8Rng) -> Vec<Monomial> {
    (0..rng.random_range(1..=2 * m))
        .map(|_| {
            let degree = rng.random_range(1..=3.min(m));
            let mut factors: Vec<usize> = (0..degree).map(|_| rng.random_range(0..m)).collect();
            factors.sort_unstable();
            factors.dedup();
            let c = [-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0][rng.random_range(0..8)];
            Monomial::new(c, factors)
        })
        .collect()
}

fn ac1() -> Outcome {
    let r = repro_examples().map_err(|e| e.to_string())?;
    let failed: Vec<String> = r
        .failures()
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(format!("{} checks exact", r.checks.len()))
}

fn ac2() -> Outcome {
    let expected: [Vec<Vec<usize>>; 3] = [
        vec![vec![0, 1]],
        vec![vec![0], vec![1]],
        vec![vec![0], vec![1], vec![2]],
    ];
    let ones = Instance::new(vec![1.0; 3]);
    let p = CounterfactualPolicy::zero(3);
    for (id, want) in (1u8..=3).zip(&expected) {
        let system = synthetic::system(id);
        let oracle = oracle_all_explanations(&system, &ones, &p, 3, &FeatureSet::empty())
            .map_err(|e| e.to_string())?;
        let found =
            ebe_search(&system, &ones, &p, &SearchConfig::default()).map_err(|e| e.to_string())?;
        ensure(&sets(&oracle) == want, || {
            format!("C{id} oracle {:?}", sets(&oracle))
        })?;
        ensure(&sets(&found) == want, || {
            format!("C{id} search {:?}", sets(&found))
        })?;
    }
    Ok("C1, C2, C3 match".into())
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cases = 300;
    for case in 0..cases {
        let m = 1 + case % 8;
        let scorer = ScoringFunction::polynomial(m, random_terms(m, &mut rng)).unwrap();
        let threshold = rng.random_range(-3..=5) as f64;
        let system = DecisionSystem::new(scorer, DecisionRule::at_least(threshold)).unwrap();
        let instance = Instance::new((0..m).map(|_| rng.random_range(0..=1) as f64).collect());
        let p = CounterfactualPolicy::zero(m);
        let oracle = oracle_all_explanations(&system, &instance, &p, m, &FeatureSet::empty())
            .map_err(|e| e.to_string())?;
        let config = SearchConfig {
            max_iteration: 1 << m,
            ..SearchConfig::default()
        };
        let found = ebe_search(&system, &instance, &p, &config).map_err(|e| e.to_string())?;
        ensure(sets(&oracle) == sets(&found), || {
            format!(
                "case {case}: oracle {:?} search {:?}",
                sets(&oracle),
                sets(&found)
            )
        })?;
    }
    Ok(format!("{cases} systems, 0 mismatches"))
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let pairs = 1200;
    for case in 0..pairs {
        let m = rng.random_range(2..=5);
        // Feature m is a dummy; features 0 and 1 are made symmetric.
        let mut terms = random_terms(m, &mut rng);
        let swap = |j: usize| [1, 0].get(j).copied().unwrap_or(j);
        let mirrored: Vec<Monomial> = terms
            .iter()
            .map(|t| {
                Monomial::new(
                    t.coefficient,
                    t.factors.iter().map(|&j| swap(j)).collect::<Vec<_>>(),
                )
            })
            .collect();
        terms.extend(mirrored);
        let n = m + 1;
        let scorer = ScoringFunction::polynomial(n, terms).unwrap();
        let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut cf: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        values[1] = values[0];
        cf[1] = cf[0];
        let instance = Instance::new(values);
        let p = CounterfactualPolicy::fixed(&cf);
        let active = active_features(&instance, &p).map_err(|e| e.to_string())?;
        let system = DecisionSystem::new(scorer.clone(), DecisionRule::at_least(0.0)).unwrap();
        for target in [
            AttributionTarget::Score(&scorer),
            AttributionTarget::DecisionIndicator(&system),
        ] {
            let r = shapley_exact(target, &instance, &p, &active).map_err(|e| e.to_string())?;
            let sum: f64 = r.values.iter().sum();
            ensure((sum - (r.full - r.baseline)).abs() <= 1e-9, || {
                format!(
                    "case {case}: efficiency off by {}",
                    sum - (r.full - r.baseline)
                )
            })?;
            ensure(r.value_of(m) == 0.0, || {
                format!("case {case}: dummy {}", r.value_of(m))
            })?;
            ensure((r.value_of(0) - r.value_of(1)).abs() <= 1e-9, || {
                format!(
                    "case {case}: symmetry {} vs {}",
                    r.value_of(0),
                    r.value_of(1)
                )
            })?;
        }
    }
    Ok(format!("{pairs} instances, score and decision targets"))
}

fn ac5() -> Outcome {
    let scorer = synthetic::example1();
    let instance = Instance::new(vec![1.0; 3]);
    let p = CounterfactualPolicy::zero(3);
    let active = FeatureSet::full(3);
    let target = AttributionTarget::Score(&scorer);
    let expected = [6.0, 6.0, 10.0];
    let close = |values: &[f64]| {
        values
            .iter()
            .zip(expected)
            .all(|(v, e)| (v - e).abs() <= 0.2)
    };
    let mut within = 0;
    for seed in 0..100 {
        let r = shapley_permutation_sample(target, &instance, &p, &active, 100_000, seed)
            .map_err(|e| e.to_string())?;
        within += usize::from(close(&r.values));
    }
    ensure(within >= 95, || format!("{within} of 100 seeds within 0.2"))?;
    let escalated =
        shapley_sampled(target, &instance, &p, &active, 100_000, 0).map_err(|e| e.to_string())?;
    ensure(escalated.values == expected, || {
        format!("escalated {:?}", escalated.values)
    })?;
    Ok(format!("{within} of 100 seeds within 0.2"))
}

fn ac6() -> Outcome {
    let mut lines = Vec::new();
    for seed in 1..=3 {
        let r =
            bench_consistency(&ConsistencyConfig::default(), seed).map_err(|e| e.to_string())?;
        let failed: Vec<String> = r
            .failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        ensure(failed.is_empty(), || {
            format!("seed {seed}: {}", failed.join("; "))
        })?;
        lines.push(format!(
            "seed {seed} matches {} size {}",
            r.summary["mean_matches"], r.summary["mean_size"]
        ));
    }
    Ok(lines.join("; "))
}

fn ac7() -> Outcome {
    let config = SearchConfig {
        ordering: SearchOrdering::ScorePerCostDescending(
            CostFunction::new(vec![f64::INFINITY, 1.0, 1.0]).unwrap(),
        ),
        ..SearchConfig::default()
    };
    let found = ebe_search(
        &synthetic::system(2),
        &Instance::new(vec![1.0; 3]),
        &CounterfactualPolicy::zero(3),
        &config,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        found.first().map(|e| e.set.indices().to_vec()) == Some(vec![1]),
        || format!("C2 first explanation {:?}", found.first().map(|e| &e.set)),
    )?;
    let study = || targeting_study(&TargetingStudyConfig::default(), 1);
    let r = study().map_err(|e| e.to_string())?;
    let check = &r.checks[0];
    ensure(check.passed, || check.detail.clone())?;
    let again = study().map_err(|e| e.to_string())?;
    ensure(r == again, || "targeting study is not deterministic".into())?;
    Ok(format!("C2 puts {{A2}} first; {}", check.detail))
}

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = 3;
    let x: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..m).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|r| f64::from(r[0] + r[2] + rng.random_range(-1.0..1.0) > 0.0))
        .collect();
    let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
    let objective = LogisticObjective::new(&rows, &y, 0.05).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let (_, grad, grad_b) = objective.loss_and_gradient(&w, b);
        for j in 0..=m {
            let at = |d: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if j < m {
                    w2[j] += d;
                } else {
                    b2 += d;
                }
                objective.loss(&w2, b2)
            };
            let numeric = (at(h) - at(-h)) / (2.0 * h);
            let analytic = if j < m { grad[j] } else { grad_b };
            worst = worst.max((numeric - analytic).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max abs error {worst:e}"))?;
    Ok(format!("max abs error {worst:.1e}"))
}

fn ac9() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["explain", "--demo", "example2"],
        &["explain", "--demo", "example3", "--all", "--format", "csv"],
        &[
            "shap",
            "--demo",
            "example1",
            "--samples",
            "4",
            "--runs",
            "3",
            "--seed",
            "9",
        ],
        &[
            "shap", "--demo", "example3", "--exact", "--target", "decision", "--format", "csv",
        ],
        &["bench", "--experiment", "examples"],
        &["bench", "--experiment", "examples", "--format", "csv"],
    ];
    for args in runs {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_cfx"))
                .args(args)
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (run()?, run()?);
        ensure(a.status.success(), || {
            format!("{args:?} exited {:?}", a.status.code())
        })?;
        ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || {
            format!("{args:?} differs between runs")
        })?;
    }
    Ok(format!("{} commands byte-identical", runs.len()))
}

fn ac10() -> Outcome {
    let r = credit_study(&CreditConfig::default(), 1).map_err(|e| e.to_string())?;
    let failed: Vec<String> = r
        .failures()
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(r.checks
        .iter()
        .map(|c| c.detail.clone())
        .collect::<Vec<_>>()
        .join("; "))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("AC1", "golden tables", ac1, Duration::from_secs(1)),
        (
            "AC2",
            "golden explanation sets",
            ac2,
            Duration::from_secs(1),
        ),
        ("AC3", "oracle equivalence", ac3, Duration::from_secs(60)),
        ("AC4", "Shapley axioms", ac4, Duration::from_secs(30)),
        (
            "AC5",
            "sampling concentration",
            ac5,
            Duration::from_secs(30),
        ),
        ("AC6", "consistency trend", ac6, Duration::from_secs(600)),
        ("AC7", "cost heuristic", ac7, Duration::MAX),
        ("AC8", "gradient check", ac8, Duration::MAX),
        ("AC9", "CLI determinism", ac9, Duration::MAX),
        ("AC10", "credit imputation", ac10, Duration::MAX),
    ];
    let mut failed = Vec::new();
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let result = match outcome {
            Ok(detail) if elapsed <= limit => Ok(detail),
            Ok(detail) => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            Err(e) => Err(e),
        };
        match &result {
            Ok(detail) => println!("[PASS] {id} {name} ({elapsed:.2?}): {detail}"),
            Err(e) => {
                println!("[FAIL] {id} {name} ({elapsed:.2?}): {e}");
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
