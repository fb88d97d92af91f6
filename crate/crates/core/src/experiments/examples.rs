use serde_json::{json, Value};

use super::{BenchResult, Check};
use crate::decision::DecisionSystem;
use crate::error::Result;
use crate::imputation::CounterfactualPolicy;
use crate::models::synthetic;
use crate::schema::{FeatureSchema, FeatureSet, Instance};
use crate::search::{ebe_search, oracle_all_explanations, SearchConfig};
use crate::shapley::{joining_order_impacts, shapley_exact, AttributionTarget};

struct Golden {
    impacts: [[f64; 3]; 6],
    shapley: [f64; 3],
    explanations: &'static [&'static [usize]],
}

const TABLES: [Golden; 4] = [
    Golden {
        impacts: [
            [1.0, 1.0, 20.0],
            [1.0, 11.0, 10.0],
            [1.0, 1.0, 20.0],
            [11.0, 1.0, 10.0],
            [11.0, 11.0, 0.0],
            [11.0, 11.0, 0.0],
        ],
        shapley: [6.0, 6.0, 10.0],
        explanations: &[],
    },
    Golden {
        impacts: [
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
        ],
        shapley: [0.5, 0.5, 0.0],
        explanations: &[&[0, 1]],
    },
    Golden {
        impacts: [
            [0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
        ],
        shapley: [0.5, 0.5, 0.0],
        explanations: &[&[0], &[1]],
    },
    Golden {
        impacts: [
            [1.0, -1.0, 1.0],
            [1.0, 1.0, -1.0],
            [-1.0, 1.0, 1.0],
            [1.0, 1.0, -1.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
        ],
        shapley: [0.5, 0.5, 0.0],
        explanations: &[&[0], &[1], &[2]],
    },
];

fn sorted_sets(sets: impl Iterator<Item = FeatureSet>) -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = sets.map(|s| s.indices().to_vec()).collect();
    v.sort();
    v
}

fn render_sets(schema: &FeatureSchema, sets: &[Vec<usize>]) -> String {
    sets.iter()
        .map(|s| {
            format!(
                "{{{}}}",
                schema
                    .set_names(&FeatureSet::new(s.iter().copied()))
                    .join(",")
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn compare_cells(label: &str, got: &[f64], want: &[f64], checks: &mut Vec<Check>) {
    let mismatch = got
        .iter()
        .zip(want)
        .enumerate()
        .find(|(_, (g, w))| g != w)
        .map(|(i, (g, w))| format!("A{}: got {g}, expected {w}", i + 1));
    checks.push(match mismatch {
        Some(detail) => Check::new(label, false, detail),
        None => Check::new(label, true, "exact"),
    });
}

/// The three-feature worked examples: joining-order impact rows, score and
/// decision Shapley vectors and explanation sets, compared exactly against
/// their known values.
pub fn repro_examples() -> Result<BenchResult> {
    let schema = FeatureSchema::binary(3)?;
    let instance = Instance::new(vec![1.0; 3]);
    let policy = CounterfactualPolicy::zero(3);
    let all = FeatureSet::full(3);
    let mut rows = Vec::new();
    let mut checks = Vec::new();

    for (t, golden) in TABLES.iter().enumerate() {
        let table = t + 1;
        let example = if table == 1 { 1 } else { (table - 1) as u8 };
        let system: DecisionSystem = synthetic::system(example);
        let target = if table == 1 {
            AttributionTarget::Score(&system.scorer)
        } else {
            AttributionTarget::DecisionIndicator(&system)
        };

        let impacts = joining_order_impacts(target, &instance, &policy, &all)?;
        for (r, (order, values)) in impacts.iter().enumerate() {
            let order_names: Vec<&str> = order.iter().map(|&j| schema.name(j)).collect();
            rows.push(vec![
                json!(table),
                json!("order"),
                json!(order_names.join(",")),
                json!(values[0]),
                json!(values[1]),
                json!(values[2]),
                Value::Null,
            ]);
            compare_cells(
                &format!("table{table}.order{}", r + 1),
                values,
                &golden.impacts[r],
                &mut checks,
            );
        }

        let shapley = shapley_exact(target, &instance, &policy, &all)?;
        rows.push(vec![
            json!(table),
            json!("shapley"),
            json!(if table == 1 { "score" } else { "decision" }),
            json!(shapley.values[0]),
            json!(shapley.values[1]),
            json!(shapley.values[2]),
            Value::Null,
        ]);
        compare_cells(
            &format!("table{table}.shapley"),
            &shapley.values,
            &golden.shapley,
            &mut checks,
        );

        if table == 1 {
            continue;
        }
        let want: Vec<Vec<usize>> = golden.explanations.iter().map(|s| s.to_vec()).collect();
        let oracle = oracle_all_explanations(&system, &instance, &policy, 3, &FeatureSet::empty())?;
        let search = ebe_search(&system, &instance, &policy, &SearchConfig::default())?;
        for (method, found) in [
            ("oracle", sorted_sets(oracle.into_iter().map(|e| e.set))),
            ("ebe", sorted_sets(search.into_iter().map(|e| e.set))),
        ] {
            let text = render_sets(&schema, &found);
            rows.push(vec![
                json!(table),
                json!("explanations"),
                json!(method),
                Value::Null,
                Value::Null,
                Value::Null,
                json!(text),
            ]);
            let passed = found == want;
            let detail = if passed {
                text
            } else {
                format!("got {text}, expected {}", render_sets(&schema, &want))
            };
            checks.push(Check::new(
                format!("table{table}.explanations.{method}"),
                passed,
                detail,
            ));
        }
    }

    let passed = checks.iter().filter(|c| c.passed).count();
    Ok(BenchResult {
        experiment: "examples".into(),
        seed: 0,
        config: json!({ "instance": [1, 1, 1], "policy": "zero", "rule": "score >= 1" }),
        columns: ["table", "kind", "label", "A1", "A2", "A3", "explanations"]
            .map(String::from)
            .to_vec(),
        rows,
        summary: json!({ "checks": checks.len(), "passed": passed }),
        checks,
    })
}
