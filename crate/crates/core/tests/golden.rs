use std::time::Instant;

use cfx_core::repro_examples;
use serde_json::{json, Value};

fn cells(r: &cfx_core::BenchResult, table: u64, kind: &str, label: &str) -> Vec<Value> {
    let col = |name: &str| r.columns.iter().position(|c| c == name).unwrap();
    let row = r
        .rows
        .iter()
        .find(|row| {
            row[col("table")] == json!(table)
                && row[col("kind")] == json!(kind)
                && row[col("label")] == json!(label)
        })
        .unwrap_or_else(|| panic!("no {kind} row {label} in table {table}"));
    ["A1", "A2", "A3"]
        .iter()
        .map(|c| row[col(c)].clone())
        .collect()
}

#[test]
fn worked_example_tables_reproduce_exactly() {
    let start = Instant::now();
    let r = repro_examples().unwrap();
    let elapsed = start.elapsed();
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    assert!(elapsed.as_secs_f64() < 1.0, "{elapsed:?}");

    assert_eq!(
        cells(&r, 1, "order", "A1,A2,A3"),
        [json!(1.0), json!(1.0), json!(20.0)]
    );
    assert_eq!(
        cells(&r, 3, "order", "A3,A2,A1"),
        [json!(1.0), json!(0.0), json!(0.0)]
    );
    assert_eq!(
        cells(&r, 4, "order", "A1,A2,A3"),
        [json!(1.0), json!(-1.0), json!(1.0)]
    );
    let orders = r.rows.iter().filter(|row| row[1] == json!("order")).count();
    assert_eq!(orders, 24);
}

#[test]
fn repro_is_deterministic() {
    assert_eq!(
        repro_examples().unwrap().to_json().unwrap(),
        repro_examples().unwrap().to_json().unwrap()
    );
}
