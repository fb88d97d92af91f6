use std::fs;

use cfx_core::models::{train_logistic, LogisticConfig, ModelDocument};
use cfx_core::{
    build_stats_policy, compute_stats, ebe_search, load_csv, write_csv, CounterfactualPolicy,
    CsvOptions, DecisionRule, DecisionSystem, Error, Scorer, SearchConfig,
};

const TOY: &str = "\
income,debt,owner,approved
5.0,1.0,1,1
4.5,0.5,1,1
6.0,2.0,0,1
1.0,3.0,0,0
0.5,2.5,1,0
1.5,4.0,0,0
";

#[test]
fn csv_model_and_policy_survive_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    fs::write(&csv, TOY).unwrap();
    let data = load_csv(&csv, &CsvOptions::with_target("approved")).unwrap();
    assert_eq!(data.schema().names(), ["income", "debt", "owner"]);
    assert_eq!(data.len(), 6);

    let copy = dir.path().join("copy.csv");
    write_csv(&data, &copy, "approved").unwrap();
    let again = load_csv(&copy, &CsvOptions::with_target("approved")).unwrap();
    assert_eq!(again.rows(), data.rows());
    assert_eq!(again.target(), data.target());

    let (model, report) = train_logistic(&data, 1e-2, &LogisticConfig::default()).unwrap();
    assert!(report.final_loss.is_finite());
    let doc = ModelDocument::new(data.schema(), &model, None).unwrap();
    let model_path = dir.path().join("model.json");
    doc.save(&model_path).unwrap();
    let loaded = ModelDocument::load(&model_path)
        .unwrap()
        .scoring_function()
        .unwrap();
    for row in data.rows() {
        assert_eq!(loaded.score(row).unwrap(), model.score(row).unwrap());
    }

    let policy = build_stats_policy(&compute_stats(&data, None).unwrap(), data.schema()).unwrap();
    let policy_path = dir.path().join("policy.json");
    policy.save(&policy_path).unwrap();
    let policy_again = CounterfactualPolicy::load(&policy_path).unwrap();
    assert_eq!(policy_again, policy);

    let system = DecisionSystem::new(loaded, DecisionRule::at_least(0.5)).unwrap();
    let found = ebe_search(
        &system,
        &data.rows()[0],
        &policy_again,
        &SearchConfig::default(),
    )
    .unwrap();
    assert!(!found.is_empty());
}

#[test]
fn errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let err = load_csv(&missing, &CsvOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("absent.csv"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\n3,\n").unwrap();
    let err = load_csv(&bad, &CsvOptions::default())
        .unwrap_err()
        .to_string();
    assert!(err.contains("bad.csv") && err.contains("line 3"), "{err}");

    let single = dir.path().join("single.csv");
    fs::write(&single, "a,y\n1,1\n2,1\n").unwrap();
    let data = load_csv(&single, &CsvOptions::with_target("y")).unwrap();
    let err = train_logistic(&data, 0.0, &LogisticConfig::default()).unwrap_err();
    assert!(matches!(err, Error::SingleClassTarget(_)));
}
