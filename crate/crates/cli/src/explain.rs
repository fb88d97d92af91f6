use cfx_core::search::ExplanationDocument;
use cfx_core::{
    ebe_search, oracle_all_explanations, CostFunction, FeatureSchema, FeatureSet, SearchConfig,
    SearchOrdering,
};
use serde_json::Value;

use crate::args::{Cli, ExplainArgs, Format};
use crate::failure::{Failure, Outcome, NO_EXPLANATIONS};
use crate::output::{self, number};
use crate::system::resolve;

fn feature_index(schema: &FeatureSchema, name: &str) -> Outcome<usize> {
    schema
        .index_of(name)
        .ok_or_else(|| Failure::usage(format!("unknown feature {name:?}")))
}

fn parse_costs(source: &str, schema: &FeatureSchema) -> Outcome<CostFunction> {
    let text = if source.trim_start().starts_with('{') {
        source.to_owned()
    } else {
        std::fs::read_to_string(source).map_err(|e| Failure::usage(format!("{source}: {e}")))?
    };
    let map: serde_json::Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("--costs must be a JSON object: {e}")))?;
    let mut costs = vec![1.0; schema.len()];
    for (name, value) in &map {
        let j = feature_index(schema, name)?;
        costs[j] = match value {
            Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
            Value::String(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") => {
                f64::INFINITY
            }
            _ => f64::NAN,
        };
        if costs[j].is_nan() {
            return Err(Failure::usage(format!(
                "cost of {name:?} must be a number or \"inf\", got {value}"
            )));
        }
    }
    Ok(CostFunction::new(costs)?)
}

pub fn run(cli: &Cli, args: &ExplainArgs) -> Outcome<()> {
    let r = resolve(&args.system)?;
    let exclude = args
        .exclude
        .iter()
        .filter(|n| !n.is_empty())
        .map(|n| feature_index(&r.schema, n))
        .collect::<Outcome<FeatureSet>>()?;
    let explanations = if args.all {
        oracle_all_explanations(
            &r.system,
            &r.instance,
            &r.policy,
            args.max_size.unwrap_or(r.schema.len()),
            &exclude,
        )?
    } else {
        let ordering = match &args.costs {
            Some(costs) => SearchOrdering::ScorePerCostDescending(parse_costs(costs, &r.schema)?),
            None => SearchOrdering::ScoreAscending,
        };
        let config = SearchConfig {
            max_iteration: args.max_iter,
            ordering,
            power_set_bound: args.power_set_bound,
            exclude,
        };
        ebe_search(&r.system, &r.instance, &r.policy, &config)?
    };
    let docs: Vec<ExplanationDocument> = explanations
        .iter()
        .map(|e| e.to_document(&r.schema))
        .collect();

    let columns = [
        "rank",
        "features",
        "cost",
        "score_before",
        "score_after",
        "decision_before",
        "decision_after",
        "reduction",
    ];
    let rows: Vec<Vec<String>> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            vec![
                (i + 1).to_string(),
                d.features.join(" "),
                number(d.cost),
                number(d.score_before),
                number(d.score_after),
                d.decision_before.to_string(),
                d.decision_after.to_string(),
                serde_json::to_value(d.reduction)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
            ]
        })
        .collect();
    let text = match cli.format {
        Format::Json => output::json(&docs)?,
        Format::Csv => output::csv(&columns, &rows)?,
        Format::Table => output::table(&columns, &rows),
    };
    output::emit(cli, &text)?;
    if docs.is_empty() {
        return Err(Failure {
            code: NO_EXPLANATIONS,
            message: "no explanation found".into(),
        });
    }
    Ok(())
}
