use std::collections::HashMap;
use std::path::{Path, PathBuf};

use cfx_core::data::KindHint;
use cfx_core::models::{synthetic, ModelDocument};
use cfx_core::{
    build_stats_policy, compute_stats, fit_model_based, load_csv, percentile_threshold,
    CounterfactualPolicy, CsvOptions, Dataset, DecisionRule, DecisionSystem, Feature, FeatureKind,
    FeatureSchema, Instance, ScoringFunction,
};
use serde_json::Value;

use crate::args::{Demo, PolicyKind, RuleKind, SystemArgs};
use crate::failure::{Failure, Outcome};

pub struct Resolved {
    pub system: DecisionSystem,
    pub schema: FeatureSchema,
    pub instance: Instance,
    pub policy: CounterfactualPolicy,
}

/// CSV files named on the command line, all read against one schema.
struct Files {
    label: Option<String>,
    schema: Option<FeatureSchema>,
    loaded: HashMap<PathBuf, Dataset>,
}

impl Files {
    fn load(&mut self, path: &Path) -> Outcome<&Dataset> {
        if !self.loaded.contains_key(path) {
            let mut options = CsvOptions {
                target: self.label.clone(),
                hints: HashMap::new(),
            };
            if let Some(schema) = &self.schema {
                for f in schema.features() {
                    let hint = match f.kind {
                        FeatureKind::Numeric => KindHint::Numeric,
                        FeatureKind::Binary => KindHint::Binary,
                        FeatureKind::Categorical { .. } => KindHint::Categorical,
                    };
                    options.hints.insert(f.name.clone(), hint);
                }
            }
            let data = load_csv(path, &options)?;
            match &self.schema {
                Some(s) if s != data.schema() => {
                    return Err(Failure::usage(format!(
                        "{}: columns or categorical levels differ from the other input files",
                        path.display()
                    )))
                }
                Some(_) => {}
                None => self.schema = Some(data.schema().clone()),
            }
            self.loaded.insert(path.to_owned(), data);
        }
        Ok(&self.loaded[path])
    }
}

fn load_model(path: &Path) -> Outcome<ModelDocument> {
    Ok(ModelDocument::load(path)?)
}

fn rule(kind: RuleKind, threshold: f64) -> DecisionRule {
    match kind {
        RuleKind::AtLeast => DecisionRule::at_least(threshold),
        RuleKind::Above => DecisionRule::above(threshold),
    }
}

fn demo_id(demo: Demo) -> u8 {
    match demo {
        Demo::Example1 => 1,
        Demo::Example2 => 2,
        Demo::Example3 => 3,
    }
}

fn parse_instance(
    text: &str,
    schema: &FeatureSchema,
    files: &mut Files,
    data: Option<&PathBuf>,
) -> Outcome<Instance> {
    let text = text.trim();
    if let Ok(row) = text.parse::<usize>() {
        let path = data.ok_or_else(|| Failure::usage("a row index --instance needs --data"))?;
        let dataset = files.load(path)?;
        return dataset.row(row).cloned().map_err(|_| {
            Failure::usage(format!(
                "{}: row {row} out of range ({} rows)",
                path.display(),
                dataset.len()
            ))
        });
    }
    let json: Value = serde_json::from_str(text)
        .map_err(|e| Failure::usage(format!("--instance is neither a row index nor JSON: {e}")))?;
    let value_of = |j: usize, v: &Value| -> Outcome<f64> {
        match (v, &schema.features()[j].kind) {
            (Value::Number(n), _) => n
                .as_f64()
                .ok_or_else(|| Failure::usage(format!("bad number for {}", schema.name(j)))),
            (Value::String(s), FeatureKind::Categorical { vocabulary }) => vocabulary
                .iter()
                .position(|l| l == s)
                .map(|i| i as f64)
                .ok_or_else(|| {
                    Failure::usage(format!("unknown level {s:?} of {}", schema.name(j)))
                }),
            _ => Err(Failure::usage(format!(
                "bad value {v} for {}",
                schema.name(j)
            ))),
        }
    };
    let values = match &json {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if j >= schema.len() {
                    Err(Failure::usage(format!(
                        "--instance has {} values for {} features",
                        items.len(),
                        schema.len()
                    )))
                } else {
                    value_of(j, v)
                }
            })
            .collect::<Outcome<Vec<f64>>>()?,
        Value::Object(map) => {
            if let Some(name) = map.keys().find(|k| schema.index_of(k).is_none()) {
                return Err(Failure::usage(format!(
                    "--instance names unknown feature {name:?}"
                )));
            }
            (0..schema.len())
                .map(|j| {
                    let v = map.get(schema.name(j)).ok_or_else(|| {
                        Failure::usage(format!("--instance lacks feature {:?}", schema.name(j)))
                    })?;
                    value_of(j, v)
                })
                .collect::<Outcome<Vec<f64>>>()?
        }
        _ => {
            return Err(Failure::usage(
                "--instance JSON must be an array or an object",
            ))
        }
    };
    Ok(schema.instance(values)?)
}

pub fn resolve(args: &SystemArgs) -> Outcome<Resolved> {
    let mut files = Files {
        label: args.label.clone(),
        schema: None,
        loaded: HashMap::new(),
    };
    for path in [&args.data, &args.policy_data, &args.reference]
        .into_iter()
        .flatten()
    {
        files.load(path)?;
    }

    let (scorer, default_rule, schema) = if let Some(demo) = args.demo {
        let system = synthetic::system(demo_id(demo));
        (system.scorer, Some(system.rule), FeatureSchema::binary(3)?)
    } else if let Some(path) = &args.model {
        let doc = load_model(path)?;
        let mut scorer = doc.scoring_function()?;
        let schema = match &files.schema {
            Some(s) => s.clone(),
            None => FeatureSchema::new(doc.features.iter().map(Feature::numeric).collect())?,
        };
        doc.check_schema(&schema)?;
        if let Some(path2) = &args.model2 {
            let doc2 = load_model(path2)?;
            doc2.check_schema(&schema)?;
            scorer = ScoringFunction::product(vec![scorer, doc2.scoring_function()?])?;
        }
        (scorer, None, schema)
    } else {
        return Err(Failure::usage("need --demo or --model"));
    };
    if files.schema.as_ref().is_some_and(|s| s != &schema) {
        return Err(Failure::usage(
            "input files do not match the demo's features",
        ));
    }

    let decision_rule = if let Some(t) = args.threshold {
        rule(args.rule, t)
    } else if let Some(fraction) = args.top_fraction {
        let path = args.reference.as_ref().expect("clap requires --reference");
        let reference = files.load(path)?;
        rule(
            args.rule,
            percentile_threshold(&scorer, reference, fraction)?,
        )
    } else if let Some(r) = default_rule {
        r
    } else {
        return Err(Failure::usage(
            "need --threshold or --top-fraction with --reference",
        ));
    };
    let system = DecisionSystem::new(scorer, decision_rule)?;

    let instance = match &args.instance {
        Some(text) => parse_instance(text, &schema, &mut files, args.data.as_ref())?,
        None if args.demo.is_some() => Instance::new(vec![1.0; 3]),
        None => return Err(Failure::usage("need --instance")),
    };

    let policy = if let Some(path) = &args.policy_file {
        let p = CounterfactualPolicy::load(path)?;
        p.validate(&schema)?;
        p
    } else {
        match args.policy {
            PolicyKind::Zero => {
                let p = CounterfactualPolicy::zero(schema.len());
                p.validate(&schema)?;
                p
            }
            kind => {
                let path = args
                    .policy_data
                    .as_ref()
                    .or(args.data.as_ref())
                    .ok_or_else(|| {
                        Failure::usage("mean, mode and model-based policies need --policy-data")
                    })?;
                let population = files.load(path)?;
                let mask = if args.policy_default_only {
                    population
                        .rows()
                        .iter()
                        .map(|r| Ok(system.is_default(system.decide(r)?)))
                        .collect::<cfx_core::Result<Vec<bool>>>()?
                } else {
                    vec![true; population.len()]
                };
                match kind {
                    PolicyKind::ModelBased => {
                        fit_model_based(population, &mask, args.imputation_l2)?
                    }
                    _ => build_stats_policy(&compute_stats(population, Some(&mask))?, &schema)?,
                }
            }
        }
    };
    Ok(Resolved {
        system,
        schema,
        instance,
        policy,
    })
}
