use cfx_core::experiments::derive_seed;
use cfx_core::shapley::{active_features, ShapleyDocument};
use cfx_core::{shapley_exact, shapley_sampled, topk_matches, AttributionTarget};
use serde::Serialize;

use crate::args::{Cli, Format, ShapArgs, TargetKind};
use crate::failure::{Failure, Outcome};
use crate::output::{self, number};
use crate::system::resolve;

#[derive(Serialize)]
struct ShapOutput {
    reports: Vec<ShapleyDocument>,
    k: usize,
    /// Features shared by every run's top `k`; present with two or more runs.
    topk_matches: Option<usize>,
}

pub fn run(cli: &Cli, args: &ShapArgs) -> Outcome<()> {
    if args.runs == 0 || args.k == 0 {
        return Err(Failure::usage("--runs and --k must be >= 1"));
    }
    let r = resolve(&args.system)?;
    let active = active_features(&r.instance, &r.policy)?;
    let target = match args.target {
        TargetKind::Score => AttributionTarget::Score(&r.system.scorer),
        TargetKind::Decision => AttributionTarget::DecisionIndicator(&r.system),
    };
    let reports = (0..args.runs as u64)
        .map(|run| {
            if args.exact {
                shapley_exact(target, &r.instance, &r.policy, &active)
            } else {
                shapley_sampled(
                    target,
                    &r.instance,
                    &r.policy,
                    &active,
                    args.samples,
                    derive_seed(cli.seed, run),
                )
            }
        })
        .collect::<cfx_core::Result<Vec<_>>>()?;
    let matches = if reports.len() >= 2 {
        Some(topk_matches(&reports, args.k)?)
    } else {
        None
    };
    let out = ShapOutput {
        reports: reports
            .iter()
            .map(|rep| rep.to_document(&r.schema))
            .collect(),
        k: args.k,
        topk_matches: matches,
    };

    let columns = ["run", "feature", "value"];
    let rows: Vec<Vec<String>> = out
        .reports
        .iter()
        .enumerate()
        .flat_map(|(run, doc)| {
            doc.values
                .iter()
                .map(move |v| vec![(run + 1).to_string(), v.feature.clone(), number(v.value)])
        })
        .collect();
    let text = match cli.format {
        Format::Json => output::json(&out)?,
        Format::Csv => output::csv(&columns, &rows)?,
        Format::Table => {
            let mut t = output::table(&columns, &rows);
            if let Some(m) = matches {
                t += &format!("top-{} matches: {m}\n", args.k);
            }
            t
        }
    };
    output::emit(cli, &text)
}
