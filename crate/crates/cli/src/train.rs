use cfx_core::models::{
    train_linear, train_logistic, LogisticConfig, ModelDocument, Standardization,
};
use cfx_core::{load_csv, CsvOptions};
use serde_json::json;

use crate::args::{Cli, Format, Task, TrainArgs};
use crate::failure::{Failure, Outcome};
use crate::output;

pub fn run(cli: &Cli, args: &TrainArgs) -> Outcome<()> {
    if args.l2.is_nan() || args.l2 < 0.0 {
        return Err(Failure::usage("--l2 must be >= 0"));
    }
    let data = load_csv(&args.data, &CsvOptions::with_target(&args.target))?;
    let scaling = args.standardize.then(|| Standardization::fit(&data));
    let fit_data = match &scaling {
        Some(s) => s.apply(&data)?,
        None => data.clone(),
    };
    let (model, report) = match args.task {
        Task::Classify => {
            let config = LogisticConfig {
                max_epochs: args.max_epochs,
                ..LogisticConfig::default()
            };
            train_logistic(&fit_data, args.l2, &config)?
        }
        Task::Regress => train_linear(&fit_data, args.l2)?,
    };
    ModelDocument::new(data.schema(), &model, scaling)?.save(&args.model_out)?;

    let summary = json!({
        "model": args.model_out.display().to_string(),
        "kind": model.kind_name(),
        "rows": data.len(),
        "iterations": report.iterations,
        "final_loss": report.final_loss,
        "gradient_norm": report.gradient_norm,
        "converged": report.converged,
    });
    let fields = [
        "model",
        "kind",
        "rows",
        "iterations",
        "final_loss",
        "gradient_norm",
        "converged",
    ];
    let rows: Vec<Vec<String>> = fields
        .iter()
        .map(|f| {
            vec![
                f.to_string(),
                cfx_core::experiments::render_cell(&summary[f]),
            ]
        })
        .collect();
    let text = match cli.format {
        Format::Json => output::json(&summary)?,
        Format::Csv => output::csv(&["field", "value"], &rows)?,
        Format::Table => output::table(&["field", "value"], &rows),
    };
    output::emit(cli, &text)
}
