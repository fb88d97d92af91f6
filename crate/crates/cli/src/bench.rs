use cfx_core::experiments::{render_cell, TargetingModelConfig};
use cfx_core::{
    bench_consistency, credit_study, donation_study, repro_examples, targeting_study, BenchResult,
    ConsistencyConfig, CreditConfig, DonationConfig, TargetingStudyConfig,
};

use crate::args::{BenchArgs, Cli, Experiment, Format};
use crate::failure::{Failure, Outcome, ASSERTION};
use crate::output;

/// Errors when a flag was given that `experiment` does not use.
fn reject_unused(args: &BenchArgs, experiment: &str, allowed: &[&str]) -> Outcome<()> {
    let given = [
        ("runs", args.runs.is_some()),
        ("samples", args.samples.is_some()),
        ("k", args.k.is_some()),
        ("users-per-quantile", args.users_per_quantile.is_some()),
        ("pages", args.pages.is_some()),
        ("training-users", args.training_users.is_some()),
        ("rows", args.rows.is_some()),
        ("instances", args.instances.is_some()),
        ("max-iteration", args.max_iteration.is_some()),
        ("timings", args.timings),
    ];
    match given
        .iter()
        .find(|(name, set)| *set && !allowed.contains(name))
    {
        Some((name, _)) => Err(Failure::usage(format!(
            "--{name} does not apply to the {experiment} experiment"
        ))),
        None => Ok(()),
    }
}

fn targeting_model(args: &BenchArgs, mut model: TargetingModelConfig) -> TargetingModelConfig {
    if let Some(p) = args.pages {
        model.generator.pages = p;
    }
    if let Some(n) = args.training_users {
        model.training_users = n;
    }
    model
}

fn execute(cli: &Cli, args: &BenchArgs) -> Outcome<BenchResult> {
    let seed = cli.seed;
    Ok(match args.experiment {
        Experiment::Examples => {
            reject_unused(args, "examples", &[])?;
            repro_examples()?
        }
        Experiment::Consistency => {
            reject_unused(
                args,
                "consistency",
                &[
                    "runs",
                    "samples",
                    "k",
                    "users-per-quantile",
                    "pages",
                    "training-users",
                    "max-iteration",
                    "timings",
                ],
            )?;
            let d = ConsistencyConfig::default();
            let config = ConsistencyConfig {
                model: targeting_model(args, d.model.clone()),
                runs: args.runs.unwrap_or(d.runs),
                samples: args.samples.unwrap_or(d.samples),
                k: args.k.unwrap_or(d.k),
                users_per_quantile: args.users_per_quantile.unwrap_or(d.users_per_quantile),
                max_iteration: args.max_iteration.unwrap_or(d.max_iteration),
                timings: args.timings,
                ..d
            };
            bench_consistency(&config, seed)?
        }
        Experiment::Targeting => {
            reject_unused(
                args,
                "targeting",
                &[
                    "users-per-quantile",
                    "pages",
                    "training-users",
                    "max-iteration",
                ],
            )?;
            let d = TargetingStudyConfig::default();
            let config = TargetingStudyConfig {
                model: targeting_model(args, d.model.clone()),
                users_per_quantile: args.users_per_quantile.unwrap_or(d.users_per_quantile),
                max_iteration: args.max_iteration.unwrap_or(d.max_iteration),
                ..d
            };
            targeting_study(&config, seed)?
        }
        Experiment::Credit => {
            reject_unused(args, "credit", &["rows", "instances", "max-iteration"])?;
            let d = CreditConfig::default();
            let config = CreditConfig {
                applicants: args.rows.unwrap_or(d.applicants),
                max_instances: args.instances.unwrap_or(d.max_instances),
                max_iteration: args.max_iteration.unwrap_or(d.max_iteration),
                ..d
            };
            credit_study(&config, seed)?
        }
        Experiment::Donation => {
            reject_unused(
                args,
                "donation",
                &["rows", "instances", "samples", "max-iteration"],
            )?;
            let d = DonationConfig::default();
            let config = DonationConfig {
                households: args.rows.unwrap_or(d.households),
                max_instances: args.instances.unwrap_or(d.max_instances),
                samples: args.samples.unwrap_or(d.samples),
                max_iteration: args.max_iteration.unwrap_or(d.max_iteration),
                ..d
            };
            donation_study(&config, seed)?
        }
    })
}

pub fn run(cli: &Cli, args: &BenchArgs) -> Outcome<()> {
    let result = execute(cli, args)?;
    if let Some(path) = &args.csv_out {
        result.write_csv(path)?;
    }
    if let Some(path) = &args.json_out {
        result.write_json(path)?;
    }
    let text = match cli.format {
        Format::Json => result.to_json()? + "\n",
        Format::Csv => result.to_csv()?,
        Format::Table => {
            let columns: Vec<&str> = result.columns.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|r| r.iter().map(render_cell).collect())
                .collect();
            let mut t = output::table(&columns, &rows);
            for c in &result.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                t += &format!("{status} {}: {}\n", c.name, c.detail);
            }
            t
        }
    };
    output::emit(cli, &text)?;
    let failed: Vec<String> = result
        .failures()
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: ASSERTION,
            message: format!("check failed: {}", failed.join("; ")),
        })
    }
}
