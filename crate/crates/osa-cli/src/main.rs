//! `osa` — batch front-end for the spectrum-access policy library.
//!
//! Subcommands: `validate` (schema + model checks on a scenario config),
//! `solve` (writes a policy artifact and a summary CSV), `reproduce`
//! (emits the benchmark table/figure CSVs), and `simulate` (seeded Monte
//! Carlo evaluation with an optional exact cross-check).
//!
//! Exit codes: 0 success, 2 usage or parse failure, 3 validation failure,
//! 4 node-budget exhaustion.

mod config;
mod output;
mod reproduce;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use osa_core::{exact_report, monte_carlo, OsaError};

use config::{EvalSpec, LoadedConfig, Violation};
use output::{fmt_f64, write_csv, write_json};
use run::{solve_policy, PolicyDetail};

#[derive(Parser)]
#[command(
    name = "osa",
    version,
    about = "Opportunistic spectrum access policies for reactive primary users"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario configuration against the schema and model rules.
    Validate { config: PathBuf },
    /// Solve the configured policy and write the artifact plus a summary.
    Solve {
        config: PathBuf,
        /// Output directory for policy.json and summary.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a reproduction CSV (table1, fig4..fig11).
    Reproduce {
        id: String,
        /// Output directory for `<id>.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo evaluation of the configured policy (JSON on stdout).
    Simulate {
        config: PathBuf,
        /// Episode count; falls back to the config's eval block, then 100000.
        #[arg(long)]
        episodes: Option<u64>,
        /// RNG seed; falls back to the config's eval block, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Also evaluate exactly and report the 4-standard-error verdict.
        #[arg(long)]
        cross_check: bool,
    },
}

enum CliError {
    Parse(String),
    Usage(String),
    Validation(Vec<Violation>),
    Infeasible(String),
    Budget(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) => 2,
            CliError::Validation(_) | CliError::Infeasible(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    fn print(&self) {
        match self {
            CliError::Parse(message) => eprintln!("parse error: {message}"),
            CliError::Usage(message) => eprintln!("usage error: {message}"),
            CliError::Validation(violations) => {
                for violation in violations {
                    eprintln!("{violation}");
                }
            }
            CliError::Infeasible(message) => eprintln!("infeasible: {message}"),
            CliError::Budget(message) => eprintln!("budget exceeded: {message}"),
            CliError::Internal(message) => eprintln!("error: {message}"),
        }
    }
}

impl From<OsaError> for CliError {
    fn from(error: OsaError) -> Self {
        match error {
            OsaError::BudgetExceeded { .. } => CliError::Budget(error.to_string()),
            OsaError::InfeasibleRequirement { .. } => CliError::Infeasible(error.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn load_config(path: &PathBuf) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|error| CliError::Parse(format!("cannot read {}: {error}", path.display())))?;
    let document: serde_json::Value = serde_json::from_str(&text)
        .map_err(|error| CliError::Parse(format!("{}: {error}", path.display())))?;
    let mut config = config::validate(&document).map_err(CliError::Validation)?;
    if let Ok(text) = std::env::var("OSA_NODE_BUDGET") {
        let budget: u64 = text.parse().map_err(|_| {
            CliError::Usage(format!(
                "OSA_NODE_BUDGET must be a positive integer, got \"{text}\""
            ))
        })?;
        if budget < 1 {
            return Err(CliError::Usage(
                "OSA_NODE_BUDGET must be a positive integer".to_string(),
            ));
        }
        config.node_budget = budget;
    }
    Ok(config)
}

fn cmd_validate(path: &PathBuf) -> Result<(), CliError> {
    let config = load_config(path)?;
    println!(
        "valid: {} channel(s), horizon {}, zeta {}, constraint {}",
        config.channels.len(),
        config.horizon,
        config.zeta,
        config.constraint.as_str()
    );
    Ok(())
}

fn cmd_solve(path: &PathBuf, out: &PathBuf) -> Result<(), CliError> {
    let config = load_config(path)?;
    let scenario = config.scenario();
    let solved = solve_policy(
        &scenario,
        config.constraint,
        &config.psi,
        config.node_budget,
    )?;
    let report = exact_report(
        &scenario,
        &solved.schedule,
        &solved.tree,
        config.node_budget,
    )?;

    std::fs::create_dir_all(out)
        .map_err(|error| CliError::Internal(format!("cannot create {}: {error}", out.display())))?;

    // Policy artifact: per-channel, per-slot actions plus the sensing tree.
    let per_channel_actions: Vec<Vec<serde_json::Value>> = (0..scenario.num_channels())
        .map(|channel| {
            (1..=scenario.horizon())
                .map(|t| {
                    let action = solved.schedule.action(channel, t);
                    serde_json::json!({
                        "epsilon": action.point.epsilon,
                        "delta": action.point.delta,
                        "access": action.access,
                    })
                })
                .collect()
        })
        .collect();
    let mut policy_document = serde_json::json!({
        "constraint": config.constraint.as_str(),
        "horizon": scenario.horizon(),
        "zeta": scenario.zeta(),
        "channels": scenario.channels(),
        "su_value_total": solved.value,
        "su_value_normalized": solved.value / scenario.horizon() as f64,
        "per_channel_actions": per_channel_actions,
        "sensing_tree": solved.tree,
    });
    match &solved.detail {
        PolicyDetail::Sccp(action) => {
            policy_document["sccp_action"] = serde_json::to_value(action).expect("serializable");
        }
        PolicyDetail::Lput(schedules) => {
            policy_document["lput_schedules"] =
                serde_json::to_value(schedules).expect("serializable");
        }
    }
    let policy_path = out.join("policy.json");
    write_json(&policy_path, &policy_document)
        .map_err(|error| CliError::Internal(format!("cannot write policy.json: {error}")))?;

    // Summary: one CSV row per channel.
    let benchmarks = scenario.benchmarks();
    let rows: Vec<String> = (0..scenario.num_channels())
        .map(|channel| {
            let meets = report.pu_normalized[channel] >= benchmarks[channel] - 1e-9;
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                config.constraint.as_str(),
                scenario.horizon(),
                fmt_f64(scenario.zeta()),
                fmt_f64(solved.value),
                fmt_f64(report.su_normalized),
                channel,
                fmt_f64(report.pu_normalized[channel]),
                fmt_f64(benchmarks[channel]),
                fmt_f64(report.upper_bound[channel]),
                meets
            )
        })
        .collect();
    let summary_path = out.join("summary.csv");
    write_csv(
        &summary_path,
        "constraint,horizon,zeta,su_value_total,su_value_normalized,channel,pu_throughput,benchmark,upper_bound,meets_benchmark",
        &rows,
    )
    .map_err(|error| CliError::Internal(format!("cannot write summary.csv: {error}")))?;

    println!("{}", policy_path.display());
    println!("{}", summary_path.display());
    Ok(())
}

fn cmd_reproduce(id: &str, out: &PathBuf) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|error| CliError::Internal(format!("cannot create {}: {error}", out.display())))?;
    match reproduce::reproduce(id, out)? {
        Some(path) => {
            println!("{}", path.display());
            Ok(())
        }
        None => Err(CliError::Usage(format!(
            "unknown reproduction id \"{id}\"; expected one of {}",
            reproduce::TARGETS.join(", ")
        ))),
    }
}

fn cmd_simulate(
    path: &PathBuf,
    episodes: Option<u64>,
    seed: Option<u64>,
    cross_check: bool,
) -> Result<(), CliError> {
    let config = load_config(path)?;
    let scenario = config.scenario();
    let solved = solve_policy(
        &scenario,
        config.constraint,
        &config.psi,
        config.node_budget,
    )?;

    let (config_episodes, config_seed) = match config.eval {
        EvalSpec::MonteCarlo { episodes, seed } => (Some(episodes), Some(seed)),
        EvalSpec::Exact => (None, None),
    };
    let episodes = episodes.or(config_episodes).unwrap_or(100_000);
    let seed = seed.or(config_seed).unwrap_or(0);

    let report = monte_carlo(&scenario, &solved.schedule, &solved.tree, episodes, seed)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("serializable")
    );

    if cross_check {
        let exact = exact_report(
            &scenario,
            &solved.schedule,
            &solved.tree,
            config.node_budget,
        )?;
        let errors = report.standard_errors.as_ref().expect("monte carlo report");
        let mut all_ok = true;
        let mut verdict = |name: String, estimate: f64, truth: f64, se: f64| {
            let gap = (estimate - truth).abs();
            let bound = 4.0 * se.max(1e-12);
            let ok = gap <= bound;
            all_ok &= ok;
            eprintln!(
                "cross-check {name}: |{estimate:.6} - {truth:.6}| = {gap:.2e} vs 4*SE = {bound:.2e} -> {}",
                if ok { "PASS" } else { "FAIL" }
            );
        };
        verdict(
            "su".to_string(),
            report.su_normalized,
            exact.su_normalized,
            errors.su_normalized,
        );
        for channel in 0..scenario.num_channels() {
            verdict(
                format!("pu[{channel}]"),
                report.pu_normalized[channel],
                exact.pu_normalized[channel],
                errors.pu_normalized[channel],
            );
        }
        if !all_ok {
            return Err(CliError::Internal(
                "cross-check failed: Monte Carlo and exact evaluation disagree beyond 4 SE"
                    .to_string(),
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { config } => cmd_validate(config),
        Command::Solve { config, out } => cmd_solve(config, out),
        Command::Reproduce { id, out } => cmd_reproduce(id, out),
        Command::Simulate {
            config,
            episodes,
            seed,
            cross_check,
        } => cmd_simulate(config, *episodes, *seed, *cross_check),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            error.print();
            ExitCode::from(error.exit_code())
        }
    }
}
