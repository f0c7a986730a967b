//! Command-line front end for the simulation laboratory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdbandit::diagnostics::optimal_fraction;
use hdbandit::experiment::io::{mean_sd, read_rows, read_traces, write_rows, SummaryRow};
use hdbandit::experiment::runner::summary_series;
use hdbandit::experiment::{
    emit_chart, run_experiment, run_replay, write_experiment, write_replay, ExperimentConfig,
};
use hdbandit::{Error, RegretTrace, Result};

#[derive(Parser, Debug)]
#[command(name = "hdbandit", version, about = "Sparse high-dimensional contextual bandit simulations")]
struct Cli {
    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "HDBANDIT_JOBS", default_value_t = 0)]
    jobs: usize,

    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate every configured policy and write traces, summary and chart.
    Run { config: PathBuf },
    /// Replay a labeled dataset over row permutations.
    Replay { config: PathBuf },
    /// Summarize a directory of trace CSVs.
    Diagnose { trace_dir: PathBuf },
    /// Render a summary CSV as an SVG regret chart.
    Chart { summary: PathBuf, output: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok((cfg, out))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let (cfg, out) = load(cli, config)?;
            let result = run_experiment(&cfg, cli.jobs)?;
            write_experiment(&result, &out, cfg.chart)?;
            for id in &result.policy_order {
                let failures: usize = result
                    .results
                    .iter()
                    .filter(|r| &r.trace.policy_id == id)
                    .map(|r| r.solver_failures)
                    .sum();
                let mean = result.mean_final_regret(id).unwrap_or(f64::NAN);
                print!("{id}: mean cumulative regret at T={} is {mean:.4}", cfg.horizon);
                if failures > 0 {
                    print!(" ({failures} solver refits hit the iteration limit)");
                }
                println!();
            }
            println!("wrote {}", out.display());
        }
        Command::Replay { config } => {
            let (cfg, out) = load(cli, config)?;
            let result = run_replay(&cfg, cli.jobs)?;
            write_replay(&result, &out, cfg.chart)?;
            for f in &result.finals {
                println!(
                    "{}: misclassification {:.4} ± {:.4} over {} permutations",
                    f.policy, f.mean, f.sd, f.permutations
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Diagnose { trace_dir } => diagnose(trace_dir, cli.out.as_deref())?,
        Command::Chart { summary, output } => {
            let rows: Vec<SummaryRow> = read_rows(summary)?;
            emit_chart(&summary_series(&rows), output, "t", "cumulative regret")?;
        }
    }
    Ok(())
}

#[derive(Debug, serde::Serialize)]
struct DiagnoseRow {
    policy: String,
    reps: usize,
    horizon: usize,
    mean_regret: f64,
    sd_regret: f64,
    optimal_fraction_second_half: f64,
}

fn diagnose(dir: &Path, out: Option<&Path>) -> Result<()> {
    let search = if dir.join("traces").is_dir() {
        dir.join("traces")
    } else {
        dir.to_path_buf()
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(&search)
        .map_err(|e| Error::Io {
            path: search.clone(),
            source: e,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!("no trace CSVs in {}", search.display())));
    }
    let mut traces: Vec<RegretTrace> = Vec::new();
    for f in &files {
        traces.extend(read_traces(f)?);
    }
    let mut order: Vec<String> = Vec::new();
    for t in &traces {
        if !order.contains(&t.policy_id) {
            order.push(t.policy_id.clone());
        }
    }
    let mut rows = Vec::new();
    for id in order {
        let group: Vec<&RegretTrace> = traces.iter().filter(|t| t.policy_id == id).collect();
        let horizon = group.iter().map(|t| t.len()).min().unwrap_or(0);
        let finals: Vec<f64> = group.iter().map(|t| t.cum_regret_at(horizon)).collect();
        let fractions = group
            .iter()
            .map(|t| optimal_fraction(t, horizon.div_ceil(2).max(1)))
            .collect::<Result<Vec<_>>>()?;
        let (mean, sd) = mean_sd(&finals);
        let row = DiagnoseRow {
            policy: id,
            reps: group.len(),
            horizon,
            mean_regret: mean,
            sd_regret: sd,
            optimal_fraction_second_half: mean_sd(&fractions).0,
        };
        println!(
            "{}: {} reps, T={}, regret {:.4} ± {:.4}, optimal pulls in second half {:.3}",
            row.policy, row.reps, row.horizon, row.mean_regret, row.sd_regret, row.optimal_fraction_second_half
        );
        rows.push(row);
    }
    if let Some(out) = out {
        std::fs::create_dir_all(out).map_err(|e| Error::Io {
            path: out.to_path_buf(),
            source: e,
        })?;
        write_rows(&out.join("diagnose.csv"), &rows)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 3 })
        }
    }
}
