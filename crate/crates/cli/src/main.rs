use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use smoothed_core::harness::{self, parse_values, run_trial_detailed, sweep, verify_scenario_net, Axis, Scenario};
use smoothed_core::lowerbound::{ratio_experiment, RatioRow};
use smoothed_core::online::{AlgorithmName, FiniteKind};
use smoothed_core::problems::Problem;

#[derive(Parser)]
#[command(name = "smoothed", version, about = "Smoothed online k-server, k-taxi and chasing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Append a wall-clock runtime column (makes output nondeterministic).
        #[arg(long)]
        runtime: bool,
        /// Write combiner weights and switches of ensemble runs here.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Run a scenario over several values of one axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of sigma, k, T, m.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        runtime: bool,
    },
    /// Build the scenario's net and check separation, density and size.
    VerifyNet {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Online versus offline cost on the hypercube instance.
    LbExperiment {
        /// Comma-separated values of k (each at least 2).
        #[arg(long)]
        k: String,
        #[arg(long = "T")]
        t: usize,
        #[arg(long)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "kserver")]
        problem: String,
    },
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            runtime,
            diagnostics,
        } => {
            let scenario = Scenario::load(&config)?;
            let mut rows = Vec::new();
            let mut diag = String::new();
            for &seed in &scenario.seeds {
                let o = run_trial_detailed(&scenario, seed, diagnostics.is_some())?;
                if let Some(log) = &o.combiner_log {
                    for e in log {
                        let probs: Vec<String> = e.probabilities.iter().map(f64::to_string).collect();
                        diag.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            seed,
                            e.step,
                            e.active,
                            e.switched_from.map(|s| s.to_string()).unwrap_or_default(),
                            e.switch_cost,
                            probs.join(";")
                        ));
                    }
                }
                rows.push(o.row);
            }
            write_out(&out, &harness::to_csv(&rows, runtime))?;
            if let Some(p) = diagnostics {
                write_out(&p, &format!("seed,step,active,switched_from,switch_cost,probabilities\n{diag}"))?;
            }
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
            runtime,
        } => {
            let scenario = Scenario::load(&config)?;
            let axis: Axis = axis.parse()?;
            let rows = sweep(&scenario, axis, &parse_values(&values)?)?;
            write_out(&out, &harness::to_csv(&rows, runtime))?;
        }
        Command::VerifyNet { config, samples } => {
            let scenario = Scenario::load(&config)?;
            let r = verify_scenario_net(&scenario, samples, 0)?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "size {} (bound {})", r.size, r.size_bound)?;
            writeln!(stdout, "separated {}", r.separated)?;
            writeln!(stdout, "dense {} (max projection distance {})", r.dense, r.max_projection_distance)?;
            writeln!(stdout, "size_ok {}", r.size_ok)?;
            if !r.all_ok() {
                bail!("net check failed");
            }
        }
        Command::LbExperiment {
            k,
            t,
            seeds,
            out,
            problem,
        } => {
            let problem: Problem = problem.parse()?;
            let ks: Vec<usize> = k
                .split(',')
                .map(|x| x.trim().parse().with_context(|| format!("bad k value {x:?}")))
                .collect::<Result<_>>()?;
            if ks.iter().any(|&k| k < 2) {
                bail!("every k must be at least 2");
            }
            let seeds: Vec<u64> = (0..seeds).collect();
            let mut algorithms = vec![AlgorithmName::Direct, AlgorithmName::Wrapped(FiniteKind::Greedy), AlgorithmName::Wrapped(FiniteKind::Wfa)];
            if problem == Problem::KServer {
                algorithms.push(AlgorithmName::Wrapped(FiniteKind::Marking));
            }
            let rows = ratio_experiment(problem, &ks, t, &seeds, &algorithms)?;
            let mut text = format!("{}\n", RatioRow::HEADER);
            for r in &rows {
                text.push_str(&r.to_csv());
                text.push('\n');
            }
            write_out(&out, &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
