#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use righttrain::baselines::{brute_force_optimum, split_learning_plan, BruteConfig};
use righttrain::harness::emit::{sweep_to_csv, sweep_to_json};
use righttrain::harness::{
    deadline_range, gen_scenario, ordered_trees, righttrain_solve, sweep, SolveConfig, Strategy,
};
use righttrain::mapper::{brute_force_steiner_oracle, build_expanded_graph, da_steiner_tree};
use righttrain::model::{
    check_constraints, load_scenario, load_solution, scenario_to_json, solution_to_json, Scenario,
};
use righttrain::perf::ceil_epochs;
use righttrain::{Error, Result};

#[derive(Parser)]
#[command(
    name = "righttrain",
    version,
    about = "Energy-aware placement of DNN training over mobile, edge and cloud nodes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a preset scenario.
    Gen {
        #[arg(long, default_value = "small")]
        preset: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one scenario at one deadline.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tmax: f64,
    },
    /// Run strategies over a range of deadlines.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// start:stop:step in seconds, stop included.
        #[arg(long)]
        tmax_range: String,
        /// Comma separated subset of righttrain,sl,optimum.
        #[arg(long, default_value = "righttrain,sl,optimum")]
        strategies: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run one baseline at one deadline.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tmax: f64,
        #[arg(long, value_enum, default_value_t = BaselineKind::Sl)]
        strategy: BaselineKind,
    },
    /// Compare the greedy mapping with the exhaustive one on each tree.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tmax: f64,
    },
    /// Check a solution file against the scenario.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
        /// Also require the total time to fit this deadline.
        #[arg(long)]
        tmax: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file. Without it a preset is generated.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "small")]
    preset: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Sl,
    Optimum,
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(Error::validation(format!("`{s}` is not start:stop:step")));
    };
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|e| Error::validation(format!("`{p}`: {e}")))
    };
    deadline_range(num(a)?, num(b)?, num(c)?)
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(path) => load_scenario(path),
            None => gen_scenario(&self.preset, self.seed),
        }
    }

    fn solve_config(&self) -> Result<SolveConfig> {
        if !(self.eps > 0.0) {
            return Err(Error::validation(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(SolveConfig {
            eps: self.eps,
            ..SolveConfig::default()
        })
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { preset, seed, out } => emit(&out, &scenario_to_json(&gen_scenario(&preset, seed)?)),
        Command::Solve { common, tmax } => {
            let scenario = common.scenario()?;
            let outcome = righttrain_solve(&scenario, tmax, &common.solve_config()?)?;
            for line in &outcome.skipped {
                eprintln!("skipped {line}");
            }
            emit(&common.out, &solution_to_json(&outcome.solution))
        }
        Command::Sweep {
            common,
            tmax_range,
            strategies,
            format,
        } => {
            let scenario = common.scenario()?;
            let strategies = strategies
                .split(',')
                .map(|s| Strategy::parse(s.trim()))
                .collect::<Result<Vec<_>>>()?;
            let deadlines = parse_range(&tmax_range)?;
            let result = sweep(&scenario, &deadlines, &strategies, &common.solve_config()?);
            let text = match format {
                Format::Csv => sweep_to_csv(&result),
                Format::Json => sweep_to_json(&result),
            };
            emit(&common.out, &text)
        }
        Command::Baseline { common, tmax, strategy } => {
            let scenario = common.scenario()?;
            let solution = match strategy {
                BaselineKind::Sl => split_learning_plan(&scenario, tmax)?.solution,
                BaselineKind::Optimum => {
                    let trees: Vec<_> = ordered_trees(&scenario)?.into_iter().map(|(t, _)| t).collect();
                    let cfg = BruteConfig::default();
                    brute_force_optimum(&scenario, &trees, tmax, &cfg)?.solution
                }
            };
            emit(&common.out, &solution_to_json(&solution))
        }
        Command::Oracle { common, tmax } => {
            let scenario = common.scenario()?;
            let mut report = String::from("tree,greedy_weight,oracle_weight,ratio,status\n");
            for (i, (tree, _)) in ordered_trees(&scenario)?.iter().enumerate() {
                let k = ceil_epochs(scenario.k_model.raw(tree.num_instances(), scenario.num_layers(), 1.0));
                let g = match build_expanded_graph(tree, &scenario, k) {
                    Ok(g) => g,
                    Err(e) => {
                        report.push_str(&format!("{i},,,,{e}\n"));
                        continue;
                    }
                };
                let greedy = da_steiner_tree(&g, &scenario, tree, tmax, common.eps)
                    .ok()
                    .map(|s| s.weight);
                let (exact, status) = match brute_force_steiner_oracle(&g, &scenario, tree, tmax) {
                    Ok(o) => (o.map(|o| o.weight), "ok".to_string()),
                    Err(e @ Error::SizeCap { .. }) => (None, e.to_string()),
                    Err(e) => return Err(e),
                };
                let cell = |w: Option<f64>| w.map_or(String::new(), |w| w.to_string());
                let ratio = match (greedy, exact) {
                    (Some(a), Some(b)) if b > 0.0 => (a / b).to_string(),
                    _ => String::new(),
                };
                report.push_str(&format!("{i},{},{},{ratio},{status}\n", cell(greedy), cell(exact)));
            }
            emit(&common.out, &report)
        }
        Command::Check { common, solution, tmax } => {
            let scenario = common.scenario()?;
            let solution = load_solution(&solution, &scenario)?;
            let report = check_constraints(&solution, &scenario);
            emit(&common.out, &format!("{report}\n"))?;
            if !report.passed() {
                return Err(Error::validation("solution violates constraints"));
            }
            if let Some(t) = tmax {
                if !solution.meets_deadline(t) {
                    return Err(Error::infeasible(format!(
                        "total time {} exceeds the deadline {t}",
                        solution.metrics.total_time
                    )));
                }
            }
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) | Error::EmptyGraph { .. } => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
