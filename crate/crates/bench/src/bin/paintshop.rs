use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use paintshop::BpspInstance;
use paintshop_bench::config::{parse_bodies, parse_list};
use paintshop_bench::output::{write_rows, Format};
use paintshop_bench::{
    aggregate, run_circuit_count_report, run_method_comparison, run_on_instance, run_resource_report,
    run_sigma_sweep, ExperimentConfig, Method, Mode,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "paintshop", version, about = "Binary paint shop solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print seeded random instances.
    Generate(Common),
    /// Solve one instance (given with --sequence, or generated) with each method.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Car sequence as comma-separated body labels, each appearing twice.
        #[arg(long)]
        sequence: Option<String>,
        /// Index of the generated instance to solve.
        #[arg(long, default_value_t = 0)]
        instance: usize,
    },
    /// Compare methods over random instances.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Emit mean and standard error per (size, method, depth, sigma).
        #[arg(long)]
        summary: bool,
    },
    /// Optimised QAOA and RQAOA under Gaussian angle noise.
    SigmaSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        summary: bool,
    },
    /// Circuit metrics and MPS statistics of full and cone circuits.
    Resources(Common),
    /// Circuits used per method under each accounting.
    CircuitCounts(Common),
}

#[derive(Args)]
struct Common {
    /// Car body counts, `A..B` inclusive or a single value.
    #[arg(long, default_value = "4..10")]
    bodies: String,
    /// Random instances per size.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Comma-separated QAOA depths.
    #[arg(long, default_value = "1")]
    p: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `exact` expectations or sampled `shots`.
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value_t = 4096)]
    shots: u64,
    /// Evaluate expectations through reverse causal cones.
    #[arg(long)]
    rcc: bool,
    /// Comma-separated methods; each subcommand has its own default.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long, default_value = "0,0.05,0.2,0.5")]
    sigmas: String,
    /// MPS truncation cutoffs.
    #[arg(long, default_value = "0,0.005,0.0075,0.01")]
    cutoffs: String,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Add wall-clock milliseconds per row (output is then not reproducible).
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn config(&self, default_methods: &[Method]) -> anyhow::Result<ExperimentConfig> {
        let mode = match self.mode.as_str() {
            "exact" => Mode::Exact,
            "shots" => Mode::Shots(self.shots),
            other => bail!("unknown mode '{other}', expected exact or shots"),
        };
        let methods = match &self.methods {
            Some(m) => parse_list::<Method>(m)?,
            None => default_methods.to_vec(),
        };
        let config = ExperimentConfig {
            bodies: parse_bodies(&self.bodies)?,
            instances: self.instances,
            ps: parse_list(&self.p)?,
            seed: self.seed,
            methods,
            mode,
            via_rcc: self.rcc,
            sigmas: parse_list(&self.sigmas)?,
            cutoffs: parse_list(&self.cutoffs)?,
            timings: self.timings,
        };
        config.check()?;
        Ok(config)
    }

    fn emit<T: Serialize>(&self, rows: &[T]) -> anyhow::Result<()> {
        let format: Format = self.format.parse()?;
        match &self.out {
            Some(path) => {
                let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
                let mut w = BufWriter::new(file);
                write_rows(rows, format, &mut w)?;
                w.flush()?;
            }
            None => write_rows(rows, format, io::stdout().lock())?,
        }
        Ok(())
    }
}

const COMPARE_METHODS: [Method; 4] = [Method::Greedy, Method::RecursiveGreedy, Method::BruteForce, Method::RqaoaFixed];
const SOLVE_METHODS: [Method; 5] =
    [Method::Greedy, Method::RecursiveGreedy, Method::BruteForce, Method::QaoaFixed, Method::RqaoaFixed];
const COUNT_METHODS: [Method; 4] =
    [Method::QaoaFixed, Method::QaoaOptimised, Method::RqaoaFixed, Method::RqaoaOptimised];

#[derive(Serialize)]
struct GeneratedRow {
    n_bodies: usize,
    instance: usize,
    seed: u64,
    sequence: String,
}

fn join(seq: &[usize]) -> String {
    seq.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let config = common.config(&COMPARE_METHODS)?;
            let mut rows = Vec::new();
            for n in config.bodies.clone() {
                for k in 0..config.instances {
                    let seed = config.instance_seed(k);
                    let inst = BpspInstance::random(n, seed)?;
                    rows.push(GeneratedRow { n_bodies: n, instance: k, seed, sequence: join(inst.sequence()) });
                }
            }
            common.emit(&rows)
        }
        Command::Solve { common, sequence, instance } => {
            let config = common.config(&SOLVE_METHODS)?;
            let inst = match sequence {
                Some(s) => {
                    let labels: Vec<String> = s.split(',').map(|t| t.trim().to_string()).collect();
                    BpspInstance::from_labels(&labels)?
                }
                None => BpspInstance::random(*config.bodies.start(), config.instance_seed(instance))?,
            };
            common.emit(&run_on_instance(&config, &inst, instance)?)
        }
        Command::Compare { common, summary } => {
            let rows = run_method_comparison(&common.config(&COMPARE_METHODS)?)?;
            if summary {
                common.emit(&aggregate(&rows))
            } else {
                common.emit(&rows)
            }
        }
        Command::SigmaSweep { common, summary } => {
            let rows = run_sigma_sweep(&common.config(&COMPARE_METHODS)?)?;
            if summary {
                common.emit(&aggregate(&rows))
            } else {
                common.emit(&rows)
            }
        }
        Command::Resources(common) => common.emit(&run_resource_report(&common.config(&COMPARE_METHODS)?)?),
        Command::CircuitCounts(common) => common.emit(&run_circuit_count_report(&common.config(&COUNT_METHODS)?)?),
    }
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
