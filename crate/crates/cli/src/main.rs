//! `radtree` command-line front end.

mod commands;
mod config;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, Format, Graph, Method, RunConfig, WindowKind};
use record::CliError;

#[derive(Parser, Debug)]
#[command(name = "radtree", version, about = "Radial spanning trees and directed spanning forests on Poisson samples")]
struct Cli {
    /// Master seed; required unless supplied by --config or --replay.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replicate loops. Never changes the numbers.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// What to print on standard output.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON run configuration; flags given alongside it take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Re-run a recorded experiment and compare its results.
    #[arg(long, global = true, value_name = "RECORD")]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args, Debug, Default)]
struct WindowArgs {
    /// Window shape (default: box).
    #[arg(long, value_enum)]
    window: Option<WindowKind>,
    /// Lower box corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lo: Option<Vec<f64>>,
    /// Upper box corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    hi: Option<Vec<f64>>,
    /// Ball radius.
    #[arg(long, allow_hyphen_values = true)]
    radius: Option<f64>,
    /// Dimension (default: 2, or the length of --lo).
    #[arg(long)]
    d: Option<usize>,
}

impl WindowArgs {
    fn apply(self, c: &mut RunConfig) {
        c.window = self.window;
        c.lo = self.lo;
        c.hi = self.hi;
        c.radius = self.radius;
        c.d = self.d;
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, value_enum)]
    graph: Option<Graph>,
    /// Intensity.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Edge-length exponent of the reported functional (default: 1).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Forest direction, a unit vector (default: last axis).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,
    /// Dilation margin of the forest sample (default: scaled by t^(-1/d)).
    #[arg(long, allow_hyphen_values = true)]
    margin: Option<f64>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    window: WindowArgs,
    /// Intensity (default: 1000).
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args, Debug)]
struct VaArgs {
    /// Estimator (default: ball).
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Ball radius of the ball method (default: 8).
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    /// Truncation radius of the integral method (default: from the envelope).
    #[arg(long, allow_hyphen_values = true)]
    r_trunc: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,
    /// Integrand points per replicate of the integral method (default: 64).
    #[arg(long)]
    z_samples: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args, Debug)]
struct CltArgs {
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Increasing intensities, comma separated (default: 64,256,1024).
    #[arg(long = "t", value_delimiter = ',', allow_hyphen_values = true)]
    t_list: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Blocks for the subsampling error (default: 10).
    #[arg(long)]
    subsamples: Option<usize>,
}

#[derive(Args, Debug)]
struct ChecksArgs {
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// One realisation: points.csv and edges.csv.
    Simulate(SimulateArgs),
    /// Mean of the scaled radial-tree functional.
    Mean(EstimateArgs),
    /// Variance of the scaled radial-tree functional.
    Variance(EstimateArgs),
    /// Limiting variance constant of the stationary functional.
    Va(VaArgs),
    /// Kolmogorov distance to normality along a list of intensities.
    Clt(CltArgs),
    /// Mecke, tail, difference-operator and volume-ratio checks.
    Checks(ChecksArgs),
    /// Same as --replay.
    Replay {
        record: PathBuf,
    },
}

/// Flags as a partial config, plus the replay target if any.
fn flags(cli: Cli) -> (RunConfig, Option<PathBuf>) {
    let mut c = RunConfig {
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out,
        format: cli.format,
        ..Default::default()
    };
    let mut replay = cli.replay;
    match cli.command {
        None => {}
        Some(Cmd::Simulate(s)) => {
            c.command = Some(Command::Simulate);
            s.window.apply(&mut c);
            c.graph = s.graph;
            c.t = s.t;
            c.a = s.a;
            c.direction = s.direction;
            c.margin = s.margin;
        }
        Some(Cmd::Mean(s)) => {
            c.command = Some(Command::Mean);
            estimate(s, &mut c);
        }
        Some(Cmd::Variance(s)) => {
            c.command = Some(Command::Variance);
            estimate(s, &mut c);
        }
        Some(Cmd::Va(s)) => {
            c.command = Some(Command::Va);
            c.method = s.method;
            c.r = s.r;
            c.r_trunc = s.r_trunc;
            c.a = s.a;
            c.d = s.d;
            c.direction = s.direction;
            c.z_samples = s.z_samples;
            c.replicates = s.replicates;
        }
        Some(Cmd::Clt(s)) => {
            c.command = Some(Command::Clt);
            s.window.apply(&mut c);
            c.a = s.a;
            c.t_list = s.t_list;
            c.replicates = s.replicates;
            c.subsamples = s.subsamples;
        }
        Some(Cmd::Checks(s)) => {
            c.command = Some(Command::Checks);
            s.window.apply(&mut c);
            c.t = s.t;
            c.a = s.a;
            c.direction = s.direction;
            c.replicates = s.replicates;
        }
        Some(Cmd::Replay { record }) => replay = Some(record),
    }
    (c, replay)
}

fn estimate(s: EstimateArgs, c: &mut RunConfig) {
    s.window.apply(c);
    c.t = s.t;
    c.a = s.a;
    c.replicates = s.replicates;
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_file = cli.config.clone();
    let (flag_config, replay) = flags(cli);
    if let Some(path) = replay {
        return record::replay(&path, flag_config.out, flag_config.workers);
    }
    let config = match config_file {
        Some(p) => record::read_config(&p)?.overlay(flag_config),
        None => flag_config,
    };
    let resolved = config.resolve()?;
    let rec = record::run(&resolved)?;
    record::emit(&resolved, &rec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("radtree: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
