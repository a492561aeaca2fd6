use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cpsense::bounds::{
    covering_log_cardinality, prop2_measurement_bound, rip_probe_with, theorem1_measurement_bound,
    BoundInputs,
};
use cpsense::conditioning::{generate_conditioned_model, kappa, Spacing};
use cpsense::experiment::{
    emit_plot_script, run_experiment, write_csv, ExperimentConfig, MODEL_STREAM, OPERATOR_STREAM,
};
use cpsense::io;
use cpsense::recovery::{recover, Initialization, RecoveryConfig};
use cpsense::seed::mix;
use cpsense::selftest::selftest;
use cpsense::sensing::{create_operator, Distribution};
use cpsense::{Result, Shape};

#[derive(Parser)]
#[command(name = "cpsense", version, about = "Compressed sensing of low-CP-rank tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a conditioned CP model.
    Gen(GenArgs),
    /// Print the condition number report of a CP model.
    Kappa {
        #[arg(long)]
        model: PathBuf,
    },
    /// Measure a CP model with a seeded operator.
    Sense(SenseArgs),
    /// Recover a CP model from measurements.
    Recover(RecoverArgs),
    /// Evaluate the measurement-count bounds.
    Bound(BoundArgs),
    /// Log-cardinality of the covering net.
    Cover(CoverArgs),
    /// Sampled isometry probe of a seeded operator.
    RipProbe(RipArgs),
    /// Run a Monte-Carlo sweep from a config file.
    Experiment(ExperimentArgs),
    /// Write a gnuplot script for one or more summary CSV files.
    Plot {
        #[arg(long = "summary", required = true, num_args = 1..)]
        summaries: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the fast invariant checks.
    Selftest,
}

/// Comma-separated mode sizes such as `10,10,10`.
#[derive(Clone, Debug)]
struct Dims(Vec<usize>);

impl std::str::FromStr for Dims {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad dimension `{t}`: {e}")))
            .collect::<std::result::Result<_, _>>()
            .map(Dims)
    }
}

#[derive(Args)]
struct OperatorArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value = "gaussian")]
    dist: Distribution,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    dims: Dims,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "linear")]
    spacing: Spacing,
    #[arg(long)]
    out: PathBuf,
    /// Also write the dense tensor.
    #[arg(long)]
    tensor_out: Option<PathBuf>,
}

#[derive(Args)]
struct SenseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    op_seed: u64,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long)]
    shape: Dims,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Seed of the solver restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "spectral")]
    init: Initialization,
    /// Ground-truth model; adds `mse=` to the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    dims: Dims,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    dims: Dims,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    eps: f64,
}

#[derive(Args)]
struct RipArgs {
    #[arg(long)]
    dims: Dims,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value = "linear")]
    spacing: Spacing,
    /// Operator seed is `mix(seed, 0x5E)`, sample seeds derive from `mix(seed, 0xA7)`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output prefix for `<out>_rows.csv` and `<out>_summary.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Also write a gnuplot script for the summary.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen(a) => {
            let shape = Shape::new(a.dims.0)?;
            let model = generate_conditioned_model(&shape, a.rank, a.kappa, a.seed, a.spacing)?;
            io::write_model(&a.out, &model)?;
            if let Some(p) = a.tensor_out {
                io::write_tensor(&p, &model.reconstruct())?;
            }
        }
        Command::Kappa { model } => {
            print!("{}", kappa(&io::read_model(&model)?).to_key_values());
        }
        Command::Sense(a) => {
            let model = io::read_model(&a.model)?;
            let op = create_operator(a.op.m, &model.shape(), a.op.dist, a.op.alpha, a.seed)?;
            io::write_measurements(&a.out, &op.apply(&model.reconstruct())?)?;
        }
        Command::Recover(a) => {
            let shape = Shape::new(a.shape.0)?;
            let op = create_operator(a.op.m, &shape, a.op.dist, a.op.alpha, a.op_seed)?;
            let y = io::read_measurements(&a.y)?;
            let truth = match &a.truth {
                Some(p) => Some(io::read_model(p)?.reconstruct()),
                None => None,
            };
            let config = RecoveryConfig {
                restarts: a.restarts,
                max_iters: a.max_iters,
                seed: a.seed,
                init: a.init,
                ..RecoveryConfig::new(a.rank)
            };
            let report = recover(&op, &y, &config, truth.as_ref())?;
            io::write_model(&a.out, &report.model)?;
            write_or_print(a.report.as_deref(), &report.to_key_values())?;
        }
        Command::Bound(a) => {
            let inputs = BoundInputs {
                alpha: a.alpha,
                c: a.c,
                delta: a.delta,
                ..BoundInputs::new(a.dims.0, a.rank, a.tau, a.eta)
            };
            let t1 = theorem1_measurement_bound(&inputs)?;
            println!("theorem1={t1:.16e}");
            println!("theorem1_m={}", t1.ceil());
            if inputs.delta.is_some() {
                let p2 = prop2_measurement_bound(&inputs)?;
                println!("prop2={p2:.16e}");
                println!("prop2_m={}", p2.ceil());
            }
        }
        Command::Cover(a) => {
            let v = covering_log_cardinality(&a.dims.0, a.rank, a.tau, a.eps)?;
            println!("log_cardinality={v:.16e}");
        }
        Command::RipProbe(a) => {
            let shape = Shape::new(a.dims.0)?;
            let op = create_operator(
                a.op.m,
                &shape,
                a.op.dist,
                a.op.alpha,
                mix(a.seed, OPERATOR_STREAM),
            )?;
            let result = rip_probe_with(
                &op,
                &shape,
                a.rank,
                a.kappa,
                a.samples,
                mix(a.seed, MODEL_STREAM),
                a.spacing,
                1.0,
            )?;
            print!("{}", result.to_key_values());
        }
        Command::Experiment(a) => {
            let config = ExperimentConfig::from_file(&a.config)?;
            let (rows, summary) = match a.threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| cpsense::Error::InvalidArgument(e.to_string()))?
                    .install(|| run_experiment(&config))?,
                None => run_experiment(&config)?,
            };
            let paths = write_csv(&rows, &summary, &config, &a.out)?;
            println!("rows={}", paths.rows.display());
            println!("summary={}", paths.summary.display());
            if let Some(p) = a.plot {
                emit_plot_script(&[paths.summary.as_path()], &p)?;
                println!("plot={}", p.display());
            }
        }
        Command::Plot { summaries, out } => {
            let refs: Vec<&Path> = summaries.iter().map(PathBuf::as_path).collect();
            emit_plot_script(&refs, &out)?;
        }
        Command::Selftest => {
            let report = selftest();
            print!("{}", report.render());
            if !report.all_passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
