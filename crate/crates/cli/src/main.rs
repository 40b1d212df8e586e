//! `ocssvm` command-line tool: train, predict, bench, plot, gen-data.
//!
//! Exit codes: 0 success, 2 usage or parameter error, 3 data error,
//! 4 training or internal error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ocssvm::bench::{run_bench, BenchOptions};
use ocssvm::eval::{decide_score, emit_plot_data};
use ocssvm::io::{load_csv, load_libsvm, CsvOptions};
use ocssvm::model_io::{load_model, save_model};
use ocssvm::toy::{generate_toy, ToyDataSpec};
use ocssvm::{score, train, Dataset, HyperParams, KernelSpec, OcsError, TrainStatus};

const USAGE: u8 = 2;
const DATA: u8 = 3;
const TRAINING: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "ocssvm", version, about = "One-class slab SVM trained by SMO")]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write it to a file.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Model output path.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Label rows with a trained model: `label,score` per row.
    Predict {
        #[arg(long, short)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Print only the raw scores.
        #[arg(long)]
        scores_only: bool,
        /// Write predictions here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Time training and measure held-out MCC across dataset sizes.
    Bench {
        /// Comma-separated total sizes; 20% of each is held out.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1)]
        sizes: Vec<usize>,
        /// Also time the dense projected-gradient baseline.
        #[arg(long)]
        with_oracle: bool,
        /// Iteration cap for the baseline.
        #[arg(long, default_value_t = 2000)]
        oracle_iters: usize,
        /// Timed repetitions per size; the fastest is kept.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[command(flatten)]
        toy: ToyArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Write the CSV report here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write grid and point scores for drawing a 2D model.
    Plot {
        #[arg(long, short)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Grid points per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Generate the synthetic blob-plus-outliers dataset as CSV (label last).
    GenData {
        /// Total number of points.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        toy: ToyArgs,
        /// Write here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelKind {
    Linear,
    Rbf,
    Polynomial,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Dataset path.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// CSV: the first line is a header.
    #[arg(long)]
    skip_header: bool,
    /// CSV: there is no trailing label column.
    #[arg(long)]
    no_labels: bool,
}

#[derive(Args, Debug)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    nu1: f64,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    nu2: f64,
    #[arg(long, default_value_t = 0.6667, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = KernelKind::Linear)]
    kernel: KernelKind,
    /// RBF width; defaults to 1/d.
    #[arg(long, allow_negative_numbers = true)]
    rbf_gamma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    coef0: f64,
    /// KKT tolerance.
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    tol: f64,
    /// Iteration cap; defaults to 100 × training size.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed; `bench` also uses it to generate its data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ToyArgs {
    #[arg(long, default_value_t = 0.1)]
    outlier_fraction: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.15)]
    spread: f64,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn fail(code: u8, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

/// Exit code for a library error: data problems 3, everything else 4.
fn classify(e: OcsError) -> Failure {
    let code = if e.is_data_error() { DATA } else { TRAINING };
    fail(code, e)
}

fn usage(e: OcsError) -> Failure {
    fail(USAGE, e)
}

impl ParamArgs {
    /// Builds the parameters for data of dimension `dim`. With `dim = None`
    /// only the ranges are checked (the RBF default depends on the data).
    fn build(&self, dim: Option<usize>) -> Outcome<HyperParams> {
        let kernel = match self.kernel {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Rbf => match (self.rbf_gamma, dim) {
                (Some(gamma), _) => KernelSpec::Rbf { gamma },
                (None, Some(d)) => KernelSpec::rbf_for_dim(d),
                (None, None) => KernelSpec::Rbf { gamma: 1.0 },
            },
            KernelKind::Polynomial => KernelSpec::Polynomial {
                degree: self.degree,
                coef0: self.coef0,
            },
        };
        let mut p = HyperParams::new(self.nu1, self.nu2, self.epsilon, kernel)
            .and_then(|p| p.with_tol(self.tol))
            .map_err(usage)?
            .with_seed(self.seed);
        if let Some(n) = self.max_iter {
            p = p.with_max_iter(n).map_err(usage)?;
        }
        Ok(p)
    }
}

impl ToyArgs {
    fn spec(&self, n: usize, seed: u64) -> Outcome<ToyDataSpec> {
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(fail(
                USAGE,
                anyhow!("--outlier-fraction must lie in [0, 1], got {}", self.outlier_fraction),
            ));
        }
        let mut spec = ToyDataSpec::with_outlier_fraction(n, self.outlier_fraction, seed);
        spec.dim = self.dim;
        spec.inlier_center = vec![0.5; self.dim];
        spec.inlier_spread = self.spread;
        spec.validate().map_err(usage)?;
        Ok(spec)
    }
}

fn load(input: &InputArgs) -> Outcome<Dataset> {
    match input.format {
        Format::Csv => load_csv(
            &input.input,
            CsvOptions {
                has_labels: !input.no_labels,
                skip_header: input.skip_header,
            },
        ),
        Format::Libsvm => load_libsvm(&input.input),
    }
    .map_err(|e| {
        let code = if e.is_data_error() { DATA } else { TRAINING };
        fail(code, anyhow!(e).context(format!("cannot load {}", input.input.display())))
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(|e| fail(DATA, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| fail(TRAINING, e)),
    }
}

struct Log {
    quiet: bool,
}

impl Log {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn cmd_train(log: &Log, input: &InputArgs, params: &ParamArgs, out: &Path) -> Outcome {
    params.build(None)?;
    let data = load(input)?;
    let p = params.build(Some(data.dim()))?;
    let model = train(&data, &p).map_err(classify)?;
    save_model(&model, out).map_err(classify)?;
    let meta = &model.meta;
    log.say(format!(
        "trained on {} points: {} iterations, max KKT violation {:.3e}, {:.3}s, status {}",
        data.len(),
        meta.iterations,
        meta.max_violation,
        meta.wall_seconds,
        meta.status.as_str()
    ));
    match meta.status {
        TrainStatus::Converged => {}
        TrainStatus::MaxIterReached => {
            eprintln!("warning: iteration cap reached before convergence; model written anyway")
        }
        TrainStatus::NoProgress => {
            eprintln!("warning: no working pair could make progress; model written anyway")
        }
    }
    log.say(format!("model written to {}", out.display()));
    Ok(())
}

fn cmd_predict(log: &Log, model: &Path, input: &InputArgs, scores_only: bool, out: Option<&Path>) -> Outcome {
    let model = load_model(model).map_err(classify)?;
    let data = load(input)?;
    if data.dim() != model.dim {
        return Err(fail(
            DATA,
            anyhow!(
                "{} has {} features per row but the model expects {}",
                input.input.display(),
                data.dim(),
                model.dim
            ),
        ));
    }
    let mut text = String::new();
    for x in data.rows() {
        let s = score(&model, x).map_err(classify)?;
        if scores_only {
            let _ = writeln!(text, "{s:?}");
        } else {
            let label = decide_score(s, model.rho1, model.rho2).as_i8();
            let _ = writeln!(text, "{label},{s:?}");
        }
    }
    write_output(out, &text)?;
    log.say(format!("predicted {} rows", data.len()));
    Ok(())
}

fn cmd_bench(
    log: &Log,
    sizes: &[usize],
    opts: BenchOptions,
    toy: &ToyArgs,
    params: &ParamArgs,
    out: Option<&Path>,
) -> Outcome {
    if sizes.is_empty() {
        return Err(fail(USAGE, anyhow!("--sizes needs at least one size")));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(fail(USAGE, anyhow!("--sizes must be strictly increasing")));
    }
    let p = params.build(Some(toy.dim))?;
    let spec = toy.spec(sizes[sizes.len() - 1], params.seed)?;
    let report = run_bench(sizes, &p, &spec, &opts);
    write_output(out, &report.to_csv())?;
    log.say(report.to_table());
    if let Some(bad) = report.rows.iter().find(|r| r.error.is_some()) {
        return Err(fail(
            TRAINING,
            anyhow!("size {}: {}", bad.size, bad.error.as_deref().unwrap_or("")),
        ));
    }
    Ok(())
}

fn cmd_plot(log: &Log, model: &Path, input: &InputArgs, grid: usize, out: &Path) -> Outcome {
    if grid == 0 {
        return Err(fail(USAGE, anyhow!("--grid must be at least 1")));
    }
    let model = load_model(model).map_err(classify)?;
    let data = load(input)?;
    emit_plot_data(&model, &data, grid, out).map_err(classify)?;
    log.say(format!("plot data written to {}", out.display()));
    Ok(())
}

fn cmd_gen_data(log: &Log, n: usize, seed: u64, toy: &ToyArgs, out: Option<&Path>) -> Outcome {
    let spec = toy.spec(n, seed)?;
    let data = generate_toy(&spec).map_err(usage)?;
    let labels = data.labels().unwrap_or(&[]);
    let mut text = String::new();
    for (x, l) in data.rows().zip(labels) {
        for v in x {
            let _ = write!(text, "{v:?},");
        }
        let _ = writeln!(text, "{l}");
    }
    write_output(out, &text)?;
    log.say(format!(
        "generated {} inliers + {} outliers in {}D: center {:?}, spread {}, outliers uniform in [{}, {}), seed {}",
        spec.n_inliers, spec.n_outliers, spec.dim, spec.inlier_center, spec.inlier_spread, spec.outlier_box.0,
        spec.outlier_box.1, spec.seed
    ));
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let log = Log { quiet: cli.quiet };
    match &cli.command {
        Command::Train { input, params, out } => cmd_train(&log, input, params, out),
        Command::Predict {
            model,
            input,
            scores_only,
            out,
        } => cmd_predict(&log, model, input, *scores_only, out.as_deref()),
        Command::Bench {
            sizes,
            with_oracle,
            oracle_iters,
            repeats,
            toy,
            params,
            out,
        } => cmd_bench(
            &log,
            sizes,
            BenchOptions {
                with_oracle: *with_oracle,
                oracle_iters: *oracle_iters,
                repeats: *repeats,
            },
            toy,
            params,
            out.as_deref(),
        ),
        Command::Plot {
            model,
            input,
            grid,
            out,
        } => cmd_plot(&log, model, input, *grid, out),
        Command::GenData { n, seed, toy, out } => cmd_gen_data(&log, *n, *seed, toy, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            if f.code == USAGE {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(f.code)
        }
    }
}
