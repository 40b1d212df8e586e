//! Timing and MCC across training-set sizes, optionally against the
//! projected-gradient baseline.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::Result;
use crate::eval::{decide_score, mcc, score, ConfusionCounts};
use crate::reference::{self, QpProblem};
use crate::smo::train;
use crate::toy::{generate_toy, ToyDataSpec};
use crate::types::{Dataset, HyperParams, TrainStatus, TrainedModel};

/// Fraction of each generated dataset held out for MCC.
pub const HOLDOUT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub with_oracle: bool,
    /// Projected-gradient iteration cap for the baseline.
    pub oracle_iters: usize,
    /// Timed repetitions per size; the fastest is reported.
    pub repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            with_oracle: false,
            oracle_iters: 2000,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// Total generated points; the first 80% train, the rest evaluate.
    pub size: usize,
    pub smo_seconds: f64,
    pub oracle_seconds: Option<f64>,
    pub mcc: f64,
    pub iterations: usize,
    pub status: TrainStatus,
    pub error: Option<String>,
}

impl BenchRow {
    fn failed(size: usize, err: String) -> Self {
        BenchRow {
            size,
            smo_seconds: f64::NAN,
            oracle_seconds: None,
            mcc: f64::NAN,
            iterations: 0,
            status: TrainStatus::NoProgress,
            error: Some(err),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub environment: String,
}

pub fn environment_note() -> String {
    #[cfg(feature = "parallel")]
    let threads = format!("rayon threads: {}", rayon::current_num_threads());
    #[cfg(not(feature = "parallel"))]
    let threads = "sequential build".to_string();
    format!(
        "{}-{}, {} logical cpus, {}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        threads
    )
}

/// MCC of `model` on `data`, with on-plane decisions counted as −1.
pub fn holdout_mcc(model: &TrainedModel, data: &Dataset) -> Result<f64> {
    let labels = data.labels().unwrap_or(&[]);
    let predicted = data
        .rows()
        .map(|x| Ok(decide_score(score(model, x)?, model.rho1, model.rho2).as_binary()))
        .collect::<Result<Vec<i8>>>()?;
    Ok(mcc(&ConfusionCounts::from_labels(labels, &predicted)))
}

/// `template` rescaled to `n` points with the same outlier fraction.
pub fn spec_for_size(template: &ToyDataSpec, n: usize) -> ToyDataSpec {
    let total = template.total().max(1) as f64;
    let n_outliers = ((n as f64) * template.n_outliers as f64 / total).round() as usize;
    ToyDataSpec {
        n_inliers: n - n_outliers.min(n),
        n_outliers: n_outliers.min(n),
        ..template.clone()
    }
}

/// Deterministic train/test split: the last 20% of rows are held out.
pub fn split(data: &Dataset) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    let n_test = ((n as f64) * HOLDOUT_FRACTION).round() as usize;
    let cut = n - n_test;
    Ok((data.slice(0, cut)?, data.slice(cut, n)?))
}

fn bench_one(size: usize, params: &HyperParams, template: &ToyDataSpec, opts: &BenchOptions) -> Result<BenchRow> {
    let data = generate_toy(&spec_for_size(template, size))?;
    let (train_set, test_set) = split(&data)?;

    let mut best: Option<TrainedModel> = None;
    for _ in 0..opts.repeats.max(1) {
        let model = train(&train_set, params)?;
        if best
            .as_ref()
            .is_none_or(|b| model.meta.wall_seconds < b.meta.wall_seconds)
        {
            best = Some(model);
        }
    }
    let model = best.expect("at least one repeat");

    let oracle_seconds = if opts.with_oracle {
        let mut fastest = f64::INFINITY;
        for _ in 0..opts.repeats.max(1) {
            let start = Instant::now();
            let prob = QpProblem::from_training(&train_set, params)?;
            reference::solve(&prob, opts.oracle_iters)?;
            fastest = fastest.min(start.elapsed().as_secs_f64());
        }
        Some(fastest)
    } else {
        None
    };

    Ok(BenchRow {
        size,
        smo_seconds: model.meta.wall_seconds,
        oracle_seconds,
        mcc: holdout_mcc(&model, &test_set)?,
        iterations: model.meta.iterations,
        status: model.meta.status,
        error: None,
    })
}

/// One row per size, in the order given. Per-size failures are recorded in
/// the row rather than aborting the run. Sizes run one after another so
/// their timings do not compete for cores.
pub fn run_bench(
    sizes: &[usize],
    params: &HyperParams,
    spec: &ToyDataSpec,
    opts: &BenchOptions,
) -> BenchReport {
    let rows = sizes
        .iter()
        .map(|&size| bench_one(size, params, spec, opts).unwrap_or_else(|e| BenchRow::failed(size, e.to_string())))
        .collect();
    BenchReport {
        rows,
        environment: environment_note(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}

impl BenchReport {
    /// `size,smo_seconds,oracle_seconds,mcc,iterations`; fields of failed
    /// rows and the missing baseline column are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,smo_seconds,oracle_seconds,mcc,iterations\n");
        for r in &self.rows {
            if r.error.is_some() {
                let _ = writeln!(out, "{},,,,", r.size);
            } else {
                let _ = writeln!(
                    out,
                    "{},{:.6},{},{:.6},{}",
                    r.size,
                    r.smo_seconds,
                    fmt_opt(r.oracle_seconds),
                    r.mcc,
                    r.iterations
                );
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>8}  {:>12}  {:>14}  {:>8}  {:>10}  status",
            "size", "smo_seconds", "oracle_seconds", "mcc", "iterations"
        );
        for r in &self.rows {
            match &r.error {
                Some(e) => {
                    let _ = writeln!(out, "{:>8}  error: {e}", r.size);
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:>8}  {:>12.4}  {:>14}  {:>8.4}  {:>10}  {}",
                        r.size,
                        r.smo_seconds,
                        r.oracle_seconds.map_or("-".into(), |s| format!("{s:.4}")),
                        r.mcc,
                        r.iterations,
                        r.status.as_str()
                    );
                }
            }
        }
        let _ = writeln!(out, "# {}", self.environment);
        out
    }
}
