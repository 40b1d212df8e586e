//! Inference with a trained slab, Matthews correlation, and plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{OcsError, Result};
use crate::par;
use crate::types::{Dataset, KernelSpec, TrainedModel};

/// Sign of `(s − ρ₁)(ρ₂ − s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// Strictly inside the slab: target class.
    Inside,
    /// Below the lower plane or above the upper plane.
    Outside,
    /// Exactly on a plane.
    OnPlane,
}

impl Decision {
    pub fn as_i8(self) -> i8 {
        match self {
            Decision::Inside => 1,
            Decision::Outside => -1,
            Decision::OnPlane => 0,
        }
    }

    /// Binary label with on-plane points counted as outside.
    pub fn as_binary(self) -> i8 {
        match self {
            Decision::Inside => 1,
            _ => -1,
        }
    }
}

/// Kernel expansion Σ γᵢ k(xᵢ, x) over the model's support vectors.
pub fn score(model: &TrainedModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim {
        return Err(OcsError::DimensionMismatch {
            expected: model.dim,
            got: x.len(),
        });
    }
    let kernel = model.kernel();
    Ok(model
        .support_vectors
        .iter()
        .fold(0.0, |acc, sv| acc + sv.weight * kernel.eval(&sv.features, x)))
}

pub fn decide_score(score: f64, rho1: f64, rho2: f64) -> Decision {
    let product = (score - rho1) * (rho2 - score);
    if score > rho1 && score < rho2 {
        Decision::Inside
    } else if product == 0.0 || score == rho1 || score == rho2 {
        Decision::OnPlane
    } else {
        Decision::Outside
    }
}

pub fn decide(model: &TrainedModel, x: &[f64]) -> Result<Decision> {
    Ok(decide_score(score(model, x)?, model.rho1, model.rho2))
}

/// Scores every row of `data`.
pub fn score_all(model: &TrainedModel, data: &Dataset) -> Result<Vec<f64>> {
    if data.dim() != model.dim {
        return Err(OcsError::DimensionMismatch {
            expected: model.dim,
            got: data.dim(),
        });
    }
    par::map_range(data.len(), |i| score(model, data.row(i)))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Counts with +1 as the positive class; `predicted` entries of 0 count as −1.
    pub fn from_labels(truth: &[i8], predicted: &[i8]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t == 1, p == 1) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Matthews correlation coefficient; 0 whenever a marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    // paired so the value is unchanged under (tp, fp) <-> (tn, fn)
    let denom = ((tp + fp) * (tn + fn_)) * ((tp + fn_) * (tn + fp));
    if denom == 0.0 {
        return 0.0;
    }
    ((tp * tn - fp * fn_) / denom.sqrt()).clamp(-1.0, 1.0)
}

/// `w · x = offset` in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl Line {
    pub fn direction(&self) -> [f64; 2] {
        [-self.normal[1], self.normal[0]]
    }
}

/// Everything needed to draw a trained 2D slab.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    /// `(x, y, score)` over the bounding-box grid, row by row.
    pub grid: Vec<[f64; 3]>,
    /// `(x, y, score)` for each training point.
    pub points: Vec<[f64; 3]>,
    pub rho1: f64,
    pub rho2: f64,
    /// Lower and upper planes, for the linear kernel only.
    pub lines: Option<(Line, Line)>,
}

/// Computes grid scores over the data's bounding box (5% margin) and the
/// training-point scores.
pub fn plot_data(model: &TrainedModel, data: &Dataset, grid_resolution: usize) -> Result<PlotData> {
    if data.dim() != 2 {
        return Err(OcsError::NotTwoDimensional(data.dim()));
    }
    if model.dim != 2 {
        return Err(OcsError::NotTwoDimensional(model.dim));
    }
    if grid_resolution == 0 {
        return Err(OcsError::InvalidRange {
            name: "grid_resolution",
            value: 0.0,
            expected: "an integer >= 1",
        });
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for r in data.rows() {
        for k in 0..2 {
            lo[k] = lo[k].min(r[k]);
            hi[k] = hi[k].max(r[k]);
        }
    }
    for k in 0..2 {
        let pad = 0.05 * (hi[k] - lo[k]).max(1e-9);
        lo[k] -= pad;
        hi[k] += pad;
    }
    let axis = |k: usize, i: usize| {
        if grid_resolution == 1 {
            0.5 * (lo[k] + hi[k])
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (grid_resolution - 1) as f64
        }
    };
    let n = grid_resolution;
    let grid = par::map_range(n * n, |idx| {
        let (iy, ix) = (idx / n, idx % n);
        let (x, y) = (axis(0, ix), axis(1, iy));
        let s = score(model, &[x, y]).expect("dimension checked");
        [x, y, s]
    });
    let points = par::map_range(data.len(), |i| {
        let r = data.row(i);
        [r[0], r[1], score(model, r).expect("dimension checked")]
    });
    let lines = match model.kernel() {
        KernelSpec::Linear => {
            let mut w = [0.0; 2];
            for sv in &model.support_vectors {
                w[0] += sv.weight * sv.features[0];
                w[1] += sv.weight * sv.features[1];
            }
            Some((
                Line {
                    normal: w,
                    offset: model.rho1,
                },
                Line {
                    normal: w,
                    offset: model.rho2,
                },
            ))
        }
        _ => None,
    };
    Ok(PlotData {
        grid,
        points,
        rho1: model.rho1,
        rho2: model.rho2,
        lines,
    })
}

impl PlotData {
    /// CSV with a `#`-comment preamble holding the plane offsets (and, for the
    /// linear kernel, the line equations), then `kind,x,y,score` rows where
    /// `kind` is `grid` or `point`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# rho1={:?}", self.rho1);
        let _ = writeln!(out, "# rho2={:?}", self.rho2);
        if let Some((lower, upper)) = &self.lines {
            for (name, l) in [("lower_line", lower), ("upper_line", upper)] {
                let _ = writeln!(
                    out,
                    "# {name}: {:?}*x + {:?}*y = {:?}",
                    l.normal[0], l.normal[1], l.offset
                );
            }
        }
        out.push_str("kind,x,y,score\n");
        for [x, y, s] in &self.grid {
            let _ = writeln!(out, "grid,{x:?},{y:?},{s:?}");
        }
        for [x, y, s] in &self.points {
            let _ = writeln!(out, "point,{x:?},{y:?},{s:?}");
        }
        out
    }
}

/// Writes [`PlotData::to_csv`] for `model` over `data` to `out_path`.
pub fn emit_plot_data(
    model: &TrainedModel,
    data: &Dataset,
    grid_resolution: usize,
    out_path: &Path,
) -> Result<PlotData> {
    let plot = plot_data(model, data, grid_resolution)?;
    fs::write(out_path, plot.to_csv()).map_err(|e| OcsError::io(out_path, e))?;
    Ok(plot)
}
