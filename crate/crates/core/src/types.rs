//! Shared domain types: hyperparameters, kernel choice, the γ-space feasible
//! set, datasets and trained models.
//!
//! The training problem is posed over γ = α − ᾱ:
//!
//! ```text
//! minimize    ½ γᵀ K γ
//! subject to  −ε/(ν₂m) ≤ γᵢ ≤ 1/(ν₁m),   Σ γᵢ = 1 − ε
//! ```
//!
//! [`GammaBox`] captures that feasible set for a given sample count and is the
//! single definition every other module uses.

use crate::error::{OcsError, Result};

/// Relative tolerance used to decide whether γᵢ sits on one of its bounds.
pub const BOUND_TOL: f64 = 1e-12;

/// |γᵢ| below this is treated as exactly zero (not a support vector).
pub const ZERO_GAMMA: f64 = 1e-12;

pub const DEFAULT_TOL: f64 = 1e-3;

/// Kernel function k(x, y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// x · y
    Linear,
    /// exp(−gamma ‖x − y‖²)
    Rbf { gamma: f64 },
    /// (x · y + coef0)^degree
    Polynomial { degree: u32, coef0: f64 },
}

impl KernelSpec {
    /// RBF kernel with the usual 1/d width.
    pub fn rbf_for_dim(dim: usize) -> Self {
        KernelSpec::Rbf {
            gamma: 1.0 / dim.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } => {
                if gamma.is_finite() && gamma > 0.0 {
                    Ok(())
                } else {
                    Err(OcsError::InvalidRange {
                        name: "rbf_gamma",
                        value: gamma,
                        expected: "a finite value > 0",
                    })
                }
            }
            KernelSpec::Polynomial { degree, coef0 } => {
                if degree == 0 {
                    return Err(OcsError::InvalidRange {
                        name: "poly_degree",
                        value: 0.0,
                        expected: "an integer >= 1",
                    });
                }
                if !coef0.is_finite() {
                    return Err(OcsError::InvalidRange {
                        name: "poly_coef0",
                        value: coef0,
                        expected: "a finite value",
                    });
                }
                Ok(())
            }
        }
    }

    /// Evaluates k(x, y). Both slices must have the same length.
    ///
    /// The evaluation order is fixed, so `eval(x, y)` and `eval(y, x)` are
    /// bit-identical for every kernel.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let t = a - b;
                        t * t
                    })
                    .sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Polynomial { degree, coef0 } => {
                (dot(x, y) + coef0).powi(degree as i32)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Polynomial { .. } => "polynomial",
        }
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Training hyperparameters. Ranges are checked on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    nu1: f64,
    nu2: f64,
    epsilon: f64,
    kernel: KernelSpec,
    tol: f64,
    max_iter: Option<usize>,
    seed: u64,
}

impl HyperParams {
    pub fn new(nu1: f64, nu2: f64, epsilon: f64, kernel: KernelSpec) -> Result<Self> {
        check_unit("nu1", nu1, false)?;
        check_unit("nu2", nu2, false)?;
        check_unit("epsilon", epsilon, true)?;
        kernel.validate()?;
        Ok(HyperParams {
            nu1,
            nu2,
            epsilon,
            kernel,
            tol: DEFAULT_TOL,
            max_iter: None,
            seed: 0,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(OcsError::InvalidRange {
                name: "tol",
                value: tol,
                expected: "a finite value > 0",
            });
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Result<Self> {
        if max_iter == 0 {
            return Err(OcsError::InvalidRange {
                name: "max_iter",
                value: 0.0,
                expected: "an integer >= 1",
            });
        }
        self.max_iter = Some(max_iter);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        self.kernel = kernel;
        Ok(self)
    }

    pub fn nu1(&self) -> f64 {
        self.nu1
    }
    pub fn nu2(&self) -> f64 {
        self.nu2
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }
    pub fn tol(&self) -> f64 {
        self.tol
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    /// The explicit iteration cap, if one was set.
    pub fn max_iter(&self) -> Option<usize> {
        self.max_iter
    }
    /// Iteration cap for `m` samples: the explicit cap or `100·m`.
    pub fn max_iter_for(&self, m: usize) -> usize {
        self.max_iter.unwrap_or(100 * m.max(1))
    }

    /// The γ-space feasible set for `m` samples.
    pub fn gamma_box(&self, m: usize) -> GammaBox {
        let mf = m as f64;
        GammaBox {
            lower: -self.epsilon / (self.nu2 * mf),
            upper: 1.0 / (self.nu1 * mf),
            target: 1.0 - self.epsilon,
            len: m,
        }
    }
}

fn check_unit(name: &'static str, value: f64, open_top: bool) -> Result<()> {
    let ok = if open_top {
        value > 0.0 && value < 1.0
    } else {
        value > 0.0 && value <= 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(OcsError::InvalidRange {
            name,
            value,
            expected: if open_top { "(0, 1)" } else { "(0, 1]" },
        })
    }
}

/// Checks `p` against a problem with `m` samples.
///
/// The box-and-sum system is feasible iff the sum of upper bounds reaches the
/// target and the sum of lower bounds does not exceed it.
pub fn validate_params(p: &HyperParams, m: usize) -> Result<HyperParams> {
    // Constructors already enforce these; params may also come from a model file.
    check_unit("nu1", p.nu1, false)?;
    check_unit("nu2", p.nu2, false)?;
    check_unit("epsilon", p.epsilon, true)?;
    if !(p.tol.is_finite() && p.tol > 0.0) {
        return Err(OcsError::InvalidRange {
            name: "tol",
            value: p.tol,
            expected: "a finite value > 0",
        });
    }
    p.kernel.validate()?;
    if m == 0 {
        return Err(OcsError::TooFewSamples(0));
    }
    let b = p.gamma_box(m);
    b.check_feasible()?;
    Ok(*p)
}

/// Box `[lower, upper]` per coordinate plus `Σγ = target`, for `len` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBox {
    pub lower: f64,
    pub upper: f64,
    pub target: f64,
    pub len: usize,
}

/// Which of the five γ cases a coordinate falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// γᵢ = −ε/(ν₂m): must lie above the upper plane.
    AtLower,
    /// −ε/(ν₂m) < γᵢ < 0: must lie on the upper plane.
    NegativeInterior,
    /// γᵢ = 0: must lie strictly inside the slab.
    Zero,
    /// 0 < γᵢ < 1/(ν₁m): must lie on the lower plane.
    PositiveInterior,
    /// γᵢ = 1/(ν₁m): must lie below the lower plane.
    AtUpper,
}

impl GammaBox {
    pub fn check_feasible(&self) -> Result<()> {
        let n = self.len as f64;
        if self.lower > self.upper {
            return Err(OcsError::InfeasibleParams(format!(
                "lower bound {} exceeds upper bound {}",
                self.lower, self.upper
            )));
        }
        if n * self.upper < self.target {
            return Err(OcsError::InfeasibleParams(format!(
                "sum of upper bounds {} < 1 - epsilon = {}",
                n * self.upper,
                self.target
            )));
        }
        if n * self.lower > self.target {
            return Err(OcsError::InfeasibleParams(format!(
                "sum of lower bounds {} > 1 - epsilon = {}",
                n * self.lower,
                self.target
            )));
        }
        Ok(())
    }

    pub fn region(&self, g: f64) -> Region {
        if g >= self.upper - BOUND_TOL * self.upper.abs() {
            Region::AtUpper
        } else if g <= self.lower + BOUND_TOL * self.lower.abs() {
            Region::AtLower
        } else if g.abs() < ZERO_GAMMA {
            Region::Zero
        } else if g > 0.0 {
            Region::PositiveInterior
        } else {
            Region::NegativeInterior
        }
    }

    pub fn clamp(&self, g: f64) -> f64 {
        g.clamp(self.lower, self.upper)
    }

    /// Max box violation and absolute sum error of `gamma`.
    pub fn violation(&self, gamma: &[f64]) -> (f64, f64) {
        let box_err = gamma
            .iter()
            .map(|&g| (self.lower - g).max(g - self.upper).max(0.0))
            .fold(0.0, f64::max);
        let sum: f64 = gamma.iter().sum();
        (box_err, (sum - self.target).abs())
    }

    /// Deterministic feasible starting point.
    ///
    /// Starts from the uniform split `target/len`; coordinates pushed outside
    /// the box are clamped and the remaining deficit is handed out greedily in
    /// index order to coordinates that still have room.
    pub fn uniform_start(&self) -> Result<Vec<f64>> {
        self.check_feasible()?;
        let n = self.len;
        let mut g = vec![self.clamp(self.target / n as f64); n];
        let mut deficit = self.target - g.iter().sum::<f64>();
        if deficit != 0.0 {
            for x in g.iter_mut() {
                if deficit == 0.0 {
                    break;
                }
                let room = if deficit > 0.0 {
                    self.upper - *x
                } else {
                    self.lower - *x
                };
                let take = if deficit > 0.0 {
                    room.min(deficit)
                } else {
                    room.max(deficit)
                };
                *x += take;
                deficit -= take;
            }
        }
        Ok(g)
    }
}

/// Feature matrix (row-major) with optional ±1 labels used only for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    rows: usize,
    dim: usize,
    labels: Option<Vec<i8>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Option<Vec<i8>>) -> Result<Self> {
        if dim == 0 {
            return Err(OcsError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if !features.len().is_multiple_of(dim) {
            return Err(OcsError::DimensionMismatch {
                expected: dim,
                got: features.len() % dim,
            });
        }
        let rows = features.len() / dim;
        if rows < 2 {
            return Err(OcsError::TooFewSamples(rows));
        }
        if let Some(l) = &labels {
            if l.len() != rows {
                return Err(OcsError::DimensionMismatch {
                    expected: rows,
                    got: l.len(),
                });
            }
            if let Some(pos) = l.iter().position(|&v| v != 1 && v != -1) {
                return Err(OcsError::Parse {
                    row: pos + 1,
                    col: dim + 1,
                    msg: format!("label {} is not +1 or -1", l[pos]),
                });
            }
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(OcsError::NonFiniteValue {
                row: pos / dim + 1,
                col: pos % dim + 1,
            });
        }
        Ok(Dataset {
            features,
            rows,
            dim,
            labels,
            feature_names: None,
        })
    }

    /// Builds a dataset from rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<i8>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(OcsError::RaggedRows {
                    row: i + 1,
                    expected: dim,
                    got: r.len(),
                });
            }
            features.extend_from_slice(r);
        }
        Dataset::new(features, dim, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(OcsError::DimensionMismatch {
                expected: self.dim,
                got: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.rows
    }
    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }
    pub fn features(&self) -> &[f64] {
        &self.features
    }
    pub fn labels(&self) -> Option<&[i8]> {
        self.labels.as_deref()
    }
    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Rows `[start, end)` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Result<Dataset> {
        let end = end.min(self.rows);
        let features = self.features[start * self.dim..end * self.dim].to_vec();
        let labels = self.labels.as_ref().map(|l| l[start..end].to_vec());
        Dataset::new(features, self.dim, labels)
    }
}

/// How a training run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    Converged,
    MaxIterReached,
    NoProgress,
}

impl TrainStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrainStatus::Converged => "converged",
            TrainStatus::MaxIterReached => "max_iter",
            TrainStatus::NoProgress => "no_progress",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "converged" => Some(TrainStatus::Converged),
            "max_iter" => Some(TrainStatus::MaxIterReached),
            "no_progress" => Some(TrainStatus::NoProgress),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainMeta {
    pub iterations: usize,
    /// Largest KKT violation among the points still violating at exit.
    pub max_violation: f64,
    pub wall_seconds: f64,
    pub status: TrainStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub features: Vec<f64>,
    pub weight: f64,
}

/// Immutable inference artifact produced by training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub support_vectors: Vec<SupportVector>,
    pub rho1: f64,
    pub rho2: f64,
    pub dim: usize,
    pub params: HyperParams,
    pub meta: TrainMeta,
}

impl TrainedModel {
    pub fn kernel(&self) -> KernelSpec {
        self.params.kernel()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nu1: f64, nu2: f64, eps: f64) -> HyperParams {
        HyperParams::new(nu1, nu2, eps, KernelSpec::Linear).unwrap()
    }

    #[test]
    fn default_settings_are_valid() {
        assert!(validate_params(&params(0.5, 0.01, 2.0 / 3.0), 1000).is_ok());
        assert!(validate_params(&params(0.2, 0.08, 0.5), 2000).is_ok());
        assert!(validate_params(&params(1.0, 1.0, 0.5), 10).is_ok());
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            HyperParams::new(1.5, 0.1, 0.5, KernelSpec::Linear),
            Err(OcsError::InvalidRange { name: "nu1", .. })
        ));
        assert!(HyperParams::new(0.5, 0.0, 0.5, KernelSpec::Linear).is_err());
        assert!(HyperParams::new(0.5, 0.1, 1.0, KernelSpec::Linear).is_err());
        assert!(HyperParams::new(0.5, 0.1, 0.0, KernelSpec::Linear).is_err());
        assert!(params(0.5, 0.1, 0.5).with_tol(0.0).is_err());
        assert!(params(0.5, 0.1, 0.5).with_max_iter(0).is_err());
        assert!(HyperParams::new(0.5, 0.1, 0.5, KernelSpec::Rbf { gamma: -1.0 }).is_err());
    }

    #[test]
    fn infeasible_box_reported() {
        let b = GammaBox {
            lower: 0.0,
            upper: 0.1,
            target: 0.5,
            len: 3,
        };
        assert!(matches!(b.check_feasible(), Err(OcsError::InfeasibleParams(_))));
    }

    #[test]
    fn uniform_start_examples() {
        let g = params(0.5, 0.01, 2.0 / 3.0).gamma_box(3).uniform_start().unwrap();
        for &x in &g {
            assert!((x - 1.0 / 9.0).abs() < 1e-15);
        }
        let g = params(0.7, 0.3, 0.5).gamma_box(2).uniform_start().unwrap();
        assert_eq!(g, vec![0.25, 0.25]);
    }

    #[test]
    fn uniform_start_feasible_or_rejected() {
        // uniform 0.2 exceeds the upper bound 0.15 on a shifted box
        let b = GammaBox {
            lower: 0.1,
            upper: 0.15,
            target: 0.6,
            len: 4,
        };
        let g = b.uniform_start().unwrap();
        let (box_err, sum_err) = b.violation(&g);
        assert_eq!(box_err, 0.0);
        assert!(sum_err < 1e-12);
        // uniform below the lower bound
        let b = GammaBox {
            lower: 0.2,
            upper: 0.5,
            target: 0.9,
            len: 4,
        };
        let g = b.uniform_start().unwrap();
        let (box_err, sum_err) = b.violation(&g);
        assert_eq!(box_err, 0.0);
        assert!(sum_err < 1e-12);
        // sum of upper bounds below the target
        let b = GammaBox {
            lower: -1.0,
            upper: 0.3,
            target: 1.0,
            len: 3,
        };
        assert!(matches!(b.uniform_start(), Err(OcsError::InfeasibleParams(_))));
    }

    #[test]
    fn regions() {
        let b = params(0.5, 0.1, 0.5).gamma_box(10);
        assert_eq!(b.region(b.upper), Region::AtUpper);
        assert_eq!(b.region(b.lower), Region::AtLower);
        assert_eq!(b.region(0.0), Region::Zero);
        assert_eq!(b.region(1e-13), Region::Zero);
        assert_eq!(b.region(b.upper / 2.0), Region::PositiveInterior);
        assert_eq!(b.region(b.lower / 2.0), Region::NegativeInterior);
    }

    #[test]
    fn dataset_invariants() {
        assert!(matches!(
            Dataset::new(vec![1.0, 2.0], 2, None),
            Err(OcsError::TooFewSamples(1))
        ));
        assert!(Dataset::new(vec![1.0, 2.0, 3.0], 2, None).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN, 3.0, 4.0], 2, None).is_err());
        assert!(Dataset::new(vec![1.0, 2.0, 3.0, 4.0], 2, Some(vec![1, 0])).is_err());
        let d = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], 2, Some(vec![1, -1])).unwrap();
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn validate_is_pure() {
        let p = params(0.3, 0.2, 0.4);
        assert_eq!(validate_params(&p, 50).unwrap(), validate_params(&p, 50).unwrap());
    }
}
