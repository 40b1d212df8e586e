//! Synthetic blob-plus-outliers data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{OcsError, Result};
use crate::types::Dataset;

/// Gaussian inlier blob (label +1) plus uniform outliers (label −1).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataSpec {
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub dim: usize,
    pub inlier_center: Vec<f64>,
    pub inlier_spread: f64,
    pub outlier_box: (f64, f64),
    pub seed: u64,
}

impl ToyDataSpec {
    /// `n` points in 2D: a blob at (0.5, 0.5) with spread 0.15 and 10% uniform
    /// outliers in the unit square.
    pub fn with_total(n: usize, seed: u64) -> Self {
        Self::with_outlier_fraction(n, 0.1, seed)
    }

    pub fn with_outlier_fraction(n: usize, fraction: f64, seed: u64) -> Self {
        let n_outliers = ((n as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
        ToyDataSpec {
            n_inliers: n - n_outliers.min(n),
            n_outliers: n_outliers.min(n),
            dim: 2,
            inlier_center: vec![0.5, 0.5],
            inlier_spread: 0.15,
            outlier_box: (0.0, 1.0),
            seed,
        }
    }

    pub fn total(&self) -> usize {
        self.n_inliers + self.n_outliers
    }

    pub fn validate(&self) -> Result<()> {
        if self.total() < 2 {
            return Err(OcsError::TooFewSamples(self.total()));
        }
        if self.dim == 0 || self.inlier_center.len() != self.dim {
            return Err(OcsError::DimensionMismatch {
                expected: self.dim,
                got: self.inlier_center.len(),
            });
        }
        if !(self.inlier_spread > 0.0 && self.inlier_spread.is_finite()) {
            return Err(OcsError::InvalidRange {
                name: "inlier_spread",
                value: self.inlier_spread,
                expected: "a finite value > 0",
            });
        }
        let (low, high) = self.outlier_box;
        if !(low < high && low.is_finite() && high.is_finite()) {
            return Err(OcsError::InvalidRange {
                name: "outlier_box",
                value: high - low,
                expected: "low < high",
            });
        }
        if self.inlier_center.iter().any(|c| !c.is_finite()) {
            return Err(OcsError::InvalidRange {
                name: "inlier_center",
                value: f64::NAN,
                expected: "finite coordinates",
            });
        }
        Ok(())
    }
}

/// Draws the dataset described by `spec`. A pure function of the spec.
pub fn generate_toy(spec: &ToyDataSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.inlier_spread).expect("spread validated");
    let (low, high) = spec.outlier_box;

    let mut rows: Vec<(Vec<f64>, i8)> = Vec::with_capacity(spec.total());
    for _ in 0..spec.n_inliers {
        let x = spec
            .inlier_center
            .iter()
            .map(|c| c + normal.sample(&mut rng))
            .collect();
        rows.push((x, 1));
    }
    for _ in 0..spec.n_outliers {
        let x = (0..spec.dim).map(|_| rng.random_range(low..high)).collect();
        rows.push((x, -1));
    }
    rows.shuffle(&mut rng);

    let labels = rows.iter().map(|(_, l)| *l).collect();
    let features = rows.into_iter().flat_map(|(x, _)| x).collect();
    Dataset::new(features, spec.dim, Some(labels))
}
