//! Test-side reimplementations used as independent checkers.
#![allow(dead_code)]

use ocssvm::{Dataset, HyperParams, KernelSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Kernel value straight from the textbook formula, no shared helpers.
pub fn kernel(spec: KernelSpec, x: &[f64], y: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut d2 = 0.0;
    for k in 0..x.len() {
        dot += x[k] * y[k];
        d2 += (x[k] - y[k]) * (x[k] - y[k]);
    }
    match spec {
        KernelSpec::Linear => dot,
        KernelSpec::Rbf { gamma } => (-gamma * d2).exp(),
        KernelSpec::Polynomial { degree, coef0 } => {
            let mut p = 1.0;
            for _ in 0..degree {
                p *= dot + coef0;
            }
            p
        }
    }
}

pub fn gram(data: &Dataset, spec: KernelSpec) -> Vec<Vec<f64>> {
    let m = data.len();
    (0..m)
        .map(|i| (0..m).map(|j| kernel(spec, data.row(i), data.row(j))).collect())
        .collect()
}

/// sᵢ = Σⱼ γⱼ k(xⱼ, xᵢ) by a plain double loop.
pub fn scores(data: &Dataset, spec: KernelSpec, gamma: &[f64]) -> Vec<f64> {
    (0..data.len())
        .map(|i| {
            (0..data.len())
                .map(|j| gamma[j] * kernel(spec, data.row(j), data.row(i)))
                .sum()
        })
        .collect()
}

pub fn quad(k: &[Vec<f64>], g: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..g.len() {
        for j in 0..g.len() {
            total += g[i] * k[i][j] * g[j];
        }
    }
    0.5 * total
}

pub fn random_data(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Dataset {
    let features = (0..m * d).map(|_| StandardNormal.sample(rng)).collect();
    Dataset::new(features, d, None).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng, which: usize, d: usize) -> KernelSpec {
    match which % 3 {
        0 => KernelSpec::Linear,
        1 => KernelSpec::Rbf {
            gamma: rng.random_range(0.2..2.0) / d as f64,
        },
        _ => KernelSpec::Polynomial {
            degree: rng.random_range(2..=3),
            coef0: rng.random_range(0.0..1.0),
        },
    }
}

pub fn random_params(rng: &mut ChaCha8Rng, kernel: KernelSpec) -> HyperParams {
    HyperParams::new(
        rng.random_range(0.05..1.0),
        rng.random_range(0.01..1.0),
        rng.random_range(0.05..0.95),
        kernel,
    )
    .unwrap()
}

/// Violation of point `i`'s γ case, from scratch.
///
/// Cases: γ = 0 inside the slab; 0 < γ < upper on the lower plane;
/// γ = upper below it; lower < γ < 0 on the upper plane; γ = lower above it.
pub fn case_violation(g: f64, s: f64, lower: f64, upper: f64, rho1: f64, rho2: f64) -> f64 {
    let at_upper = g >= upper - 1e-12 * upper.abs();
    let at_lower = g <= lower + 1e-12 * lower.abs();
    if at_upper {
        (s - rho1).max(0.0)
    } else if at_lower {
        (rho2 - s).max(0.0)
    } else if g.abs() < 1e-12 {
        (rho1 - s).max(s - rho2).max(0.0)
    } else if g > 0.0 {
        (s - rho1).abs()
    } else {
        (s - rho2).abs()
    }
}
