//! Dense projected-gradient solver for the γ-space dual.
//!
//! Slow and simple on purpose: it is the correctness oracle and timing
//! baseline for the SMO trainer and shares none of its code. Kernel values
//! come from [`dense_gram`], which evaluates kernels directly.

use std::time::Instant;

use crate::error::{OcsError, Result};
use crate::par;
use crate::types::{Dataset, HyperParams, KernelSpec};

/// Dense `m×m` Gram matrix, row-major, with the box-and-sum constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    gram: Vec<f64>,
    m: usize,
    pub lower: f64,
    pub upper: f64,
    pub sum_target: f64,
}

impl QpProblem {
    pub fn new(gram: Vec<f64>, m: usize, lower: f64, upper: f64, sum_target: f64) -> Result<Self> {
        if gram.len() != m * m {
            return Err(OcsError::DimensionMismatch {
                expected: m * m,
                got: gram.len(),
            });
        }
        for i in 0..m {
            for j in 0..i {
                let (x, y) = (gram[i * m + j], gram[j * m + i]);
                if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
                    return Err(OcsError::Infeasible(format!("Gram matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        check_feasible(m, lower, upper, sum_target)?;
        Ok(QpProblem {
            gram,
            m,
            lower,
            upper,
            sum_target,
        })
    }

    /// The training problem for `data` under `params`.
    pub fn from_training(data: &Dataset, params: &HyperParams) -> Result<Self> {
        let m = data.len();
        let bx = params.gamma_box(m);
        QpProblem::new(dense_gram(data, params.kernel()), m, bx.lower, bx.upper, bx.target)
    }

    pub fn len(&self) -> usize {
        self.m
    }
    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let gram = &self.gram;
        par::map_range(m, |i| {
            gram[i * m..(i + 1) * m]
                .iter()
                .zip(x)
                .map(|(k, v)| k * v)
                .sum()
        })
    }

    /// Largest eigenvalue of the Gram matrix by power iteration.
    pub fn max_eigenvalue(&self, steps: usize) -> f64 {
        let m = self.m;
        let mut v: Vec<f64> = (0..m).map(|i| 1.0 + (i % 7) as f64 * 0.01).collect();
        let mut lambda = 0.0;
        for _ in 0..steps {
            let w = self.matvec(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let vnorm2 = v.iter().map(|x| x * x).sum::<f64>();
            lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
            v = w.into_iter().map(|x| x / norm).collect();
        }
        // power iteration approaches λ_max from below; pad for a safe step
        lambda.max(0.0) * 1.01
    }
}

fn check_feasible(m: usize, lower: f64, upper: f64, target: f64) -> Result<()> {
    let n = m as f64;
    if lower.is_nan() || upper.is_nan() || lower > upper || n * lower > target || n * upper < target {
        Err(OcsError::Infeasible(format!(
            "[{lower}, {upper}]^{m} cannot sum to {target}"
        )))
    } else {
        Ok(())
    }
}

/// k(xᵢ, xⱼ) for every pair, evaluated directly from the kernel formula.
pub fn dense_gram(data: &Dataset, kernel: KernelSpec) -> Vec<f64> {
    let m = data.len();
    let rows = par::map_coarse(m, |i| {
        let xi = data.row(i);
        (0..m)
            .map(|j| {
                let xj = data.row(j);
                match kernel {
                    KernelSpec::Linear => xi.iter().zip(xj).map(|(a, b)| a * b).sum(),
                    KernelSpec::Rbf { gamma } => {
                        let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                        (-gamma * d2).exp()
                    }
                    KernelSpec::Polynomial { degree, coef0 } => {
                        let d: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
                        (d + coef0).powi(degree as i32)
                    }
                }
            })
            .collect::<Vec<f64>>()
    });
    rows.concat()
}

/// ½ γᵀKγ by explicit double loop.
pub fn dense_objective(gram: &[f64], gamma: &[f64]) -> Result<f64> {
    let m = gamma.len();
    if gram.len() != m * m {
        return Err(OcsError::DimensionMismatch {
            expected: m * m,
            got: gram.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += gram[i * m + j] * gamma[j];
        }
        total += gamma[i] * row;
    }
    Ok(0.5 * total)
}

/// Euclidean projection onto `{x : lower ≤ xᵢ ≤ upper, Σxᵢ = sum_target}`.
///
/// The projection is `clamp(v − θ)` for the unique shift θ matching the sum.
/// θ is bracketed by bisection, then solved exactly on the resulting free set.
/// Inputs already feasible to 1e-12 are returned unchanged.
pub fn project_box_simplex(v: &[f64], lower: f64, upper: f64, sum_target: f64) -> Result<Vec<f64>> {
    let m = v.len();
    check_feasible(m, lower, upper, sum_target)?;
    if m == 0 {
        return Ok(Vec::new());
    }
    let in_box = v.iter().all(|&x| x >= lower && x <= upper);
    if in_box && (v.iter().sum::<f64>() - sum_target).abs() <= 1e-12 {
        return Ok(v.to_vec());
    }
    let total = |theta: f64| -> f64 { v.iter().map(|&x| (x - theta).clamp(lower, upper)).sum() };

    // total(θ) is non-increasing in θ
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = vmin - upper - 1.0;
    let mut hi = vmax - lower + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > sum_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);

    // exact shift on the free set identified by the bracket
    let mut fixed_sum = 0.0;
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    for &x in v {
        let y = x - theta;
        if y <= lower {
            fixed_sum += lower;
        } else if y >= upper {
            fixed_sum += upper;
        } else {
            free_sum += x;
            free_n += 1;
        }
    }
    let theta = if free_n > 0 {
        let exact = (free_sum - (sum_target - fixed_sum)) / free_n as f64;
        if (lo..=hi).contains(&exact) || (exact - theta).abs() < 1e-9 {
            exact
        } else {
            theta
        }
    } else {
        theta
    };
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).clamp(lower, upper)).collect();

    // absorb the last rounding residue in coordinates with room
    let mut residue = sum_target - out.iter().sum::<f64>();
    for x in out.iter_mut() {
        if residue == 0.0 {
            break;
        }
        let next = (*x + residue).clamp(lower, upper);
        residue -= next - *x;
        *x = next;
    }
    Ok(out)
}

/// Output of [`solve_projected_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub gamma: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
}

/// Projected gradient descent `γ ← P(γ − step·Kγ)` from the projected uniform
/// point, stopping after `iters` steps or once ‖Δγ‖∞ < 1e-10.
pub fn solve_projected_gradient(prob: &QpProblem, step: f64, iters: usize) -> Result<QpSolution> {
    let start = Instant::now();
    if !(step > 0.0 && step.is_finite()) {
        return Err(OcsError::InvalidRange {
            name: "step",
            value: step,
            expected: "a finite value > 0",
        });
    }
    let m = prob.m;
    let uniform = vec![prob.sum_target / m as f64; m];
    let mut gamma = project_box_simplex(&uniform, prob.lower, prob.upper, prob.sum_target)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < iters {
        let grad = prob.matvec(&gamma);
        let trial: Vec<f64> = gamma.iter().zip(&grad).map(|(g, d)| g - step * d).collect();
        let next = project_box_simplex(&trial, prob.lower, prob.upper, prob.sum_target)?;
        let delta = next
            .iter()
            .zip(&gamma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        gamma = next;
        iterations += 1;
        if delta < 1e-10 {
            converged = true;
            break;
        }
    }
    let objective = dense_objective(&prob.gram, &gamma)?;
    Ok(QpSolution {
        gamma,
        objective,
        iterations,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// [`solve_projected_gradient`] with step `1/λ_max(K)` from 50 power iterations.
pub fn solve(prob: &QpProblem, iters: usize) -> Result<QpSolution> {
    let start = Instant::now();
    let lambda = prob.max_eigenvalue(50);
    let step = if lambda > 0.0 { 1.0 / lambda } else { 1.0 };
    let mut sol = solve_projected_gradient(prob, step, iters)?;
    sol.wall_seconds = start.elapsed().as_secs_f64();
    Ok(sol)
}
