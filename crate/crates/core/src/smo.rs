//! Sequential minimal optimization for the one-class slab SVM.
//!
//! Each iteration picks a working pair `(b, a)`, solves the two-variable
//! subproblem analytically along the direction that keeps `γₐ + γ_b` fixed,
//! clips the result to the box, and refreshes the plane offsets ρ₁, ρ₂.
//! Training stops once at most one point violates its KKT case.
//!
//! Pair selection: `b` is the violator with the largest |f̄|, where
//! `f̄(x) = min(s(x) − ρ₁, ρ₂ − s(x))` is the distance to the nearer plane;
//! `a` maximizes |f̄(x_b) − f̄(x_a)|. Pairs whose curvature vanishes or whose
//! clipped step does not move are skipped in favour of the next candidate.

use std::time::Instant;

use crate::error::{OcsError, Result};
use crate::kernel::KernelEngine;
use crate::par;
use crate::types::{
    validate_params, Dataset, GammaBox, HyperParams, Region, SupportVector, TrainMeta,
    TrainStatus, TrainedModel, ZERO_GAMMA,
};

/// Curvature `k_aa + k_bb − 2k_ab` at or below this marks a degenerate pair.
pub const DEGENERATE_CURVATURE: f64 = 1e-12;

/// A clipped step moving γ_b by less than this fraction of the box width is
/// treated as no movement.
pub const STALL_FRACTION: f64 = 1e-12;

/// Dual iterate plus the cached expansion scores and current plane offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaState {
    pub(crate) gamma: Vec<f64>,
    pub(crate) scores: Vec<f64>,
    pub(crate) rho1: f64,
    pub(crate) rho2: f64,
}

impl GammaState {
    /// Assembles a state from raw parts. No invariants are checked.
    pub fn from_parts(gamma: Vec<f64>, scores: Vec<f64>, rho1: f64, rho2: f64) -> Self {
        GammaState {
            gamma,
            scores,
            rho1,
            rho2,
        }
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
    pub fn rho1(&self) -> f64 {
        self.rho1
    }
    pub fn rho2(&self) -> f64 {
        self.rho2
    }
    pub fn len(&self) -> usize {
        self.gamma.len()
    }
    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// ½ γᵀKγ evaluated through the cached scores.
    pub fn objective(&self) -> f64 {
        0.5 * self
            .gamma
            .iter()
            .zip(&self.scores)
            .map(|(g, s)| g * s)
            .sum::<f64>()
    }

    /// Distance to the nearer plane, negative outside the slab.
    pub fn f_bar(&self, i: usize) -> f64 {
        let s = self.scores[i];
        (s - self.rho1).min(self.rho2 - s)
    }
}

/// Uniform feasible start with scores and offsets filled in.
pub fn initialize_gamma(p: &HyperParams, engine: &KernelEngine<'_>) -> Result<GammaState> {
    let m = engine.len();
    validate_params(p, m)?;
    let bx = p.gamma_box(m);
    let gamma = bx.uniform_start()?;
    let scores = engine.all_scores(&gamma);
    let (rho1, rho2) = recover_rhos(&gamma, &scores, &bx);
    Ok(GammaState {
        gamma,
        scores,
        rho1,
        rho2,
    })
}

/// 1 / (k_aa + k_bb − 2k_ab).
pub fn compute_eta(engine: &KernelEngine<'_>, a: usize, b: usize) -> Result<f64> {
    let kab = engine.eval(a, b)?;
    eta_from(engine.diag(a), engine.diag(b), kab, a, b)
}

fn eta_from(kaa: f64, kbb: f64, kab: f64, a: usize, b: usize) -> Result<f64> {
    let denominator = kaa + kbb - 2.0 * kab;
    if a == b || denominator <= DEGENERATE_CURVATURE {
        Err(OcsError::DegeneratePair { a, b, denominator })
    } else {
        Ok(1.0 / denominator)
    }
}

/// Feasible range `[L, H]` for the new γ_b given `t* = γₐ* + γ_b*`.
pub fn clip_bounds(t_star: f64, bx: &GammaBox) -> (f64, f64) {
    let lo = (t_star - bx.upper).max(bx.lower);
    let hi = bx.upper.min(t_star - bx.lower);
    debug_assert!(lo <= hi + 1e-12, "empty clip range [{lo}, {hi}] for t* = {t_star}");
    (lo, hi)
}

/// Result of solving one two-variable subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairUpdate {
    pub a: usize,
    pub b: usize,
    pub gamma_a_old: f64,
    pub gamma_b_old: f64,
    pub gamma_a_new: f64,
    pub gamma_b_new: f64,
    /// γ_b before clipping: γ_b* + η Σⱼ γⱼ (k_aj − k_bj).
    pub unclipped: f64,
    pub eta: f64,
    pub clipped: bool,
}

impl PairUpdate {
    fn moved(&self, bx: &GammaBox) -> bool {
        (self.gamma_b_new - self.gamma_b_old).abs() > STALL_FRACTION * (bx.upper - bx.lower)
    }
}

fn solve_pair(state: &GammaState, a: usize, b: usize, eta: f64, bx: &GammaBox) -> PairUpdate {
    let ga = state.gamma[a];
    let gb = state.gamma[b];
    let t_star = ga + gb;
    // Σⱼ γⱼ (k_aj − k_bj) = s_a − s_b
    let unclipped = gb + eta * (state.scores[a] - state.scores[b]);
    let (lo, hi) = clip_bounds(t_star, bx);
    let gb_new = unclipped.clamp(lo, hi.max(lo));
    let ga_new = bx.clamp(t_star - gb_new);
    PairUpdate {
        a,
        b,
        gamma_a_old: ga,
        gamma_b_old: gb,
        gamma_a_new: ga_new,
        gamma_b_new: gb_new,
        unclipped,
        eta,
        clipped: gb_new != unclipped,
    }
}

/// Computes the update for pair `(a, b)` without applying it.
pub fn propose_update(
    state: &GammaState,
    engine: &KernelEngine<'_>,
    a: usize,
    b: usize,
    bx: &GammaBox,
) -> Result<PairUpdate> {
    let eta = compute_eta(engine, a, b)?;
    Ok(solve_pair(state, a, b, eta, bx))
}

/// Solves and applies the pair update, refreshing cached scores incrementally.
/// Offsets ρ₁, ρ₂ are left untouched; call [`recover_rhos`] afterwards.
pub fn update_pair(
    state: &mut GammaState,
    engine: &mut KernelEngine<'_>,
    a: usize,
    b: usize,
    bx: &GammaBox,
) -> Result<PairUpdate> {
    let upd = propose_update(state, engine, a, b, bx)?;
    apply_update(state, engine, &upd)?;
    Ok(upd)
}

fn apply_update(state: &mut GammaState, engine: &mut KernelEngine<'_>, upd: &PairUpdate) -> Result<()> {
    let da = upd.gamma_a_new - upd.gamma_a_old;
    let db = upd.gamma_b_new - upd.gamma_b_old;
    let row_a = engine.row(upd.a)?;
    let row_b = engine.row(upd.b)?;
    par::add_assign(&mut state.scores, |i| da * row_a[i] + db * row_b[i]);
    state.gamma[upd.a] = upd.gamma_a_new;
    state.gamma[upd.b] = upd.gamma_b_new;
    Ok(())
}

/// Plane offsets from the current scores.
///
/// ρ₁ averages the scores of points with 0 < γᵢ < 1/(ν₁m) (on the lower
/// plane), ρ₂ those with −ε/(ν₂m) < γᵢ < 0 (on the upper plane). With no such
/// point ρ₁ falls back to the smallest score among γᵢ > 0 (else among all
/// points), and ρ₂ to the largest score among γᵢ < 0 (else among all points).
pub fn recover_rhos(gamma: &[f64], scores: &[f64], bx: &GammaBox) -> (f64, f64) {
    let mut lower_sum = 0.0;
    let mut lower_n = 0usize;
    let mut upper_sum = 0.0;
    let mut upper_n = 0usize;
    let mut pos_min = f64::INFINITY;
    let mut neg_max = f64::NEG_INFINITY;
    let mut all_min = f64::INFINITY;
    let mut all_max = f64::NEG_INFINITY;
    for (&g, &s) in gamma.iter().zip(scores) {
        all_min = all_min.min(s);
        all_max = all_max.max(s);
        match bx.region(g) {
            Region::PositiveInterior => {
                lower_sum += s;
                lower_n += 1;
                pos_min = pos_min.min(s);
            }
            Region::AtUpper => pos_min = pos_min.min(s),
            Region::NegativeInterior => {
                upper_sum += s;
                upper_n += 1;
                neg_max = neg_max.max(s);
            }
            Region::AtLower => neg_max = neg_max.max(s),
            Region::Zero => {}
        }
    }
    let rho1 = if lower_n > 0 {
        lower_sum / lower_n as f64
    } else if pos_min.is_finite() {
        pos_min
    } else {
        all_min
    };
    let rho2 = if upper_n > 0 {
        upper_sum / upper_n as f64
    } else if neg_max.is_finite() {
        neg_max
    } else {
        all_max
    };
    (rho1, rho2)
}

fn violation_of(region: Region, s: f64, rho1: f64, rho2: f64) -> f64 {
    match region {
        Region::Zero => (rho1 - s).max(s - rho2).max(0.0),
        Region::PositiveInterior => (s - rho1).abs(),
        Region::NegativeInterior => (s - rho2).abs(),
        Region::AtUpper => (s - rho1).max(0.0),
        Region::AtLower => (rho2 - s).max(0.0),
    }
}

/// Tests point `i` against its γ case.
///
/// Returns whether the case is violated by more than `tol` and the raw
/// magnitude of the violation (0 when the case holds exactly).
pub fn kkt_violation(state: &GammaState, bx: &GammaBox, tol: f64, i: usize) -> (bool, f64) {
    let mag = violation_of(bx.region(state.gamma[i]), state.scores[i], state.rho1, state.rho2);
    (mag > tol, mag)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub case: Region,
    pub magnitude: f64,
}

/// Every point violating its γ case by more than the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub violations: Vec<Violation>,
    /// Largest violation magnitude over all points, tolerated or not.
    pub max_violation: f64,
}

impl KktReport {
    pub fn count(&self) -> usize {
        self.violations.len()
    }
}

pub fn kkt_report(state: &GammaState, bx: &GammaBox, tol: f64) -> KktReport {
    let mags = par::map_range(state.len(), |i| {
        let region = bx.region(state.gamma[i]);
        (region, violation_of(region, state.scores[i], state.rho1, state.rho2))
    });
    let max_violation = mags.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    let violations: Vec<Violation> = mags
        .into_iter()
        .enumerate()
        .filter(|(_, (_, m))| *m > tol)
        .map(|(index, (case, magnitude))| Violation {
            index,
            case,
            magnitude,
        })
        .collect();
    KktReport {
        violations,
        max_violation,
    }
}

/// Outcome of pair selection.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// At most one point violates its KKT case.
    Converged(KktReport),
    /// Working pair with its precomputed update.
    Pair { b: usize, a: usize, update: PairUpdate },
}

/// Picks the next working pair, or reports convergence.
///
/// Errors with [`OcsError::NoProgress`] when no violator has a partner that is
/// both non-degenerate and yields a non-zero clipped step.
pub fn select_pair(
    state: &GammaState,
    engine: &mut KernelEngine<'_>,
    bx: &GammaBox,
    tol: f64,
) -> Result<Selection> {
    let report = kkt_report(state, bx, tol);
    if report.count() <= 1 {
        return Ok(Selection::Converged(report));
    }
    let m = state.len();
    let f_bar = par::map_range(m, |i| state.f_bar(i));

    let first_b = report
        .violations
        .iter()
        .map(|v| v.index)
        .fold(None::<usize>, |best, i| match best {
            Some(j) if f_bar[j].abs() >= f_bar[i].abs() => Some(j),
            _ => Some(i),
        })
        .expect("at least two violators");
    if let Some((a, update)) = partner_for(state, engine, bx, &f_bar, first_b)? {
        return Ok(Selection::Pair { b: first_b, a, update });
    }

    let mut rest: Vec<usize> = report
        .violations
        .iter()
        .map(|v| v.index)
        .filter(|&i| i != first_b)
        .collect();
    rest.sort_by(|&i, &j| f_bar[j].abs().total_cmp(&f_bar[i].abs()).then(i.cmp(&j)));
    for b in rest {
        if let Some((a, update)) = partner_for(state, engine, bx, &f_bar, b)? {
            return Ok(Selection::Pair { b, a, update });
        }
    }
    Err(OcsError::NoProgress)
}

fn partner_for(
    state: &GammaState,
    engine: &mut KernelEngine<'_>,
    bx: &GammaBox,
    f_bar: &[f64],
    b: usize,
) -> Result<Option<(usize, PairUpdate)>> {
    let row_b = engine.row(b)?;
    let kbb = engine.diag(b);
    let fb = f_bar[b];
    let try_a = |a: usize| -> Option<PairUpdate> {
        let eta = eta_from(engine.diag(a), kbb, row_b[a], a, b).ok()?;
        let upd = solve_pair(state, a, b, eta, bx);
        upd.moved(bx).then_some(upd)
    };

    let best = par::argmax(f_bar.len(), |i| (i != b).then(|| (fb - f_bar[i]).abs()));
    let Some((first_a, _)) = best else {
        return Ok(None);
    };
    if let Some(upd) = try_a(first_a) {
        return Ok(Some((first_a, upd)));
    }
    let mut order: Vec<usize> = (0..f_bar.len()).filter(|&i| i != b && i != first_a).collect();
    order.sort_by(|&i, &j| {
        (fb - f_bar[j])
            .abs()
            .total_cmp(&(fb - f_bar[i]).abs())
            .then(i.cmp(&j))
    });
    Ok(order.into_iter().find_map(|a| try_a(a).map(|u| (a, u))))
}

/// Result of one call to [`SmoSession::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Updated(PairUpdate),
    Finished(TrainStatus),
}

/// One training run. Owns all mutable solver state.
pub struct SmoSession<'a> {
    engine: KernelEngine<'a>,
    params: HyperParams,
    bx: GammaBox,
    state: GammaState,
    iterations: usize,
    max_iter: usize,
    last_max_violation: f64,
    finished: Option<TrainStatus>,
}

impl<'a> SmoSession<'a> {
    pub fn new(data: &'a Dataset, params: &HyperParams) -> Result<Self> {
        let params = validate_params(params, data.len())?;
        let engine = KernelEngine::new(params.kernel(), data);
        let state = initialize_gamma(&params, &engine)?;
        Ok(SmoSession {
            bx: params.gamma_box(data.len()),
            max_iter: params.max_iter_for(data.len()),
            engine,
            params,
            state,
            iterations: 0,
            last_max_violation: f64::INFINITY,
            finished: None,
        })
    }

    pub fn state(&self) -> &GammaState {
        &self.state
    }
    pub fn engine(&self) -> &KernelEngine<'a> {
        &self.engine
    }
    pub fn gamma_box(&self) -> &GammaBox {
        &self.bx
    }
    pub fn params(&self) -> &HyperParams {
        &self.params
    }
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    pub fn status(&self) -> Option<TrainStatus> {
        self.finished
    }

    /// Runs one select → update → recover-ρ iteration.
    pub fn step(&mut self) -> Result<Step> {
        if let Some(status) = self.finished {
            return Ok(Step::Finished(status));
        }
        let selection = select_pair(&self.state, &mut self.engine, &self.bx, self.params.tol());
        let update = match selection {
            Ok(Selection::Converged(report)) => {
                self.last_max_violation = report.max_violation;
                return Ok(self.finish(TrainStatus::Converged));
            }
            Err(OcsError::NoProgress) => return Ok(self.finish(TrainStatus::NoProgress)),
            Err(e) => return Err(e),
            Ok(Selection::Pair { update, .. }) => update,
        };
        if self.iterations >= self.max_iter {
            return Ok(self.finish(TrainStatus::MaxIterReached));
        }
        apply_update(&mut self.state, &mut self.engine, &update)?;
        self.iterations += 1;
        if self.iterations.is_multiple_of(self.state.len()) {
            self.state.scores = self.engine.all_scores(&self.state.gamma);
        }
        let (rho1, rho2) = recover_rhos(&self.state.gamma, &self.state.scores, &self.bx);
        self.state.rho1 = rho1;
        self.state.rho2 = rho2;
        debug_assert!({
            let (box_err, sum_err) = self.bx.violation(&self.state.gamma);
            box_err <= 1e-12 && sum_err <= 1e-9
        });
        Ok(Step::Updated(update))
    }

    fn finish(&mut self, status: TrainStatus) -> Step {
        if status != TrainStatus::Converged {
            self.last_max_violation = kkt_report(&self.state, &self.bx, self.params.tol()).max_violation;
        }
        self.finished = Some(status);
        Step::Finished(status)
    }

    /// Steps until finished.
    pub fn run(&mut self) -> Result<TrainStatus> {
        loop {
            if let Step::Finished(status) = self.step()? {
                return Ok(status);
            }
        }
    }

    /// Packages the current iterate as a model.
    pub fn to_model(&self, wall_seconds: f64) -> TrainedModel {
        let data = self.engine.data();
        let support_vectors = self
            .state
            .gamma
            .iter()
            .enumerate()
            .filter(|(_, g)| g.abs() >= ZERO_GAMMA)
            .map(|(i, &g)| SupportVector {
                features: data.row(i).to_vec(),
                weight: g,
            })
            .collect();
        TrainedModel {
            support_vectors,
            rho1: self.state.rho1,
            rho2: self.state.rho2,
            dim: data.dim(),
            params: self.params,
            meta: TrainMeta {
                iterations: self.iterations,
                max_violation: self.last_max_violation,
                wall_seconds,
                status: self.finished.unwrap_or(TrainStatus::MaxIterReached),
            },
        }
    }
}

/// Trains a model. Runs that hit the iteration cap or stall still return the
/// last iterate, with the outcome recorded in `meta.status`.
pub fn train(data: &Dataset, params: &HyperParams) -> Result<TrainedModel> {
    let start = Instant::now();
    let mut session = SmoSession::new(data, params)?;
    session.run()?;
    Ok(session.to_model(start.elapsed().as_secs_f64()))
}
