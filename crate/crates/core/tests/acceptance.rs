//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line with
//! the measured numbers, then asserts.
//!
//! Tests take a shared lock so the timing checks never compete for cores.

mod common;

use std::io::Write as _;
use std::sync::Mutex;
use std::time::Instant;

use ocssvm::bench::{run_bench, BenchOptions};
use ocssvm::eval::{decide_score, plot_data};
use ocssvm::model_io::{deserialize_model, serialize_model};
use ocssvm::reference::{self, QpProblem};
use ocssvm::smo::{propose_update, recover_rhos, Step};
use ocssvm::toy::{generate_toy, ToyDataSpec};
use ocssvm::{
    decide, mcc, score, train, ConfusionCounts, Dataset, GammaState, HyperParams, KernelEngine, KernelSpec,
    SmoSession, SupportVector, TrainMeta, TrainStatus, TrainedModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written straight to stderr so the line shows up even when output is captured.
fn report(n: u32, name: &str, ok: bool, detail: &str) {
    let line = format!(
        "[acceptance] criterion {n:>2} {:<4} {name}: {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn default_params() -> HyperParams {
    HyperParams::new(0.5, 0.01, 2.0 / 3.0, KernelSpec::Linear).unwrap()
}

struct SuiteOutcome {
    runs: usize,
    worst_sum: f64,
    worst_box: f64,
    worst_rise: f64,
    converged: usize,
    kkt_failures: usize,
    worst_violators: usize,
    statuses: [usize; 3],
    seconds: f64,
}

/// 1000 random runs with an independent trace of ½γᵀKγ and a from-scratch
/// KKT check on every converged run.
fn feasibility_suite() -> SuiteOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut out = SuiteOutcome {
        runs: 0,
        worst_sum: 0.0,
        worst_box: 0.0,
        worst_rise: f64::NEG_INFINITY,
        converged: 0,
        kkt_failures: 0,
        worst_violators: 0,
        statuses: [0; 3],
        seconds: 0.0,
    };
    for run in 0..1000 {
        let m = rng.random_range(10..=500);
        let d = rng.random_range(1..=5);
        let data = common::random_data(&mut rng, m, d);
        let kernel = common::random_kernel(&mut rng, run, d);
        let params = common::random_params(&mut rng, kernel);
        let k = common::gram(&data, kernel);
        let bx = params.gamma_box(m);

        let mut session = SmoSession::new(&data, &params).unwrap();
        let mut gamma = session.state().gamma().to_vec();
        let mut u: Vec<f64> = (0..m).map(|i| (0..m).map(|j| k[i][j] * gamma[j]).sum()).collect();
        let mut steps = 0usize;
        let status = loop {
            match session.step().unwrap() {
                Step::Finished(status) => break status,
                Step::Updated(upd) => {
                    let (a, b) = (upd.a, upd.b);
                    let da = upd.gamma_a_new - gamma[a];
                    let db = upd.gamma_b_new - gamma[b];
                    let rise = da * u[a]
                        + db * u[b]
                        + 0.5 * (da * da * k[a][a] + db * db * k[b][b] + 2.0 * da * db * k[a][b]);
                    out.worst_rise = out.worst_rise.max(rise);
                    gamma[a] = upd.gamma_a_new;
                    gamma[b] = upd.gamma_b_new;
                    steps += 1;
                    if steps.is_multiple_of(m) {
                        u = (0..m).map(|i| (0..m).map(|j| k[i][j] * gamma[j]).sum()).collect();
                    } else {
                        for i in 0..m {
                            u[i] += da * k[i][a] + db * k[i][b];
                        }
                    }
                }
            }
        };
        out.statuses[status as usize] += 1;
        let state = session.state();
        let g = state.gamma();
        let sum: f64 = g.iter().sum();
        out.worst_sum = out.worst_sum.max((sum - bx.target).abs());
        for &x in g {
            out.worst_box = out.worst_box.max((bx.lower - x).max(x - bx.upper));
        }

        if status == TrainStatus::Converged {
            out.converged += 1;
            let s = common::scores(&data, kernel, g);
            let violators = (0..m)
                .filter(|&i| {
                    common::case_violation(g[i], s[i], bx.lower, bx.upper, state.rho1(), state.rho2()) > params.tol()
                })
                .count();
            out.worst_violators = out.worst_violators.max(violators);
            if violators > 1 {
                out.kkt_failures += 1;
            }
        }
        out.runs += 1;
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

fn suite() -> &'static SuiteOutcome {
    static CELL: std::sync::OnceLock<SuiteOutcome> = std::sync::OnceLock::new();
    CELL.get_or_init(feasibility_suite)
}

#[test]
fn criterion_01_feasibility_suite() {
    let _g = serial();
    let s = suite();
    let ok = s.worst_sum <= 1e-9 && s.worst_box <= 1e-12 && s.runs == 1000;
    report(
        1,
        "feasibility suite",
        ok,
        &format!(
            "{} runs, max |sum - (1-eps)| = {:.2e}, max box excess = {:.2e}, statuses converged/max_iter/no_progress = {:?}, {:.1}s",
            s.runs, s.worst_sum, s.worst_box, s.statuses, s.seconds
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_02_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_rel = 0.0f64;
    let mut over = 0usize;
    let mut disagreements = 0usize;
    let mut compared_points = 0usize;
    let mut statuses = [0usize; 3];
    for inst in 0..200 {
        let m = rng.random_range(2..=12);
        let d = rng.random_range(1..=5);
        let data = common::random_data(&mut rng, m, d);
        let kernel = common::random_kernel(&mut rng, inst, d);
        let params = common::random_params(&mut rng, kernel).with_tol(1e-9).unwrap();

        let mut session = SmoSession::new(&data, &params).unwrap();
        session.run().unwrap();
        let model = session.to_model(0.0);
        statuses[model.meta.status as usize] += 1;
        let smo_gamma = session.state().gamma().to_vec();
        let k = common::gram(&data, kernel);
        let smo_obj = common::quad(&k, &smo_gamma);

        let prob = QpProblem::from_training(&data, &params).unwrap();
        let sol = reference::solve(&prob, 200_000).unwrap();
        let oracle_obj = common::quad(&k, &sol.gamma);
        let rel = (smo_obj - oracle_obj).abs() / smo_obj.abs().max(oracle_obj.abs()).max(1e-300);
        worst_rel = worst_rel.max(rel);
        if rel > 1e-4 {
            over += 1;
        }

        let bx = params.gamma_box(m);
        let s_smo = common::scores(&data, kernel, &smo_gamma);
        let s_or = common::scores(&data, kernel, &sol.gamma);
        let (r1, r2) = recover_rhos(&sol.gamma, &s_or, &bx);
        for i in 0..m {
            let clear = |s: f64, a: f64, b: f64| (s - a).abs() > 1e-3 && (s - b).abs() > 1e-3;
            if clear(s_smo[i], model.rho1, model.rho2) && clear(s_or[i], r1, r2) {
                compared_points += 1;
                if decide_score(s_smo[i], model.rho1, model.rho2) != decide_score(s_or[i], r1, r2) {
                    disagreements += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = over == 0 && disagreements == 0 && secs < 60.0;
    report(
        2,
        "oracle equivalence",
        ok,
        &format!(
            "{over}/200 instances beyond 1e-4 relative (worst {worst_rel:.3e}), {disagreements}/{compared_points} clear-margin label disagreements, statuses {statuses:?}, {secs:.1}s"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_03_two_point_closed_form() {
    let _g = serial();
    let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], None).unwrap();
    let mut worst = 0.0f64;
    for eps in [0.1, 0.5, 2.0 / 3.0, 0.9] {
        let p = HyperParams::new(0.5, 0.01, eps, KernelSpec::Linear).unwrap();
        let mut session = SmoSession::new(&data, &p).unwrap();
        session.run().unwrap();
        let want = (1.0 - eps) / 2.0;
        for &g in session.state().gamma() {
            worst = worst.max((g - want).abs());
        }
    }
    let ok = worst <= 1e-8;
    report(3, "two-point closed form", ok, &format!("max |gamma - (1-eps)/2| = {worst:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_04_kkt_termination() {
    let _g = serial();
    let s = suite();
    let ok = s.kkt_failures == 0;
    report(
        4,
        "KKT termination",
        ok,
        &format!(
            "{} of {} converged runs with >1 violator at tol (worst count {})",
            s.kkt_failures, s.converged, s.worst_violators
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_monotone_objective() {
    let _g = serial();
    let s = suite();
    let ok = s.worst_rise <= 1e-10;
    report(
        5,
        "objective monotonicity",
        ok,
        &format!("largest per-iteration change = {:.3e} over {} runs", s.worst_rise, s.runs),
    );
    assert!(ok);
}

#[test]
fn criterion_06_update_rule_identity() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut draws = 0;
    while draws < 10_000 {
        let m = rng.random_range(2..=8);
        let d = rng.random_range(1..=4);
        let data = common::random_data(&mut rng, m, d);
        let kernel = common::random_kernel(&mut rng, draws, d);
        let params = common::random_params(&mut rng, kernel);
        let bx = params.gamma_box(m);
        let engine = KernelEngine::new(kernel, &data);
        // random feasible γ: box-uniform draws pulled onto the sum plane
        let mut gamma: Vec<f64> = (0..m).map(|_| rng.random_range(bx.lower..=bx.upper)).collect();
        let mut excess = gamma.iter().sum::<f64>() - bx.target;
        for g in gamma.iter_mut() {
            let room = if excess > 0.0 { *g - bx.lower } else { *g - bx.upper };
            let take = if excess > 0.0 { room.min(excess) } else { room.max(excess) };
            *g -= take;
            excess -= take;
        }
        let s = engine.all_scores(&gamma);
        let state = GammaState::from_parts(gamma.clone(), s, 0.0, 0.0);
        let a = rng.random_range(0..m);
        let mut b = rng.random_range(0..m);
        if a == b {
            b = (a + 1) % m;
        }
        let Ok(upd) = propose_update(&state, &engine, a, b, &bx) else {
            continue;
        };
        let k = |i: usize, j: usize| common::kernel(kernel, data.row(i), data.row(j));
        let t = gamma[a] + gamma[b];
        let eta = 1.0 / (k(a, a) + k(b, b) - 2.0 * k(a, b));
        let rest: f64 = (0..m)
            .filter(|&j| j != a && j != b)
            .map(|j| gamma[j] * (k(a, j) - k(b, j)))
            .sum();
        let stationary = eta * (t * (k(a, a) - k(a, b)) + rest);
        let diff = (upd.unclipped - stationary).abs() / stationary.abs().max(1.0);
        worst = worst.max(diff);
        draws += 1;
    }
    let ok = worst <= 1e-12;
    report(
        6,
        "update-rule identity",
        ok,
        &format!("10000 draws, max |incremental - stationary| / max(1, |stationary|) = {worst:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_bench_shape() {
    let _g = serial();
    let start = Instant::now();
    let spec = ToyDataSpec::with_total(1000, 0);
    let rep = run_bench(&[500, 1000, 2000, 5000], &default_params(), &spec, &BenchOptions::default());
    let secs = start.elapsed().as_secs_f64();
    let times: Vec<f64> = rep.rows.iter().map(|r| r.smo_seconds).collect();
    let mccs: Vec<f64> = rep.rows.iter().map(|r| r.mcc).collect();
    let all_ok = rep.rows.len() == 4 && rep.rows.iter().all(|r| r.error.is_none());
    let time_up = times.windows(2).all(|w| w[1] > w[0]);
    let mcc_up = mccs.windows(2).all(|w| w[1] >= w[0]);
    let ok = all_ok && time_up && mcc_up && secs < 300.0;
    report(
        7,
        "bench shape",
        ok,
        &format!(
            "rows {} (errors-free {all_ok}), seconds {times:.4?} increasing {time_up}, mcc {mccs:.4?} non-decreasing {mcc_up}, {secs:.1}s",
            rep.rows.len()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_scaling() {
    let _g = serial();
    let opts = BenchOptions {
        with_oracle: true,
        ..BenchOptions::default()
    };
    let rep = run_bench(&[2000, 5000], &default_params(), &ToyDataSpec::with_total(1000, 0), &opts);
    let pairs: Vec<(usize, f64, f64)> = rep
        .rows
        .iter()
        .map(|r| (r.size, r.smo_seconds, r.oracle_seconds.unwrap_or(f64::NAN)))
        .collect();
    let ok = rep.rows.len() == 2 && pairs.iter().all(|&(_, s, o)| s < o);
    report(
        8,
        "scaling vs dense baseline",
        ok,
        &format!("(size, smo s, baseline s) = {pairs:.3?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_09_slab_geometry() {
    let _g = serial();
    let data = generate_toy(&ToyDataSpec::with_total(1000, 7)).unwrap();
    let model = train(&data, &default_params()).unwrap();
    let plot = plot_data(&model, &data, 50).unwrap();
    let (lower, upper) = plot.lines.expect("linear kernel has lines");
    let (d1, d2) = (lower.direction(), upper.direction());
    let dir_gap = (d1[0] - d2[0]).abs().max((d1[1] - d2[1]).abs());
    let inside = data
        .rows()
        .filter(|x| {
            let s = score(&model, x).unwrap();
            s > model.rho1 && s < model.rho2
        })
        .count();
    let frac = inside as f64 / data.len() as f64;
    let ok = dir_gap <= 1e-10 && model.rho1 < model.rho2 && frac >= 0.5;
    report(
        9,
        "slab geometry",
        ok,
        &format!(
            "direction gap {dir_gap:.1e}, rho1 = {:.6}, rho2 = {:.6}, strictly inside {inside}/1000 ({:.1}%), status {}",
            model.rho1,
            model.rho2,
            100.0 * frac,
            model.meta.status.as_str()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_10_mcc() {
    let _g = serial();
    let c = |tp, tn, fp, fn_| ConfusionCounts { tp, tn, fp, fn_ };
    let perfect = mcc(&c(5, 5, 0, 0)) == 1.0;
    let none = mcc(&c(5, 5, 5, 5)) == 0.0;
    let worked = mcc(&c(90, 5, 5, 0)) == 450.0 / (95.0f64 * 90.0 * 10.0 * 5.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut asym = 0;
    for _ in 0..10_000 {
        let (tp, tn, fp, fn_) = (
            rng.random_range(0..1000u64),
            rng.random_range(0..1000u64),
            rng.random_range(0..1000u64),
            rng.random_range(0..1000u64),
        );
        let a = mcc(&c(tp, tn, fp, fn_));
        let b = mcc(&c(tn, tp, fn_, fp));
        if a != b || !(-1.0..=1.0).contains(&a) {
            asym += 1;
        }
    }
    let ok = perfect && none && worked && asym == 0;
    report(
        10,
        "MCC",
        ok,
        &format!("examples {perfect}/{none}/{worked}, swap-symmetry failures {asym}/10000"),
    );
    assert!(ok);
}

#[test]
fn criterion_11_serialization() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for i in 0..1000 {
        let d = rng.random_range(1..=6);
        let kernel = common::random_kernel(&mut rng, i, d);
        let n_sv = rng.random_range(0..30);
        let support_vectors = (0..n_sv)
            .map(|_| SupportVector {
                features: (0..d).map(|_| rng.random_range(-5.0..5.0)).collect(),
                weight: rng.random_range(-1.0..1.0),
            })
            .collect();
        let mut model = TrainedModel {
            support_vectors,
            rho1: rng.random_range(-1.0..0.0),
            rho2: rng.random_range(0.0..1.0),
            dim: d,
            params: common::random_params(&mut rng, kernel).with_seed(rng.random()),
            meta: TrainMeta {
                iterations: rng.random_range(0..10_000),
                max_violation: rng.random(),
                wall_seconds: rng.random(),
                status: TrainStatus::Converged,
            },
        };
        if i % 2 == 0 {
            model.params = model.params.with_max_iter(rng.random_range(1..1000)).unwrap();
        }
        let back = deserialize_model(&serialize_model(&model)).unwrap();
        if back != model {
            mismatches += 1;
            continue;
        }
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (s1, s2) = (score(&model, &x).unwrap(), score(&back, &x).unwrap());
            if s1.to_bits() != s2.to_bits() || decide(&model, &x).unwrap() != decide(&back, &x).unwrap() {
                mismatches += 1;
            }
        }
    }
    let ok = mismatches == 0;
    report(11, "serialization round-trip", ok, &format!("{mismatches} mismatches over 1000 models"));
    assert!(ok);
}
