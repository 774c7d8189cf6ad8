//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Runs without the libtest harness so the
//! lines are visible in the normal test output.

#![allow(clippy::needless_range_loop)]

use std::path::Path;
use std::time::Instant;

use gaitkin::io::{load_model, read_keypoints, save_model, write_keypoints};
use gaitkin::timed::WallClock;
use gaitkin_core::geometry::{
    angle_between, hip_angle, knee_angle, savgol_coefficients, savgol_filter, Joint, KeypointFrame,
    LabelOptions, SavGolSpec, Side,
};
use gaitkin_core::math::{Matrix, Vec3};
use gaitkin_core::pipeline::{
    adapt, build_cohort, evaluate, experiment_matrix, predict_dataset, prepare_data, train_base,
    transfer_scores, window_dataset, AdaptedModels, Cohort, CohortConfig, DataOptions, EvalReport,
    ExperimentConfig, ExperimentData, Segment, TrainedModel, WindowOptions,
};
use gaitkin_core::stream::{replay, NoClock, TICK_BUDGET_MS};
use gaitkin_core::synth::{decimation_factor, hpe_labels, KeypointNoise, SpeedPlan};
use gaitkin_core::tcn::{
    encode_model, loss_and_grad, EvalScratch, Mode, NormStats, TcnConfig, TcnModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::Float;

/// Working precision of the extended-precision oracles, in bits.
const PREC: u32 = 256;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn f(x: f64) -> Float {
    Float::with_val(PREC, x)
}

// ---------------------------------------------------------------- geometry

/// `acos(u.v / (|u||v|))` in degrees, evaluated in extended precision.
fn acos_oracle(u: Vec3, v: Vec3) -> f64 {
    let dot = f(u.x) * f(v.x) + f(u.y) * f(v.y) + f(u.z) * f(v.z);
    let nu = (f(u.x).square() + f(u.y).square() + f(u.z).square()).sqrt();
    let nv = (f(v.x).square() + f(v.y).square() + f(v.z).square()).sqrt();
    let c = (dot / (nu * nv)).clamp(&f(-1.0), &f(1.0));
    let pi = Float::with_val(PREC, rug::float::Constant::Pi);
    (c.acos() * 180u32 / pi).to_f64()
}

fn random_vec(r: &mut ChaCha8Rng) -> Vec3 {
    let scale = 10f64.powf(r.random_range(-2.0..2.0));
    Vec3::new(
        r.random_range(-1.0..1.0) * scale,
        r.random_range(-1.0..1.0) * scale,
        r.random_range(-1.0..1.0) * scale,
    )
}

/// Random pairs, a fifth of them within a few microradians of parallel or
/// antiparallel where the plain `acos` loses precision.
fn vector_pair(r: &mut ChaCha8Rng) -> (Vec3, Vec3) {
    let u = random_vec(r);
    let v = if r.random_bool(0.2) {
        let s = if r.random_bool(0.5) { 1.0 } else { -1.0 } * r.random_range(0.1..10.0);
        let tiny = 10f64.powf(r.random_range(-7.0..-4.0)) * u.norm();
        Vec3::new(
            u.x * s + tiny * r.random_range(-1.0..1.0),
            u.y * s + tiny * r.random_range(-1.0..1.0),
            u.z * s,
        )
    } else {
        random_vec(r)
    };
    (u, v)
}

/// Least-squares polynomial fit of `ys` evaluated at index `at`, by the
/// normal equations in extended precision.
fn lsq_oracle(ys: &[f64], order: usize, at: usize) -> f64 {
    let n = order + 1;
    let xs: Vec<Float> = (0..ys.len()).map(|j| f(j as f64 - at as f64)).collect();
    let mut a: Vec<Vec<Float>> = (0..n).map(|_| (0..=n).map(|_| f(0.0)).collect()).collect();
    for (x, &y) in xs.iter().zip(ys) {
        let powers: Vec<Float> = (0..2 * n).map(|k| x.clone().pow(k as u32)).collect();
        for r in 0..n {
            for c in 0..n {
                a[r][c] += &powers[r + c];
            }
            a[r][n] += Float::with_val(PREC, &powers[r] * y);
        }
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].clone().abs().total_cmp(&a[j][col].clone().abs()))
            .unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let factor = Float::with_val(PREC, &a[r][col] / &a[col][col]);
                for c in col..=n {
                    let sub = Float::with_val(PREC, &factor * &a[col][c]);
                    a[r][c] -= sub;
                }
            }
        }
    }
    // At offset zero the polynomial equals its constant coefficient.
    (Float::with_val(PREC, &a[0][n] / &a[0][0])).to_f64()
}

fn geometry_oracles() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(1);
    let mut worst_angle: f64 = 0.0;
    for _ in 0..100_000 {
        let (u, v) = vector_pair(&mut r);
        worst_angle = worst_angle.max((angle_between(u, v).unwrap() - acos_oracle(u, v)).abs());
    }
    // Joint angles on random poses: differences are taken in f64 exactly as
    // the implementation does, the angle itself in extended precision.
    let mut worst_joint: f64 = 0.0;
    for _ in 0..10_000 {
        let mut frame = KeypointFrame::new(0.0);
        for j in Joint::ALL {
            frame.set(j, random_vec(&mut r).into());
        }
        let p = |j| frame.position(j).unwrap();
        for side in [Side::Left, Side::Right] {
            let hip = acos_oracle(
                p(Joint::Spine) - p(Joint::Pelvis),
                p(side.knee()) - p(side.hip()),
            );
            let knee = acos_oracle(
                p(side.knee()) - p(side.hip()),
                p(side.ankle()) - p(side.knee()),
            );
            worst_joint = worst_joint.max((hip_angle(&frame, side).unwrap() - hip).abs());
            worst_joint = worst_joint.max((knee_angle(&frame, side).unwrap() - knee).abs());
        }
    }

    let specs = [(50, 4), (51, 4), (25, 4), (5, 2), (11, 3), (21, 6)];
    let mut worst_poly: f64 = 0.0;
    let mut worst_refit: f64 = 0.0;
    for (k, &(window, order)) in specs.iter().enumerate() {
        let spec = SavGolSpec::new(window, order).unwrap();
        for trial in 0..4 {
            let n = r.random_range(window..window + 150);
            // Polynomials up to the filter order (at most 4) pass unchanged.
            let deg = order.min(4);
            let coeffs: Vec<f64> = (0..=deg).map(|_| r.random_range(-1.0..1.0)).collect();
            let poly: Vec<f64> = (0..n)
                .map(|i| {
                    let t = -2.0 + 4.0 * i as f64 / n as f64;
                    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
                })
                .collect();
            let smoothed = savgol_filter(&poly, &spec).unwrap();
            for (a, b) in poly.iter().zip(&smoothed) {
                worst_poly = worst_poly.max((a - b).abs());
            }
            // Random signal against a per-window refit at every index.
            let signal: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            let smoothed = savgol_filter(&signal, &spec).unwrap();
            let c = spec.center();
            let stride = if k < 3 && trial > 0 { 7 } else { 1 };
            for i in (0..n).step_by(stride) {
                let start = i.saturating_sub(c).min(n - window);
                let oracle = lsq_oracle(&signal[start..start + window], order, i - start);
                worst_refit = worst_refit.max((oracle - smoothed[i]).abs());
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst_angle < 1e-9 && worst_joint < 1e-9 && worst_poly < 1e-8 && worst_refit < 1e-9 && secs < 10.0,
        format!(
            "max |angle - acos oracle| {worst_angle:.1e} deg on 1e5 pairs, joints {worst_joint:.1e} deg; \
             SG polynomial {worst_poly:.1e}, refit {worst_refit:.1e}; {secs:.1} s"
        ),
    )
}

fn savgol_five_two() -> Outcome {
    let spec = SavGolSpec::new(5, 2).unwrap();
    let w = savgol_coefficients(&spec, 2).unwrap();
    let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
    // Pseudoinverse row: the fit at the center for each unit impulse.
    let oracle: Vec<f64> = (0..5)
        .map(|j| {
            let mut e = [0.0; 5];
            e[j] = 1.0;
            lsq_oracle(&e, 2, 2)
        })
        .collect();
    let dev = (0..5)
        .map(|j| {
            (w[j] - expected[j])
                .abs()
                .max((oracle[j] - expected[j]).abs())
        })
        .fold(0.0, f64::max);
    outcome(
        dev < 1e-12,
        format!("weights {w:.6?}, max deviation {dev:.1e}"),
    )
}

// --------------------------------------------------------------------- tcn

fn random_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| r.random_range(-2.0..2.0))
            .collect(),
    )
}

fn random_model(cfg: TcnConfig, r: &mut ChaCha8Rng) -> TcnModel {
    let mut m = TcnModel::init(cfg, r).unwrap();
    for t in m.weights.params_mut() {
        for x in t.iter_mut() {
            *x += r.random_range(-0.05..0.05);
        }
    }
    let ch = m.config.in_channels;
    m.norm = NormStats {
        mean: (0..ch).map(|_| r.random_range(-0.5..0.5)).collect(),
        std: (0..ch).map(|_| r.random_range(0.5..2.0)).collect(),
    };
    m
}

/// Nested-loop evaluation of the network on one window with zero taps
/// before the window start.
fn naive_forward(m: &TcnModel, window: &Matrix) -> Vec<f64> {
    let t = window.cols();
    let k = m.config.kernel;
    let mut x: Vec<Vec<f64>> = (0..window.rows())
        .map(|c| {
            (0..t)
                .map(|i| (window.get(c, i) - m.norm.mean[c]) / m.norm.std[c])
                .collect()
        })
        .collect();
    let conv = |inp: &Vec<Vec<f64>>, w: &[f64], b: &[f64], d: usize| -> Vec<Vec<f64>> {
        let cin = inp.len();
        (0..b.len())
            .map(|o| {
                (0..t)
                    .map(|i| {
                        let mut acc = 0.0;
                        for tap in 0..k {
                            let back = (k - 1 - tap) * d;
                            if back > i {
                                continue;
                            }
                            for c in 0..cin {
                                acc += w[(o * cin + c) * k + tap] * inp[c][i - back];
                            }
                        }
                        (acc + b[o]).max(0.0)
                    })
                    .collect()
            })
            .collect()
    };
    for blk in &m.weights.blocks {
        let d = blk.conv1.dilation;
        let h1 = conv(&x, &blk.conv1.weight, &blk.conv1.bias, d);
        let h2 = conv(&h1, &blk.conv2.weight, &blk.conv2.bias, d);
        let res: Vec<Vec<f64>> = match &blk.proj {
            Some(p) => (0..p.out_dim)
                .map(|o| {
                    (0..t)
                        .map(|i| {
                            p.bias[o]
                                + (0..p.in_dim)
                                    .map(|c| p.weight[o * p.in_dim + c] * x[c][i])
                                    .sum::<f64>()
                        })
                        .collect()
                })
                .collect(),
            None => x.clone(),
        };
        x = h2
            .iter()
            .zip(&res)
            .map(|(a, r)| a.iter().zip(r).map(|(u, v)| u + v).collect())
            .collect();
    }
    let h = &m.weights.head;
    (0..h.out_dim)
        .map(|o| {
            h.bias[o]
                + (0..h.in_dim)
                    .map(|c| h.weight[o * h.in_dim + c] * x[c][t - 1])
                    .sum::<f64>()
        })
        .collect()
}

fn tcn_forward() -> Outcome {
    let mut r = rng(11);
    let m = random_model(TcnConfig::default(), &mut r);
    let mut scratch = EvalScratch::new(&m);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w = random_matrix(18, 373, &mut r);
        let mut out = [0.0; 4];
        scratch.predict_into(&m, &w, &mut out);
        for (a, b) in out.iter().zip(naive_forward(&m, &w)) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-12));
        }
    }

    // Perturb one time step at a time in a longer window; the oldest step
    // that still moves the output bounds the receptive field.
    let cfg = TcnConfig {
        window_len: 520,
        ..TcnConfig::default()
    };
    let m = random_model(cfg, &mut r);
    let base = random_matrix(18, 520, &mut r);
    let t = base.cols();
    let reference = m.predict_segment(&base, &[t - 1]).unwrap()[0].clone();
    let mut extent = 0;
    for back in 0..t {
        let mut x = base.clone();
        for c in 0..x.rows() {
            x.set(c, t - 1 - back, x.get(c, t - 1 - back) + 50.0);
        }
        if m.predict_segment(&x, &[t - 1]).unwrap()[0] != reference {
            extent = back + 1;
        }
    }
    outcome(
        worst < 1e-6 && extent == 373 && TcnConfig::default().receptive_field() == 373,
        format!(
            "max relative deviation {worst:.1e} on 100 inputs; impulse extent {extent} samples"
        ),
    )
}

fn gradient_audit() -> Outcome {
    let t0 = Instant::now();
    let shapes = [
        (3, 1, 4, 3),
        (4, 2, 4, 2),
        (2, 2, 3, 3),
        (5, 3, 3, 2),
        (3, 2, 3, 1),
    ];
    let mut worst_abs: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut checked = 0;
    let mut failures = 0;
    let mut nonzero = 0;
    for (k, &(inc, blocks, ch, kernel)) in shapes.iter().enumerate() {
        let mut r = rng(300 + k as u64);
        let mut cfg = TcnConfig::small(inc, blocks, ch, kernel);
        cfg.window_len = cfg.receptive_field().max(kernel);
        let len = cfg.window_len + 6;
        let m = random_model(cfg, &mut r);
        let input = random_matrix(inc, len, &mut r);
        let targets = (0..3)
            .map(|i| {
                (
                    len - 1 - 2 * i,
                    [
                        r.random_range(-5.0..5.0),
                        1.0,
                        r.random_range(-5.0..5.0),
                        -2.0,
                    ],
                )
            })
            .collect();
        let segs = vec![Segment { input, targets }];
        let loss = |m: &TcnModel| loss_and_grad(m, &segs, Mode::Eval, &mut rng(0)).unwrap().0;
        let (_, grads) = loss_and_grad(&m, &segs, Mode::Eval, &mut rng(0)).unwrap();
        let h = 1e-4;
        for ti in 0..grads.params().len() {
            for i in 0..grads.params()[ti].len() {
                let mut plus = m.clone();
                plus.weights.params_mut()[ti][i] += h;
                let mut minus = m.clone();
                minus.weights.params_mut()[ti][i] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let an = grads.params()[ti][i];
                let abs = (fd - an).abs();
                let rel = abs / fd.abs().max(an.abs()).max(f64::MIN_POSITIVE);
                checked += 1;
                if an.abs() > 1e-6 {
                    nonzero += 1;
                    worst_rel = worst_rel.max(rel);
                }
                worst_abs = worst_abs.max(abs);
                if abs > 1e-7 && rel > 1e-4 {
                    failures += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 120.0,
        format!("{checked} parameters ({nonzero} with non-zero gradient) in 5 configs, worst absolute error {worst_abs:.1e}, worst relative {worst_rel:.1e} on non-zero gradients; {failures} outside 1e-4 rel / 1e-7 abs; {secs:.1} s"),
    )
}

// -------------------------------------------------------------- experiments

struct SeedRun {
    seed: u64,
    cohort: Cohort,
    data: ExperimentData,
    cfg: ExperimentConfig,
    base: TrainedModel,
    models: AdaptedModels,
    ab_to_sk: EvalReport,
    sk_only: EvalReport,
    adapted: EvalReport,
}

fn run_seed(seed: u64) -> SeedRun {
    let t0 = Instant::now();
    let cohort = build_cohort(&CohortConfig {
        seed,
        ..CohortConfig::default()
    })
    .unwrap();
    let data = prepare_data(&cohort, &DataOptions::default()).unwrap();
    let cfg = ExperimentConfig::default().with_seed(seed);
    let base = train_base(&data, &cfg).unwrap();
    let models = adapt(&base.model, &data, &cfg, cfg.sk_fraction).unwrap();
    let scores = transfer_scores(&base.model, &models, &data.sk.test).unwrap();
    println!(
        "  seed {seed}: AB->SK {:.3}  SK-only {:.3}  AB+SK {:.3} deg  (base best epoch {}, adapted {}, SK-only {}; {:.0} s)",
        scores.ab_to_sk.overall(),
        scores.sk_only.overall(),
        scores.adapted.overall(),
        base.history.best_epoch,
        models.adapted.history.best_epoch,
        models.sk_only.history.best_epoch,
        t0.elapsed().as_secs_f64()
    );
    SeedRun {
        seed,
        cohort,
        data,
        cfg,
        base,
        models,
        ab_to_sk: scores.ab_to_sk,
        sk_only: scores.sk_only,
        adapted: scores.adapted,
    }
}

fn transfer(runs: &[SeedRun], secs: f64) -> Outcome {
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&SeedRun) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let ab = mean(&|r| r.ab_to_sk.overall());
    let sk = mean(&|r| r.sk_only.overall());
    let mixed = mean(&|r| r.adapted.overall());
    let gain_ab = 100.0 * (ab - mixed) / ab;
    let gain_sk = 100.0 * (sk - mixed) / sk;
    outcome(
        gain_ab >= 5.0 && gain_sk >= 5.0,
        format!(
            "mean SK-test RMSE over {} seeds: AB->SK {ab:.3}, SK-only {sk:.3}, AB+SK {mixed:.3} deg; \
             improvement {gain_ab:.1}% vs AB->SK, {gain_sk:.1}% vs SK-only; {:.1} min",
            runs.len(),
            secs / 60.0
        ),
    )
}

fn ratio_sweep(run: &SeedRun) -> Outcome {
    let mut rows = Vec::new();
    for ratio in [0.01, 0.02, 0.04, 0.06, 0.08, 0.12] {
        let (adapted, sk_only) = if ratio == run.cfg.sk_fraction {
            (run.adapted.overall(), run.sk_only.overall())
        } else {
            let m = adapt(&run.base.model, &run.data, &run.cfg, ratio).unwrap();
            (
                evaluate(&m.adapted.model, &run.data.sk.test)
                    .unwrap()
                    .overall(),
                evaluate(&m.sk_only.model, &run.data.sk.test)
                    .unwrap()
                    .overall(),
            )
        };
        println!("  ratio {ratio:.2}: AB+SK {adapted:.3}  SK-only {sk_only:.3} deg");
        rows.push((ratio, adapted, sk_only));
    }
    let at = |x: f64| rows.iter().find(|r| r.0 == x).unwrap().1;
    let gap = (at(0.06) - at(0.12)).abs();
    let below = rows.iter().filter(|r| r.1 <= r.2).count();
    outcome(
        gap <= 0.5 && below == rows.len(),
        format!("|AB+SK(6%) - AB+SK(12%)| = {gap:.3} deg; adapted at or below SK-only at {below}/{} ratios (seed {})", rows.len(), run.seed),
    )
}

fn matrix(run: &SeedRun) -> Outcome {
    let rows = experiment_matrix(
        &run.base.model,
        &run.models.sk_only.model,
        &run.models.adapted.model,
        &run.data.ab.validation,
        &run.data.sk.validation,
    )
    .unwrap();
    for r in &rows {
        let j = r.report.per_joint();
        println!(
            "  {:<12} {:.3} deg  (r_hip {:.2}, l_hip {:.2}, r_knee {:.2}, l_knee {:.2})",
            r.name(),
            r.report.overall(),
            j[0],
            j[1],
            j[2],
            j[3]
        );
    }
    let o = |i: usize| rows[i].report.overall();
    let ab_sk = rows[1].report.per_joint();
    let worst_joint = (0..4)
        .max_by(|&a, &b| ab_sk[a].total_cmp(&ab_sk[b]))
        .unwrap();
    outcome(
        o(0) < o(1) && o(2) >= o(3) && worst_joint == 2,
        format!(
            "AB->AB {:.3} < AB->SK {:.3}; SK->SK {:.3} >= AB+SK->SK {:.3}; largest AB->SK joint error: {}",
            o(0),
            o(1),
            o(2),
            o(3),
            ["r_hip", "l_hip", "r_knee", "l_knee"][worst_joint]
        ),
    )
}

fn online_offline(run: &SeedRun) -> Outcome {
    let rec = &run.cohort.sk_validation[0];
    let model = &run.models.adapted.model;
    let w = model.config.window_len;
    let ds = window_dataset(rec.to_recording(), &rec.truth, WindowOptions::new(w)).unwrap();
    let batch = predict_dataset(model, &ds).unwrap();
    let (ticks, _) = replay(model, &rec.imu, &mut NoClock).unwrap();
    let mut compared = 0;
    let mut mismatched = 0;
    for (i, t) in ticks.iter().enumerate() {
        if t.warmup {
            continue;
        }
        compared += 1;
        let same = t
            .angles
            .iter()
            .zip(&batch[i])
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            mismatched += 1;
        }
    }
    let warmup = ticks.iter().filter(|t| t.warmup).count();
    outcome(
        mismatched == 0 && compared == rec.imu.len() - (w - 1) && warmup == w - 1,
        format!("{compared} post-warm-up ticks of {} compared, {mismatched} differ in any bit ({warmup} warm-up ticks)", rec.spec.id),
    )
}

fn latency(run: &SeedRun) -> Outcome {
    let rec = &run.cohort.ab_validation[0];
    let (_, stats) = replay(&run.base.model, &rec.imu, &mut WallClock::default()).unwrap();
    let s = stats.summary().unwrap();
    outcome(
        s.ticks >= 1000 && s.p95_ms < TICK_BUDGET_MS,
        format!(
            "{} ticks with the default model: p50 {:.3} ms, p95 {:.3} ms, max {:.3} ms, {} over the {} ms budget",
            s.ticks, s.p50_ms, s.p95_ms, s.max_ms, s.violations, s.budget_ms
        ),
    )
}

fn round_trip(run: &SeedRun, dir: &Path) -> Outcome {
    // Noise-free camera keypoints of every subject-0 recording, through the
    // keypoint file format and the labelling pipeline.
    let factor = decimation_factor(50.0).unwrap();
    let mut worst: f64 = 0.0;
    let recordings = run
        .cohort
        .ab
        .iter()
        .chain(&run.cohort.sk)
        .map(|l| &l.recording);
    let validation = run
        .cohort
        .ab_validation
        .iter()
        .chain(&run.cohort.sk_validation);
    let mut n = 0;
    for rec in recordings.chain(validation).filter(|r| r.spec.subject == 0) {
        let path = dir.join(format!("{}.keypoints.jsonl", rec.spec.id));
        write_keypoints(&path, &rec.spec.keypoints(KeypointNoise::ZERO).unwrap()).unwrap();
        let labels = hpe_labels(
            &read_keypoints(&path).unwrap(),
            &LabelOptions::default(),
            factor,
        )
        .unwrap();
        let mut se = 0.0;
        for (l, t) in labels.iter().zip(&rec.truth) {
            se += l
                .to_array()
                .iter()
                .zip(t.to_array())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
        let rmse = (se / (4 * labels.len()) as f64).sqrt();
        worst = worst.max(rmse);
        n += 1;
        if matches!(rec.spec.plan, SpeedPlan::Validation) {
            assert_eq!(labels.len(), rec.truth.len());
        }
    }

    let path = dir.join("model.tcn");
    save_model(&path, &run.models.adapted.model).unwrap();
    let loaded = load_model(&path).unwrap();
    let bytes_equal = encode_model(&loaded) == std::fs::read(&path).unwrap()
        && encode_model(&run.models.adapted.model) == encode_model(&loaded);
    let preds_equal = predict_dataset(&loaded, &run.data.sk.test).unwrap()
        == predict_dataset(&run.models.adapted.model, &run.data.sk.test).unwrap();
    outcome(
        worst <= 0.5 && bytes_equal && preds_equal,
        format!(
            "worst label RMSE {worst:.3} deg over {n} recordings; model file re-encodes bitwise: {bytes_equal}, \
             predictions identical: {preds_equal}"
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, bool)> = Vec::new();
    let mut report = |name: &'static str, t0: Instant, o: Outcome| {
        println!(
            "{} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        results.push((name, o.pass));
    };

    let t = Instant::now();
    report("geometry oracles", t, geometry_oracles());
    let t = Instant::now();
    report("SG 5/2 kernel", t, savgol_five_two());
    let t = Instant::now();
    report(
        "TCN forward equivalence and receptive field",
        t,
        tcn_forward(),
    );
    let t = Instant::now();
    report("gradient audit", t, gradient_audit());

    let t = Instant::now();
    let mut runs: Vec<SeedRun> = (0..3).map(run_seed).collect();
    let secs = t.elapsed().as_secs_f64();
    report("transfer learning direction", t, transfer(&runs, secs));
    runs.truncate(1);
    let run = &runs[0];

    let t = Instant::now();
    report("ratio sweep shape", t, ratio_sweep(run));
    let t = Instant::now();
    report("experiment matrix direction", t, matrix(run));
    let t = Instant::now();
    report("online/offline equivalence", t, online_offline(run));
    let t = Instant::now();
    report("latency budget", t, latency(run));
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    report(
        "keypoint and model round trip",
        t,
        round_trip(run, dir.path()),
    );

    let passed = results.iter().filter(|r| r.1).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
