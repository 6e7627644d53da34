//! Acceptance criteria A1 to A8. Each test prints one `A<n> ... PASS|FAIL` line.

use ndarray::Array2;
use nmpinv_core::config::{RunConfig, ScenarioConfig};
use nmpinv_core::experiment::recovery::{linear_recovery_error, random_fast_nmp_system};
use nmpinv_core::experiment::{
    build_registry, build_system, train_generators, ArtifactBundle, ExperimentContext,
    ExperimentResult,
};
use nmpinv_core::invlearn::{
    taylor_correlation_bound, FeatureEncoding, FeatureSpec, InputSelection, ReferenceGenerator,
    Trajectory,
};
use nmpinv_core::mlp::{init_network, Activation, NetworkNorm, NormStats};
use nmpinv_core::plantsim::{
    critically_damped_poles, nmp_surrogate_axis, rk4_step, BaselineSystem, FnPlant, LtiBaseline,
};
use nmpinv_core::polylti::roots::max_residual;
use nmpinv_core::polylti::{poly_roots, DiscreteTransferFunction, Polynomial};
use nmpinv_core::strategy::Method;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

fn report(id: &str, title: &str, pass: bool, detail: String) {
    println!(
        "{id} {title} ... {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

struct PendulumRun {
    fig3: Vec<ExperimentResult>,
    fig4: Vec<ExperimentResult>,
    elapsed: Duration,
}

fn pendulum_run() -> &'static PendulumRun {
    static RUN: OnceLock<PendulumRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let cfg = RunConfig::preset("pendulum_sim").unwrap();
        let (bundle, _) = train_generators(&cfg).unwrap();
        let ctx = context(&cfg, &bundle);
        let mut fig3 = Vec::new();
        let mut fig4 = Vec::new();
        for s in &cfg.scenarios {
            match s {
                ScenarioConfig::Fig3(_) => fig3 = ctx.run_scenario(s).unwrap(),
                ScenarioConfig::Fig4(_) => fig4 = ctx.run_scenario(s).unwrap(),
                _ => {}
            }
        }
        PendulumRun {
            fig3,
            fig4,
            elapsed: start.elapsed(),
        }
    })
}

fn context(cfg: &RunConfig, bundle: &ArtifactBundle) -> ExperimentContext {
    let system = build_system(&bundle.system).unwrap();
    let registry = build_registry(system.as_ref(), Some(bundle));
    ExperimentContext {
        system,
        registry,
        seed: cfg.seed,
        skip_s: cfg.evaluation.skip_s,
    }
}

/// Per scenario, the result of one method.
fn by_scenario(results: &[ExperimentResult], method: Method) -> BTreeMap<String, ExperimentResult> {
    results
        .iter()
        .filter(|r| r.method == method)
        .map(|r| (r.scenario.clone(), r.clone()))
        .collect()
}

#[test]
fn a1_fig3_reduction() {
    let run = pendulum_run();
    let m3 = by_scenario(&run.fig3, Method::ApproxDnn);
    let reds: Vec<(String, f64)> = m3
        .iter()
        .map(|(s, r)| (s.clone(), r.reduction_pct.unwrap_or(f64::NEG_INFINITY)))
        .collect();
    let min = reds.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mean = reds.iter().map(|r| r.1).sum::<f64>() / reds.len() as f64;
    let pass =
        reds.len() == 6 && min >= 40.0 && mean >= 55.0 && run.elapsed <= Duration::from_secs(600);
    let table: Vec<String> = reds.iter().map(|(s, r)| format!("{s}: {r:.1}%")).collect();
    report(
        "A1",
        "fig3 reduction",
        pass,
        format!(
            "min {min:.1}%, mean {mean:.1}%, {:.0} s; {}",
            run.elapsed.as_secs_f64(),
            table.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn a2_past_reference_ablation_diverges() {
    let run = pendulum_run();
    let abl = by_scenario(&run.fig4, Method::AblationPastU);
    let m3 = by_scenario(&run.fig4, Method::ApproxDnn);
    let hits: Vec<&String> = abl
        .iter()
        .filter(|(s, r)| {
            r.diverged
                && r.divergence_time.is_some_and(|t| t <= 60.0)
                && m3.get(*s).is_some_and(|m| !m.diverged)
        })
        .map(|(s, _)| s)
        .collect();
    let worst: Vec<String> = abl
        .iter()
        .map(|(s, r)| match r.rms {
            Some(v) => format!("{s}: rms {v:.3}"),
            None => format!(
                "{s}: diverged at {:.1} s",
                r.divergence_time.unwrap_or(f64::NAN)
            ),
        })
        .collect();
    let pass = !hits.is_empty();
    report(
        "A2",
        "past-reference ablation diverges",
        pass,
        worst.join(", "),
    );
    assert!(pass);
}

#[test]
fn a3_linear_recovery_of_naive_inverse() {
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for sys in 0..10u64 {
        let h = random_fast_nmp_system(1000 + sys).unwrap();
        for seed in 0..10u64 {
            let e = linear_recovery_error(&h, seed).unwrap();
            worst = worst.max(e);
            if e < 0.05 {
                passed += 1;
            }
        }
    }
    let pass = passed >= 90;
    report(
        "A3",
        "linear recovery of D(z)/N(1)",
        pass,
        format!("{passed}/100 within 5%, worst {:.2}%", 100.0 * worst),
    );
    assert!(pass);
}

#[test]
fn a4_three_way_ordering() {
    let cfg = RunConfig::preset("quad_surrogate").unwrap();
    let (bundle, _) = train_generators(&cfg).unwrap();
    let ctx = context(&cfg, &bundle);
    let results = ctx.run_scenario(&cfg.scenarios[0]).unwrap();
    let red = |m| -> Vec<f64> {
        by_scenario(&results, m)
            .values()
            .map(|r| r.reduction_pct.unwrap_or(f64::NEG_INFINITY))
            .collect()
    };
    let (m1, m2, m3) = (
        red(Method::ExactDnn),
        red(Method::Zos),
        red(Method::ApproxDnn),
    );
    let mut sorted = m3.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[4] + sorted[5]);
    let m3_beats_m2 = m3.iter().zip(&m2).filter(|(a, b)| a > b).count();
    let m1_low = m1.iter().filter(|&&r| r <= 10.0).count();
    let pass = m3.len() == 10 && median >= 40.0 && m3_beats_m2 >= 8 && m1_low >= 8;
    let med = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        0.5 * (s[4] + s[5])
    };
    report(
        "A4",
        "three-way ordering",
        pass,
        format!(
            "median M3 {median:.1}% (M2 {:.1}%, M1 {:.1}%), M3 > M2 on {m3_beats_m2}/10, M1 <= 10% on {m1_low}/10",
            med(&m2),
            med(&m1)
        ),
    );
    assert!(pass);
}

fn random_disk_roots(rng: &mut ChaCha8Rng, count: usize, rmin: f64, rmax: f64) -> Vec<Complex64> {
    let mut out = Vec::new();
    while out.len() < count {
        let r = rng.random_range(rmin..rmax);
        if count - out.len() >= 2 && rng.random_bool(0.5) {
            let p = Complex64::from_polar(r, rng.random_range(0.1..3.0));
            out.extend([p, p.conj()]);
        } else {
            out.push(Complex64::new(
                if rng.random_bool(0.5) { r } else { -r },
                0.0,
            ));
        }
    }
    out
}

#[test]
fn a5_lti_inverse_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cascade_worst: f64 = 0.0;
    for _ in 0..50 {
        let order = rng.random_range(1..=4);
        let nz = rng.random_range(0..=order);
        let den = Polynomial::from_roots(&random_disk_roots(&mut rng, order, 0.1, 0.9), 1.0);
        let num = Polynomial::from_roots(
            &random_disk_roots(&mut rng, nz, 0.1, 0.9),
            rng.random_range(0.5..2.0),
        );
        let h = DiscreteTransferFunction::new(num, den, 0.1).unwrap();
        let inv = h.exact_inverse().unwrap();
        let u: Vec<f64> = (0..400)
            .map(|k| (0.07 * k as f64).sin() + 0.5 * (0.31 * k as f64).cos())
            .collect();
        let y = h.simulate(&u, 0).unwrap();
        let back = inv.simulate(&y, inv.preview()).unwrap();
        for k in 50..u.len() - inv.preview() {
            cascade_worst = cascade_worst.max((back[k] - u[k]).abs());
        }
    }

    let mut dc_worst: f64 = 0.0;
    let mut poles_inside = true;
    for _ in 0..50 {
        let order = rng.random_range(2..=4);
        let den = Polynomial::from_roots(&random_disk_roots(&mut rng, order, 0.1, 0.95), 1.0);
        let nz = rng.random_range(1..order);
        let mut zeros = random_disk_roots(&mut rng, nz - 1, 0.1, 0.9);
        zeros.push(Complex64::new(
            rng.random_range(1.05..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            0.0,
        ));
        let h = DiscreteTransferFunction::new(
            Polynomial::from_roots(&zeros, rng.random_range(0.5..2.0)),
            den,
            0.1,
        )
        .unwrap();
        let zos = h.zos_inverse().unwrap();
        dc_worst = dc_worst.max((h.dc_gain().unwrap() * zos.dc_gain().unwrap() - 1.0).abs());
        poles_inside &= zos.poles().unwrap().iter().all(|p| p.norm() < 1.0);
    }
    let pass = cascade_worst < 1e-9 && dc_worst < 1e-10 && poles_inside;
    report(
        "A5",
        "LTI inverse identities",
        pass,
        format!("cascade {cascade_worst:.1e}, dc product {dc_worst:.1e}, zos poles inside: {poles_inside}"),
    );
    assert!(pass);
}

#[test]
fn a6_numerics() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut grad_worst: f64 = 0.0;
    for i in 0..100u64 {
        let depth = rng.random_range(0..3);
        let mut sizes = vec![rng.random_range(1..5)];
        sizes.extend((0..depth).map(|_| rng.random_range(2..8)));
        sizes.push(rng.random_range(1..3));
        let act = if i % 2 == 0 {
            Activation::Tanh
        } else {
            Activation::Relu
        };
        let mut net = init_network(&sizes, act, i).unwrap();
        // random biases too, so no relu sits exactly on its kink
        let q: Vec<f64> = net
            .params_flat()
            .iter()
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        net.set_params_flat(&q).unwrap();
        let b = 6;
        let x = Array2::from_shape_fn((b, sizes[0]), |_| rng.random_range(-1.0..1.0));
        let t = Array2::from_shape_fn((b, *sizes.last().unwrap()), |_| rng.random_range(-1.0..1.0));
        let (g, _) = net.backprop(x.view(), t.view()).unwrap();
        let g = g.flat();
        let p = net.params_flat();
        let h = 1e-6;
        let fd: Vec<f64> = (0..p.len())
            .map(|j| {
                let loss = |d: f64| {
                    let mut q = p.clone();
                    q[j] += d;
                    let mut n = net.clone();
                    n.set_params_flat(&q).unwrap();
                    n.backprop(x.view(), t.view()).unwrap().1
                };
                (loss(h) - loss(-h)) / (2.0 * h)
            })
            .collect();
        let diff = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        grad_worst = grad_worst.max(diff / scale);
    }

    // harmonic oscillator, exact solution cos/sin
    let osc = FnPlant::new(2, |x: &[f64], _u: f64, dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -x[0];
    });
    let err = |dt: f64| {
        let steps = (2.0 / dt).round() as usize;
        let mut x = vec![1.0, 0.0];
        for _ in 0..steps {
            x = rk4_step(&osc, &x, 0.0, dt).unwrap();
        }
        ((x[0] - 2f64.cos()).powi(2) + (x[1] + 2f64.sin()).powi(2)).sqrt()
    };
    let factors: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&dt| err(dt) / err(dt / 2.0))
        .collect();
    let rk_min = factors.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut root_worst: f64 = 0.0;
    for _ in 0..200 {
        let deg = rng.random_range(1..=8);
        let mut c: Vec<f64> = (0..deg).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lead = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        c.push(lead);
        let p = Polynomial::new(c);
        root_worst = root_worst.max(max_residual(&p, &poly_roots(&p).unwrap()));
    }
    let pass = grad_worst < 1e-4 && rk_min >= 14.0 && root_worst < 1e-8;
    report(
        "A6",
        "numerics",
        pass,
        format!("gradient rel err {grad_worst:.1e}, rk4 factor {rk_min:.2}, root residual {root_worst:.1e}"),
    );
    assert!(pass);
}

#[test]
fn a7_bounded_references_and_outputs() {
    let dt = 1.0 / 7.0;
    let tf = nmp_surrogate_axis(1.2, 1, critically_damped_poles(3.0, dt), dt).unwrap();
    let base = LtiBaseline::new("surrogate", tf, 1e6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut violations, mut diverged, mut worst_ratio) = (0usize, 0usize, 0.0f64);
    for i in 0..100u64 {
        let n = rng.random_range(1..=4);
        let encoding = [
            FeatureEncoding::Raw,
            FeatureEncoding::Offsets,
            FeatureEncoding::FiniteDifference,
        ][i as usize % 3];
        let velocity = encoding == FeatureEncoding::Offsets && rng.random_bool(0.5);
        let spec = FeatureSpec::new(InputSelection::ApproxInverse { n })
            .with_encoding(encoding)
            .with_velocity(velocity);
        let d = spec.feature_count();
        let act = if i % 2 == 0 {
            Activation::Tanh
        } else {
            Activation::Relu
        };
        let mut net = init_network(&[d, 16, 16, 1], act, i).unwrap();
        net.set_norm(Some(NetworkNorm {
            input: NormStats {
                mean: (0..d).map(|_| rng.random_range(-0.5..0.5)).collect(),
                std: (0..d).map(|_| rng.random_range(0.2..2.0)).collect(),
            },
            output: NormStats {
                mean: vec![rng.random_range(-0.5..0.5)],
                std: vec![rng.random_range(0.2..2.0)],
            },
        }));
        let g = ReferenceGenerator::new(spec, dt, net).unwrap();
        for j in 0..100 {
            let b = rng.random_range(0.1..3.0);
            let len = 100;
            let desired: Vec<f64> = if j % 2 == 0 {
                (0..len).map(|_| rng.random_range(-b..b)).collect()
            } else {
                let t = rng.random_range(2.0..20.0);
                Trajectory::sinusoid(b, t, len as f64 * dt, dt).values
            };
            let bound = g.reference_bound(b).unwrap();
            let u = g.generate_sequence(&desired).unwrap();
            let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            worst_ratio = worst_ratio.max(peak / bound);
            if !(peak <= bound) {
                violations += 1;
            }
            if base.run(&u).unwrap().diverged {
                diverged += 1;
            }
        }
    }
    let pass = violations == 0 && diverged == 0;
    report(
        "A7",
        "bounded references and outputs",
        pass,
        format!("{violations} bound violations, {diverged} divergences, max |u| / bound {worst_ratio:.3}"),
    );
    assert!(pass);
}

#[test]
fn a8_sample_correlation_bound() {
    let cfg = RunConfig::preset("pendulum_sim").unwrap();
    let nmpinv_core::config::TrajectorySet::SinusoidGrid(grid) = &cfg.training.trajectories else {
        panic!("pendulum preset uses a sinusoid grid");
    };
    let dt = 0.015;
    let mut worst: f64 = 0.0;
    for &a in &grid.amplitudes {
        for &t in &grid.periods {
            let u = Trajectory::sinusoid(a, t, grid.duration, dt).values;
            for p in [1usize, 2] {
                let bound = taylor_correlation_bound(a, t, dt, p).unwrap();
                let emp = u
                    .windows(p + 1)
                    .map(|w| (w[p] - w[0]).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(emp / bound);
            }
        }
    }
    let pass = worst <= 1.0;
    report(
        "A8",
        "sample correlation bound",
        pass,
        format!("max empirical / bound {worst:.4}"),
    );
    assert!(pass);
}
