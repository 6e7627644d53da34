use nmpinv_core::invlearn::*;
use nmpinv_core::mlp::{Activation, FeedforwardNetwork, Optimizer, TrainingConfig};
use nmpinv_core::plantsim::{
    LtiBaseline, PendulumBaseline, PendulumCart, PendulumCartParams, SimOptions,
    StateFeedbackController, K1,
};
use nmpinv_core::polylti::DiscreteTransferFunction;
use nmpinv_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn multisine(len: usize, seed: u64, periods: (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            let p = (rng.random_range(periods.0.ln()..periods.1.ln())).exp();
            (
                rng.random_range(0.3..1.0),
                p,
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    (0..len)
        .map(|k| {
            comps
                .iter()
                .map(|(a, p, ph)| a * (2.0 * PI * k as f64 / p + ph).sin())
                .sum()
        })
        .collect()
}

fn lstsq() -> TrainingConfig {
    TrainingConfig {
        optimizer: Optimizer::LeastSquares,
        ..TrainingConfig::default()
    }
}

fn probe_linear(net: &FeedforwardNetwork) -> Vec<f64> {
    let d = net.input_dim();
    let zero = net.predict(&vec![0.0; d]).unwrap()[0];
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            net.predict(&e).unwrap()[0] - zero
        })
        .collect()
}

fn pendulum_baseline() -> PendulumBaseline {
    let ctrl = StateFeedbackController::position_velocity(K1.to_vec()).unwrap();
    PendulumBaseline::new(
        "pendulum",
        PendulumCart::force_driven(PendulumCartParams::default()),
        ctrl,
        SimOptions::default(),
    )
    .unwrap()
}

#[test]
fn exact_inverse_coefficients_are_recovered() {
    // minimum phase, relative degree 1: (z - 0.5) / (z^2 - 1.2 z + 0.5)
    let h =
        DiscreteTransferFunction::from_coeffs(vec![-0.5, 1.0], vec![0.5, -1.2, 1.0], 0.1).unwrap();
    let base = LtiBaseline::new("mp", h.clone(), 1e6).unwrap();
    let u = Trajectory {
        name: "excite".into(),
        sample_time: 0.1,
        values: multisine(3000, 1, (3.0, 60.0)),
    };
    let logs = collect_baseline_data(&base, &[u]).unwrap();
    let spec = FeatureSpec::new(InputSelection::ExactInverse { n: 2, r: 1 });
    let (g, _) = train_inverse(
        &spec,
        &logs,
        &NetworkPreset::linear(),
        &lstsq(),
        &DatasetOptions::default(),
    )
    .unwrap();
    // u(k) = y(k-1) d0 + y(k) d1 + y(k+1) d2 - n0 u(k-1), all over n1
    let want = [0.5, -1.2, 1.0, 0.5];
    let got = probe_linear(&g.network);
    for (a, b) in got.iter().zip(want) {
        assert!((a - b).abs() < 1e-3, "{got:?}");
    }
}

#[test]
fn approx_inverse_matches_naive_inverse_when_sampled_fast() {
    // poles close to z = 1 with slow excitation
    let poles = [0.9995, 0.9990, 0.9993];
    let den = nmpinv_core::polylti::Polynomial::from_roots(
        &poles.map(|p| num_complex::Complex64::new(p, 0.0)),
        1.0,
    );
    let h = DiscreteTransferFunction::new(
        nmpinv_core::polylti::Polynomial::new(vec![-1.4, 1.0]),
        den,
        0.01,
    )
    .unwrap();
    let base = LtiBaseline::new("nmp", h.clone(), 1e9).unwrap();
    let u = Trajectory {
        name: "excite".into(),
        sample_time: 0.01,
        values: multisine(200_000, 3, (5000.0, 20000.0)),
    };
    let logs = collect_baseline_data(&base, &[u]).unwrap();
    let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 3 })
        .with_encoding(FeatureEncoding::FiniteDifference);
    let data = DatasetOptions {
        skip_initial: 0,
        target_size: Some(20_000),
        seed: 1,
    };
    let (g, _) = train_inverse(&spec, &logs, &NetworkPreset::linear(), &lstsq(), &data).unwrap();
    let (c, _) = g.linear_coefficients().unwrap();
    let naive = h.naive_approx_inverse().unwrap();
    let scale = naive.den().coeffs()[0];
    let want: Vec<f64> = naive.num().coeffs().iter().map(|v| v / scale).collect();
    let err = c
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        / want.iter().map(|b| b * b).sum::<f64>().sqrt();
    assert!(err < 0.05, "{c:?} vs {want:?}");
}

#[test]
fn identical_seeds_give_identical_artifacts() {
    let base = pendulum_baseline();
    let trajs = generate_training_trajectories(&[1.0, 2.0], &[5.0, 10.0], 12.0, 0.015).unwrap();
    let logs = collect_baseline_data(&base, &trajs).unwrap();
    let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 2 })
        .with_encoding(FeatureEncoding::FiniteDifference);
    let cfg = TrainingConfig {
        epochs: 5,
        ..TrainingConfig::default()
    };
    let data = DatasetOptions {
        skip_initial: 133,
        target_size: Some(1000),
        seed: 2,
    };
    let a = train_inverse(&spec, &logs, &NetworkPreset::pendulum(), &cfg, &data)
        .unwrap()
        .0;
    let b = train_inverse(&spec, &logs, &NetworkPreset::pendulum(), &cfg, &data)
        .unwrap()
        .0;
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let back = ReferenceGenerator::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);

    let desired = Trajectory::sinusoid(2.0, 7.0, 10.0, 0.015).values;
    let seq = a.generate_sequence(&desired).unwrap();
    let (lo, hi) = trajs
        .iter()
        .zip(&logs)
        .fold((f64::MAX, f64::MIN), |(lo, hi), (_, l)| {
            l.u.iter()
                .fold((lo, hi), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        });
    let span = hi - lo;
    assert!(seq.iter().all(|&u| u > lo - span && u < hi + span));
    for k in [0, 100, 500] {
        let w = &desired[k..k + 3];
        assert_eq!(a.generate_reference(w).unwrap(), seq[k]);
    }
    assert!(matches!(
        a.generate_reference(&desired[..2]),
        Err(Error::WindowLength {
            expected: 3,
            found: 2
        })
    ));
}

#[test]
fn zero_window_gives_zero_reference() {
    let base = pendulum_baseline();
    let trajs = generate_training_trajectories(&[1.0, 2.0], &[5.0, 8.0], 16.0, 0.015).unwrap();
    let logs = collect_baseline_data(&base, &trajs).unwrap();
    let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 2 })
        .with_encoding(FeatureEncoding::FiniteDifference);
    let cfg = TrainingConfig {
        learning_rate: 1e-2,
        batch_size: 64,
        epochs: 40,
        ..TrainingConfig::default()
    };
    let data = DatasetOptions {
        skip_initial: 133,
        target_size: None,
        seed: 0,
    };
    let (g, rep) = train_inverse(&spec, &logs, &NetworkPreset::pendulum(), &cfg, &data).unwrap();
    assert!(rep.best_val_loss < 0.01, "{rep:?}");
    assert!(g.generate_reference(&[0.0; 3]).unwrap().abs() < 0.05);
}

#[test]
fn recursive_generators_need_sequences() {
    let spec = FeatureSpec::new(InputSelection::AugmentedPast { n: 1, past: 1 });
    let net = FeedforwardNetwork::from_parameters(
        vec![3, 1],
        Activation::Tanh,
        vec![vec![0.0, 0.0, 1.1]],
        vec![vec![1.0]],
    )
    .unwrap();
    let g = ReferenceGenerator::new(spec, 0.1, net).unwrap();
    assert!(g.generate_reference(&[0.0, 0.0]).is_err());
    // u(k) = 1 + 1.1 u(k-1) from u(-1) = 0 grows geometrically
    let u = g.generate_sequence(&[0.0; 30]).unwrap();
    assert_eq!(u[0], 1.0);
    assert!((u[1] - 2.1).abs() < 1e-12);
    assert!(u[29] > 100.0);
    assert!(g.reference_bound(1.0).is_none());
}

#[test]
fn baseline_divergence_is_reported() {
    let h = DiscreteTransferFunction::from_coeffs(vec![1.0], vec![-0.5, 1.0], 0.1).unwrap();
    let base = LtiBaseline::new("small", h, 1.0).unwrap();
    let ok = Trajectory {
        name: "ok".into(),
        sample_time: 0.1,
        values: vec![0.1; 20],
    };
    let big = Trajectory {
        name: "big".into(),
        sample_time: 0.1,
        values: vec![5.0; 20],
    };
    let err = collect_baseline_data(&base, &[ok, big]).unwrap_err();
    assert!(matches!(err, Error::BaselineDiverged { id: 1, .. }));
    let zero = Trajectory {
        name: "zero".into(),
        sample_time: 0.1,
        values: vec![0.0; 20],
    };
    let logs = collect_baseline_data(&base, &[zero]).unwrap();
    assert!(logs[0].u.iter().chain(&logs[0].y).all(|&v| v == 0.0));
}

#[test]
fn pendulum_logs_lag_the_reference() {
    let base = pendulum_baseline();
    let tr = Trajectory::sinusoid(1.0, 10.0, 30.0, 0.015);
    let logs = collect_baseline_data(&base, &[tr]).unwrap();
    let log = &logs[0];
    let peak = log.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(peak < 3.0);
    // output crosses zero upward later than the reference does, after the transient
    let cross = |s: &[f64]| {
        (800..s.len() - 1)
            .find(|&k| s[k] <= 0.0 && s[k + 1] > 0.0)
            .unwrap()
    };
    assert!(cross(&log.y) > cross(&log.u));
}

#[test]
fn taylor_bound_holds_and_tightens_with_sampling_rate() {
    let gap = |a: f64, t: f64, dt: f64, p: usize| {
        let s = Trajectory::sinusoid(a, t, 2.0 * t, dt).values;
        (0..s.len() - p)
            .map(|k| (s[k + p] - s[k]).abs())
            .fold(0.0, f64::max)
    };
    for a in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        for t in [5.0, 10.0, 15.0, 20.0, 25.0] {
            for p in [1, 2] {
                assert!(gap(a, t, 0.015, p) <= taylor_correlation_bound(a, t, 0.015, p).unwrap());
            }
        }
    }
    let gaps: Vec<f64> = [0.06, 0.03, 0.015]
        .iter()
        .map(|&dt| gap(1.0, 10.0, dt, 1))
        .collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.05, "{gaps:?}");
    }
}

#[test]
fn single_sinusoid_features_admit_a_function_fit() {
    let base = pendulum_baseline();
    let a = 2.0;
    let tr = Trajectory::sinusoid(a, 6.0, 60.0, 0.015);
    let logs = collect_baseline_data(&base, &[tr]).unwrap();
    let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 2 });
    let ds = build_features(
        &spec,
        &logs,
        &DatasetOptions {
            skip_initial: 1333,
            ..DatasetOptions::default()
        },
    )
    .unwrap();
    let rows: Vec<Vec<f64>> = ds.features.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut pairs = 0;
    let mut spread = 0.0f64;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            if d < 1e-6 {
                pairs += 1;
                spread = spread.max((ds.labels[[i, 0]] - ds.labels[[j, 0]]).abs());
            }
        }
    }
    assert!(pairs > 100, "{pairs}");
    assert!(spread < 1e-3 * a, "{spread}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_references_respect_the_network_bound(seed in 0u64..5000, b in 0.1f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 3 })
            .with_encoding(if seed % 2 == 0 { FeatureEncoding::Offsets } else { FeatureEncoding::FiniteDifference })
            .with_velocity(seed % 3 == 0);
        let mut net = nmpinv_core::mlp::init_network(&[spec.feature_count(), 8, 1], Activation::Relu, seed).unwrap();
        let stats = nmpinv_core::mlp::NormStats {
            mean: (0..spec.feature_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            std: (0..spec.feature_count()).map(|_| rng.random_range(0.1..2.0)).collect(),
        };
        net.set_norm(Some(nmpinv_core::mlp::NetworkNorm { input: stats, output: nmpinv_core::mlp::NormStats { mean: vec![0.3], std: vec![1.7] } }));
        let g = ReferenceGenerator::new(spec, 0.1, net).unwrap();
        let bound = g.reference_bound(b).unwrap();
        let yd: Vec<f64> = (0..200).map(|_| rng.random_range(-b..=b)).collect();
        let u = g.generate_sequence(&yd).unwrap();
        prop_assert!(u.iter().all(|v| v.abs() <= bound));
    }
}
