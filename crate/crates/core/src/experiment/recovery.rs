//! Fast-sampling check: a linear network on the approximate-inverse window
//! should land on the naive inverse `D(z) / N(1)`.

use crate::invlearn::{
    collect_baseline_data, train_inverse, DatasetOptions, FeatureEncoding, FeatureSpec,
    InputSelection, NetworkPreset, Trajectory,
};
use crate::mlp::{Optimizer, TrainingConfig};
use crate::plantsim::LtiBaseline;
use crate::polylti::{DiscreteTransferFunction, Polynomial};
use crate::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const RECOVERY_SAMPLES: usize = 200_000;
pub const RECOVERY_ROWS: usize = 20_000;

/// Stable system of order 2 to 4 with every pole within 1e-3 of z = 1, one
/// zero in (1.05, 2) and numerator `z - zero`.
pub fn random_fast_nmp_system(seed: u64) -> Result<DiscreteTransferFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = rng.random_range(2..=4);
    let mut poles = Vec::with_capacity(order);
    while poles.len() < order {
        let r = 1.0 - rng.random_range(2e-4..1e-3);
        if order - poles.len() >= 2 && rng.random_bool(0.5) {
            let p = Complex64::from_polar(r, rng.random_range(2e-4..1e-3));
            poles.extend([p, p.conj()]);
        } else {
            poles.push(Complex64::new(r, 0.0));
        }
    }
    let den = Polynomial::from_roots(&poles, 1.0);
    let zero = rng.random_range(1.05..2.0);
    DiscreteTransferFunction::new(Polynomial::new(vec![-zero, 1.0]), den, 0.01)
}

/// Six slow sinusoids, periods log-uniform in [5000, 20000] samples.
pub fn slow_multisine(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            let p = rng.random_range(5000f64.ln()..20000f64.ln()).exp();
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

/// Relative coefficient error of the fitted linear map against the naive inverse.
pub fn linear_recovery_error(system: &DiscreteTransferFunction, seed: u64) -> Result<f64> {
    let base = LtiBaseline::new("fast_nmp", system.clone(), f64::INFINITY)?;
    let excite = Trajectory {
        name: "excite".into(),
        sample_time: system.sample_time(),
        values: slow_multisine(RECOVERY_SAMPLES, seed),
    };
    let logs = collect_baseline_data(&base, &[excite])?;
    let n = system.den().degree().unwrap_or(0);
    let spec = FeatureSpec::new(InputSelection::ApproxInverse { n })
        .with_encoding(FeatureEncoding::FiniteDifference);
    let cfg = TrainingConfig {
        optimizer: Optimizer::LeastSquares,
        seed,
        ..TrainingConfig::default()
    };
    let data = DatasetOptions {
        skip_initial: 0,
        target_size: Some(RECOVERY_ROWS),
        seed,
    };
    let (g, _) = train_inverse(&spec, &logs, &NetworkPreset::linear(), &cfg, &data)?;
    let (c, _) = g.linear_coefficients()?;
    let naive = system.naive_approx_inverse()?;
    let scale = naive.den().coeffs()[0];
    let want: Vec<f64> = naive.num().coeffs().iter().map(|v| v / scale).collect();
    let diff = c
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(diff / want.iter().map(|b| b * b).sum::<f64>().sqrt())
}
