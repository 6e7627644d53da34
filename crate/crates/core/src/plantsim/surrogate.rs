use crate::polylti::{is_unstable_root, DiscreteTransferFunction, Polynomial};
use crate::{Error, Result};
use num_complex::Complex64;

/// Per-axis stand-in for a stabilized vehicle with an injected unstable zero:
/// `g (z - z0) / (z^d (z^2 + p1 z + p0))`, `g` normalizing the DC gain to 1.
pub fn nmp_surrogate_axis(
    zero: f64,
    delay_steps: usize,
    poles: [Complex64; 2],
    dt: f64,
) -> Result<DiscreteTransferFunction> {
    if !(zero > 1.0) {
        return Err(Error::invalid(format!(
            "surrogate zero must lie outside the unit circle, got {zero}"
        )));
    }
    if poles.iter().any(|&p| is_unstable_root(p)) {
        return Err(Error::invalid("surrogate poles must be stable"));
    }
    let quad = Polynomial::from_roots(&poles, 1.0);
    let den = quad.mul(&Polynomial::monomial(delay_steps, 1.0));
    let g = den.eval_real(1.0) / (1.0 - zero);
    DiscreteTransferFunction::new(Polynomial::new(vec![-zero * g, g]), den, dt)
}

/// Critically damped double pole at `exp(-rate * dt)`.
pub fn critically_damped_poles(rate: f64, dt: f64) -> [Complex64; 2] {
    let p = (-rate * dt).exp();
    [Complex64::new(p, 0.0); 2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_dc_gain_and_nmp() {
        let dt = 1.0 / 7.0;
        for d in 0..3 {
            let h = nmp_surrogate_axis(1.2, d, critically_damped_poles(3.0, dt), dt).unwrap();
            assert!((h.dc_gain().unwrap() - 1.0).abs() < 1e-12);
            assert!(!h.is_minimum_phase().unwrap());
            assert_eq!(h.relative_degree().unwrap(), d + 1);
            let zc = h.classify_zeros().unwrap();
            assert!((zc.unstable_at_one() + 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = critically_damped_poles(3.0, 0.1);
        assert!(nmp_surrogate_axis(0.9, 0, p, 0.1).is_err());
        assert!(nmp_surrogate_axis(1.2, 0, [Complex64::new(1.1, 0.0); 2], 0.1).is_err());
    }
}
