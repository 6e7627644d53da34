use super::roots::poly_roots;
use super::Polynomial;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Zeros with modulus at or above this are treated as unstable.
pub const UNIT_CIRCLE_MARGIN: f64 = 1e-9;
/// Below this magnitude an evaluated factor counts as zero.
pub const SINGULAR_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TfRepr {
    num: Polynomial,
    den: Polynomial,
    dt: f64,
}

/// `H(z) = num(z) / den(z)` sampled every `sample_time` seconds.
///
/// Improper functions are allowed; `preview()` says how many future input
/// samples `simulate` needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfRepr", into = "TfRepr")]
pub struct DiscreteTransferFunction {
    num: Polynomial,
    den: Polynomial,
    sample_time: f64,
}

impl TryFrom<TfRepr> for DiscreteTransferFunction {
    type Error = Error;
    fn try_from(r: TfRepr) -> Result<Self> {
        DiscreteTransferFunction::new(r.num, r.den, r.dt)
    }
}

impl From<DiscreteTransferFunction> for TfRepr {
    fn from(tf: DiscreteTransferFunction) -> Self {
        TfRepr {
            num: tf.num,
            den: tf.den,
            dt: tf.sample_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroClassification {
    pub stable_zeros: Vec<Complex64>,
    pub unstable_zeros: Vec<Complex64>,
    pub gain: f64,
}

impl ZeroClassification {
    /// `gain * Π (z - s_i)`
    pub fn stable_factor(&self) -> Polynomial {
        Polynomial::from_roots(&self.stable_zeros, self.gain)
    }

    /// `Π (z - u_i)` evaluated at z = 1.
    pub fn unstable_at_one(&self) -> f64 {
        self.unstable_zeros
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &u| acc * (1.0 - u))
            .re
    }
}

pub fn is_unstable_root(z: Complex64) -> bool {
    z.norm() >= 1.0 - UNIT_CIRCLE_MARGIN
}

impl DiscreteTransferFunction {
    pub fn new(num: Polynomial, den: Polynomial, sample_time: f64) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::invalid("denominator is the zero polynomial"));
        }
        if !(sample_time.is_finite() && sample_time > 0.0) {
            return Err(Error::invalid(format!(
                "sample time must be > 0, got {sample_time}"
            )));
        }
        if num
            .coeffs()
            .iter()
            .chain(den.coeffs())
            .any(|c| !c.is_finite())
        {
            return Err(Error::invalid("non-finite coefficient"));
        }
        Ok(DiscreteTransferFunction {
            num,
            den,
            sample_time,
        })
    }

    pub fn from_coeffs(num: Vec<f64>, den: Vec<f64>, sample_time: f64) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den), sample_time)
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    fn num_degree(&self) -> usize {
        self.num.degree().unwrap_or(0)
    }

    fn den_degree(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    pub fn preview(&self) -> usize {
        self.num_degree().saturating_sub(self.den_degree())
    }

    pub fn relative_degree(&self) -> Result<usize> {
        let (n, d) = (self.num_degree(), self.den_degree());
        if n > d {
            return Err(Error::ImproperSystem { num: n, den: d });
        }
        Ok(d - n)
    }

    pub fn classify_zeros(&self) -> Result<ZeroClassification> {
        if self.num.is_zero() {
            return Err(Error::invalid("numerator is the zero polynomial"));
        }
        let roots = if self.num_degree() == 0 {
            Vec::new()
        } else {
            poly_roots(&self.num)?
        };
        let (unstable_zeros, stable_zeros) = roots.into_iter().partition(|&z| is_unstable_root(z));
        Ok(ZeroClassification {
            stable_zeros,
            unstable_zeros,
            gain: self.num.leading(),
        })
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den_degree() == 0 {
            return Ok(Vec::new());
        }
        poly_roots(&self.den)
    }

    pub fn is_minimum_phase(&self) -> Result<bool> {
        Ok(self.classify_zeros()?.unstable_zeros.is_empty())
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.poles()?.iter().all(|&p| !is_unstable_root(p)))
    }

    pub fn exact_inverse(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::invalid("cannot invert a zero transfer function"));
        }
        Self::new(self.den.clone(), self.num.clone(), self.sample_time)
    }

    /// `D(z) / (N_u(1) * N_s(z))`
    pub fn zos_inverse(&self) -> Result<Self> {
        let zc = self.classify_zeros()?;
        let nu1 = zc.unstable_at_one();
        if nu1.abs() < SINGULAR_EPS {
            return Err(Error::DegenerateApproximation { value: nu1 });
        }
        Self::new(
            self.den.clone(),
            zc.stable_factor().scale(nu1),
            self.sample_time,
        )
    }

    /// `D(z) / N(1)`
    pub fn naive_approx_inverse(&self) -> Result<Self> {
        let n1 = self.num.eval_real(1.0);
        if n1.abs() < SINGULAR_EPS {
            return Err(Error::DegenerateApproximation { value: n1 });
        }
        Self::new(self.den.clone(), Polynomial::constant(n1), self.sample_time)
    }

    pub fn dc_gain(&self) -> Result<f64> {
        let d1 = self.den.eval_real(1.0);
        if d1.abs() < SINGULAR_EPS {
            return Err(Error::PoleAtOne);
        }
        Ok(self.num.eval_real(1.0) / d1)
    }

    pub fn frequency_response(&self, omega: f64) -> Result<Complex64> {
        let z = Complex64::from_polar(1.0, omega);
        let d = self.den.eval(z);
        if d.norm() < SINGULAR_EPS {
            return Err(Error::PoleOnUnitCircle { omega });
        }
        Ok(self.num.eval(z) / d)
    }

    pub fn series(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.num.mul(&other.num),
            self.den.mul(&other.den),
            self.sample_time,
        )
    }

    /// Difference-equation simulation from rest. Inputs outside the given
    /// sequence are zero, so an improper function sees zeros past the tail.
    pub fn simulate(&self, input: &[f64], preview: usize) -> Result<Vec<f64>> {
        if preview < self.preview() {
            return Err(Error::InsufficientPreview {
                required: self.preview(),
                given: preview,
            });
        }
        let a = self.den.coeffs();
        let b = self.num.coeffs();
        let m = a.len() - 1;
        let am = a[m];
        let len = input.len() as isize;
        let u = |i: isize| {
            if (0..len).contains(&i) {
                input[i as usize]
            } else {
                0.0
            }
        };
        let mut y = vec![0.0; input.len()];
        for t in 0..input.len() {
            let base = t as isize - m as isize;
            let mut acc = 0.0;
            for (i, &bi) in b.iter().enumerate() {
                acc += bi * u(base + i as isize);
            }
            for (j, &aj) in a[..m].iter().enumerate() {
                let idx = base + j as isize;
                if idx >= 0 {
                    acc -= aj * y[idx as usize];
                }
            }
            y[t] = acc / am;
        }
        Ok(y)
    }

    pub fn impulse_response(&self, len: usize) -> Result<Vec<f64>> {
        let mut imp = vec![0.0; len];
        if len > 0 {
            imp[0] = 1.0;
        }
        self.simulate(&imp, self.preview())
    }
}
