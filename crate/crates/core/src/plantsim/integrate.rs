use crate::{Error, Result};

/// Continuous-time, single-input dynamics `x' = f(x, u)`, `y = h(x)`.
pub trait Plant: Send + Sync {
    fn state_dim(&self) -> usize;

    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]);

    fn output_dim(&self) -> usize {
        self.state_dim()
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

/// Wraps a closure; handy for tests and toy systems.
pub struct FnPlant<F> {
    dim: usize,
    f: F,
}

impl<F> FnPlant<F>
where
    F: Fn(&[f64], f64, &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnPlant { dim, f }
    }
}

impl<F> Plant for FnPlant<F>
where
    F: Fn(&[f64], f64, &mut [f64]) + Send + Sync,
{
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        (self.f)(x, u, dx)
    }
}

/// Classical RK4 with the input held over the step.
pub fn rk4_step<P: Plant + ?Sized>(plant: &P, x: &[f64], u: f64, dt: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    plant.derivative(x, u, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    plant.derivative(&tmp, u, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    plant.derivative(&tmp, u, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    plant.derivative(&tmp, u, &mut k4);

    let next: Vec<f64> = (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteState)
    }
}
