use super::{Plant, StateFeedbackController};
use crate::polylti::{DiscreteTransferFunction, Polynomial};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

/// State-space model. `sample_time` is `None` for continuous time.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub sample_time: Option<f64>,
}

impl LinearModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        sample_time: Option<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        let check = |ctx, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context: ctx,
                    expected,
                    found,
                })
            }
        };
        check("A columns", n, a.ncols())?;
        check("B rows", n, b.nrows())?;
        check("C columns", n, c.ncols())?;
        check("D rows", c.nrows(), d.nrows())?;
        check("D columns", b.ncols(), d.ncols())?;
        if let Some(dt) = sample_time {
            if !(dt > 0.0) {
                return Err(Error::invalid("discrete model needs sample_time > 0"));
            }
        }
        Ok(LinearModel {
            a,
            b,
            c,
            d,
            sample_time,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// `A - B K` for a single-input model.
    pub fn closed_loop_matrix(&self, gain: &[f64]) -> Result<DMatrix<f64>> {
        let k = gain_row(gain, self.state_dim())?;
        Ok(&self.a - self.b.column(0) * k)
    }
}

fn gain_row(gain: &[f64], n: usize) -> Result<RowDVector<f64>> {
    if gain.len() != n {
        return Err(Error::DimensionMismatch {
            context: "gain row",
            expected: n,
            found: gain.len(),
        });
    }
    Ok(RowDVector::from_row_slice(gain))
}

/// Central-difference Jacobians around `(x0, u0)`.
pub fn linearize<P: Plant + ?Sized>(plant: &P, x0: &[f64], u0: f64) -> Result<LinearModel> {
    let n = plant.state_dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "operating state",
            expected: n,
            found: x0.len(),
        });
    }
    let p = plant.output_dim();
    let f = |x: &[f64], u: f64| {
        let mut dx = vec![0.0; n];
        plant.derivative(x, u, &mut dx);
        dx
    };
    let step = |v: f64| 1e-6 * v.abs().max(1.0);

    let mut a = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(p, n);
    for j in 0..n {
        let h = step(x0[j]);
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp, u0), f(&xm, u0));
        let (hp, hm) = (plant.output(&xp), plant.output(&xm));
        for i in 0..n {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
        for i in 0..p {
            c[(i, j)] = (hp[i] - hm[i]) / (2.0 * h);
        }
    }
    let h = step(u0);
    let (fp, fm) = (f(x0, u0 + h), f(x0, u0 - h));
    let b = DMatrix::from_fn(n, 1, |i, _| (fp[i] - fm[i]) / (2.0 * h));
    // output maps do not depend on the input for these plants
    let d = DMatrix::zeros(p, 1);

    for (m, name) in [(&a, 0usize), (&b, 1), (&c, 2)] {
        if let Some(idx) = m.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % m.nrows(), idx / m.nrows());
            log::error!("non-finite entry in linearization matrix #{name}");
            return Err(Error::NonFiniteJacobian { row, col });
        }
    }
    LinearModel::new(a, b, c, d, None)
}

/// Matrix exponential by scaling and squaring around a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings);
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=60 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-16 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Zero-order-hold discretization via the augmented exponential.
pub fn discretize_zoh(model: &LinearModel, dt: f64) -> Result<LinearModel> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let n = model.state_dim();
    let m = model.b.ncols();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&model.a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(&model.b * dt));
    let e = expm(&aug);
    LinearModel::new(
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
        model.c.clone(),
        model.d.clone(),
        Some(dt),
    )
}

pub fn controllability_matrix(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut w = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        w.set_column(j, &col);
        col = a * col;
    }
    w
}

/// Ackermann's formula: `K = e_n^T W_c^{-1} phi(A)`, so that `eig(A - B K)` are the requested poles.
pub fn pole_place_siso(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    poles: &[Complex64],
) -> Result<Vec<f64>> {
    let n = a.nrows();
    if poles.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "pole placement",
            expected: n,
            found: poles.len().min(b.len()),
        });
    }
    let w = controllability_matrix(a, b);
    let sv = w.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition < 1e12) {
        return Err(Error::Uncontrollable { condition });
    }
    let phi = Polynomial::from_roots(poles, 1.0);
    let mut phi_a = DMatrix::zeros(n, n);
    let mut power = DMatrix::identity(n, n);
    for &c in phi.coeffs() {
        phi_a += &power * c;
        power = &power * a;
    }
    let mut e_n = DVector::zeros(n);
    e_n[n - 1] = 1.0;
    let q = w
        .transpose()
        .lu()
        .solve(&e_n)
        .ok_or(Error::Uncontrollable { condition })?;
    let k = q.transpose() * phi_a;
    Ok(k.iter().copied().collect())
}

/// Characteristic polynomial and adjugate terms of `zI - A`:
/// `adj(zI - A) = sum_k M_k z^(n-k)` for k = 1..n.
pub fn leverrier_faddeev(a: &DMatrix<f64>) -> (Polynomial, Vec<DMatrix<f64>>) {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut ms = Vec::with_capacity(n);
    let mut m = DMatrix::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[n - k + 1];
        c[n - k] = -(a * &m).trace() / k as f64;
        ms.push(m.clone());
    }
    (Polynomial::new(c), ms)
}

/// SISO transfer function `c (zI - A)^{-1} b + d`.
pub fn state_space_tf(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &RowDVector<f64>,
    d: f64,
    dt: f64,
) -> Result<DiscreteTransferFunction> {
    let n = a.nrows();
    let (den, ms) = leverrier_faddeev(a);
    let mut num = vec![0.0; n + 1];
    for (k, m) in ms.iter().enumerate() {
        num[n - 1 - k] = (c * m * b)[(0, 0)];
    }
    let num = Polynomial::new(num).add(&den.scale(d));
    DiscreteTransferFunction::new(trim_leading(num), den, dt)
}

/// Zero out round-off in the highest-order coefficients.
pub(crate) fn trim_leading(p: Polynomial) -> Polynomial {
    let scale = p.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut v = p.coeffs().to_vec();
    while let Some(&last) = v.last() {
        if last.abs() <= 1e-12 * scale && v.len() > 1 {
            v.pop();
        } else {
            break;
        }
    }
    Polynomial::new(v)
}

fn output_row(model: &LinearModel, output_index: usize) -> Result<(RowDVector<f64>, f64)> {
    if output_index >= model.c.nrows() {
        return Err(Error::DimensionMismatch {
            context: "output index",
            expected: model.c.nrows(),
            found: output_index,
        });
    }
    Ok((
        model.c.row(output_index).into_owned(),
        model.d[(output_index, 0)],
    ))
}

/// Position reference to output for a discrete model with the controller
/// running at the model's rate.
pub fn closed_loop_tf(
    model: &LinearModel,
    controller: &StateFeedbackController,
    output_index: usize,
) -> Result<DiscreteTransferFunction> {
    let dt = model
        .sample_time
        .ok_or_else(|| Error::invalid("closed_loop_tf needs a discrete model"))?;
    let n = model.state_dim();
    let k = gain_row(&controller.gain, n)?;
    let acl = model.closed_loop_matrix(&controller.gain)?;
    let k_ref = controller.gain[controller.reference_map.position_index];
    let b: DVector<f64> = model.b.column(0) * k_ref;
    let (c_row, d) = output_row(model, output_index)?;
    let c_cl = &c_row - &k * d;
    state_space_tf(&acl, &b, &c_cl, d * k_ref, dt)
}

/// Position reference to output when a continuous-time controller sees a
/// reference held over `module_dt`, with the velocity slot (if any) fed by
/// central differences of the position reference.
pub fn reference_tf(
    continuous: &LinearModel,
    controller: &StateFeedbackController,
    module_dt: f64,
    output_index: usize,
) -> Result<DiscreteTransferFunction> {
    if continuous.sample_time.is_some() {
        return Err(Error::invalid("reference_tf expects a continuous model"));
    }
    let n = continuous.state_dim();
    let acl = continuous.closed_loop_matrix(&controller.gain)?;
    let map = controller.reference_map;
    let b0 = continuous.b.column(0).into_owned();
    let mut inputs = DMatrix::zeros(n, 2);
    inputs.set_column(0, &(&b0 * controller.gain[map.position_index]));
    if let Some(v) = map.velocity_index {
        inputs.set_column(1, &(&b0 * controller.gain[v]));
    }
    let (c_row, d) = output_row(continuous, output_index)?;
    if d != 0.0 {
        return Err(Error::invalid("reference_tf assumes no direct feedthrough"));
    }
    let cl = LinearModel::new(
        acl,
        inputs,
        DMatrix::from_row_slice(1, n, c_row.as_slice()),
        DMatrix::zeros(1, 2),
        None,
    )?;
    let disc = discretize_zoh(&cl, module_dt)?;
    let c = disc.c.row(0).into_owned();
    let pos = state_space_tf(&disc.a, &disc.b.column(0).into_owned(), &c, 0.0, module_dt)?;
    if map.velocity_index.is_none() || disc.b.column(1).iter().all(|&v| v == 0.0) {
        return Ok(pos);
    }
    let vel = state_space_tf(&disc.a, &disc.b.column(1).into_owned(), &c, 0.0, module_dt)?;
    // (z^2 - 1) / (2 T z)
    let two_t = 2.0 * module_dt;
    let num = pos
        .num()
        .mul(&Polynomial::monomial(1, two_t))
        .add(&vel.num().mul(&Polynomial::new(vec![-1.0, 0.0, 1.0])));
    let den = pos.den().mul(&Polynomial::monomial(1, two_t));
    DiscreteTransferFunction::new(trim_leading(num), den, module_dt)
}
