use super::Polynomial;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub const MAX_ITERATIONS: usize = 500;
pub const TOLERANCE: f64 = 1e-12;
/// Accepted value of `|p(root)| / ||coeffs||`.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// All roots of `p`, sorted by real then imaginary part.
///
/// Aberth-Ehrlich first; if it stalls or leaves a large residual the
/// eigenvalues of the companion matrix are used instead.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let degree = match p.degree() {
        Some(d) if d >= 1 => d,
        _ => return Err(Error::invalid("poly_roots needs degree >= 1")),
    };
    let coeffs = p.coeffs();
    let zeros_at_origin = coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = Polynomial::new(coeffs[zeros_at_origin..].to_vec());
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];

    match reduced.degree() {
        Some(0) => {}
        Some(1) => {
            let c = reduced.coeffs();
            roots.push(Complex64::new(-c[0] / c[1], 0.0));
        }
        _ => {
            let found = match aberth(&reduced) {
                Some(r) if max_residual(&reduced, &r) < RESIDUAL_LIMIT => r,
                _ => {
                    log::debug!("aberth failed on degree {degree}, trying companion matrix");
                    let r = polish(&reduced, companion_eigenvalues(&reduced));
                    if max_residual(&reduced, &r) >= RESIDUAL_LIMIT {
                        return Err(Error::NonConvergence { degree });
                    }
                    r
                }
            };
            roots.extend(found);
        }
    }

    let mut roots = snap_real(p, roots);
    sort_roots(&mut roots);
    if max_residual(p, &roots) >= RESIDUAL_LIMIT {
        return Err(Error::NonConvergence { degree });
    }
    Ok(roots)
}

/// Orders by real part (on a 1e-8 grid so conjugates stay adjacent), then imaginary part.
pub fn sort_roots(roots: &mut [Complex64]) {
    let key = |z: &Complex64| (z.re * 1e8).round() as i64;
    roots.sort_by(|a, b| key(a).cmp(&key(b)).then(a.im.total_cmp(&b.im)));
}

/// `max_i |p(r_i)| / ||p||`
pub fn max_residual(p: &Polynomial, roots: &[Complex64]) -> f64 {
    let norm = p.norm();
    roots
        .iter()
        .map(|&r| p.eval(r).norm() / norm)
        .fold(0.0, f64::max)
}

fn aberth(p: &Polynomial) -> Option<Vec<Complex64>> {
    let n = p.degree()?;
    let c = p.coeffs();
    let radius = (c[0] / c[n]).abs().powf(1.0 / n as f64);
    let dp = p.derivative();
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..MAX_ITERATIONS {
        let mut max_step = 0.0_f64;
        for k in 0..n {
            let pz = p.eval(z[k]);
            if pz.norm() == 0.0 {
                continue;
            }
            let ratio = pz / dp.eval(z[k]);
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                return None;
            }
            z[k] -= step;
            max_step = max_step.max(step.norm() / z[k].norm().max(1.0));
        }
        if max_step <= TOLERANCE {
            return Some(z);
        }
    }
    None
}

fn companion_eigenvalues(p: &Polynomial) -> Vec<Complex64> {
    let n = p.degree().unwrap_or(0);
    let c = p.coeffs();
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

fn polish(p: &Polynomial, roots: Vec<Complex64>) -> Vec<Complex64> {
    let dp = p.derivative();
    roots
        .into_iter()
        .map(|mut r| {
            for _ in 0..5 {
                let d = dp.eval(r);
                if d.norm() == 0.0 {
                    break;
                }
                let next = r - p.eval(r) / d;
                if next.is_finite() && p.eval(next).norm() < p.eval(r).norm() {
                    r = next;
                } else {
                    break;
                }
            }
            r
        })
        .collect()
}

/// Drop round-off imaginary parts when doing so does not hurt the residual.
fn snap_real(p: &Polynomial, roots: Vec<Complex64>) -> Vec<Complex64> {
    roots
        .into_iter()
        .map(|r| {
            if r.im != 0.0 && r.im.abs() <= 1e-9 * r.norm().max(1.0) {
                let real = Complex64::new(r.re, 0.0);
                let limit = RESIDUAL_LIMIT * p.norm().max(f64::MIN_POSITIVE);
                if p.is_zero() || p.eval(real).norm() < limit.max(p.eval(r).norm()) {
                    return real;
                }
            }
            r
        })
        .collect()
}
