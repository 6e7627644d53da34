use crate::config::MultisineSet;
use crate::invlearn::Trajectory;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Raised-cosine ramp from 0 to 1 over `ramp` seconds at both ends.
fn taper(t: f64, duration: f64, ramp: f64) -> f64 {
    let x = (t.min(duration - t) / ramp).clamp(0.0, 1.0);
    0.5 - 0.5 * (PI * x).cos()
}

/// Smooth hand-drawing stand-in: 3 to 6 random sinusoids with periods in
/// [4, 20] s, starting and ending at rest.
pub fn synthesize_drawing(seed: u64, index: usize, duration: f64, dt: f64) -> Trajectory {
    let mut rng = stream(seed, index);
    let count = rng.random_range(3..=6);
    let comps: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.random_range(0.2..1.0),
                rng.random_range(4.0..20.0),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let len = (duration / dt).round() as usize;
    let end = (len.max(1) - 1) as f64 * dt;
    let values = (0..len)
        .map(|k| {
            let t = k as f64 * dt;
            let s: f64 = comps
                .iter()
                .map(|(a, p, ph)| a * (2.0 * PI * t / p + ph).sin())
                .sum();
            s * taper(t, end, 4.0)
        })
        .collect();
    Trajectory {
        name: format!("drawing_{index:02}"),
        sample_time: dt,
        values,
    }
}

/// Training excitation: log-uniform periods, amplitude proportional to the
/// period so fast components stay small.
pub fn multisine_trajectories(set: &MultisineSet, dt: f64, seed: u64) -> Vec<Trajectory> {
    (0..set.count)
        .map(|i| {
            let mut rng = stream(seed ^ 0x5eed, i);
            let (lo, hi) = (set.min_period.ln(), set.max_period.ln());
            let comps: Vec<(f64, f64, f64)> = (0..set.components)
                .map(|_| {
                    let p = if hi > lo {
                        rng.random_range(lo..hi).exp()
                    } else {
                        set.min_period
                    };
                    (
                        rng.random_range(0.2..1.0) * p / 20.0,
                        p,
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect();
            let len = (set.duration / dt).round() as usize;
            Trajectory {
                name: format!("multisine_{i}"),
                sample_time: dt,
                values: (0..len)
                    .map(|k| {
                        let t = k as f64 * dt;
                        comps
                            .iter()
                            .map(|(a, p, ph)| a * (2.0 * PI * t / p + ph).sin())
                            .sum()
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Natural cubic spline through `(t, v)`, evaluated at `t[0] + k dt` up to `t.last()`.
pub fn resample_cubic(t: &[f64], v: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = t.len();
    if n < 2 || v.len() != n {
        return Err(Error::invalid(
            "need at least two samples with matching lengths",
        ));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("sample times must be strictly increasing"));
    }
    // second derivatives from the tridiagonal system, natural ends
    let mut m = vec![0.0; n];
    if n > 2 {
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            rhs[i] = 6.0 * ((v[i + 1] - v[i]) / h[i] - (v[i] - v[i - 1]) / h[i - 1]);
        }
        for i in 2..n - 1 {
            let w = h[i - 1] / diag[i - 1];
            diag[i] -= w * h[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            let upper = if i + 1 < n - 1 { h[i] * m[i + 1] } else { 0.0 };
            m[i] = (rhs[i] - upper) / diag[i];
        }
    }
    let count = ((t[n - 1] - t[0]) / dt + 1e-9).floor() as usize + 1;
    let mut seg = 0;
    Ok((0..count)
        .map(|k| {
            let x = t[0] + k as f64 * dt;
            while seg + 2 < n && x > t[seg + 1] {
                seg += 1;
            }
            let (x0, x1) = (t[seg], t[seg + 1]);
            let h = x1 - x0;
            let a = (x1 - x) / h;
            let b = (x - x0) / h;
            a * v[seg]
                + b * v[seg + 1]
                + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0
        })
        .collect())
}

/// Centered moving average (zero phase). The window shrinks symmetrically
/// near the ends so the first and last samples are kept.
pub fn moving_average(v: &[f64], window: usize) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let h = (window / 2).min(k).min(n - 1 - k);
            v[k - h..=k + h].iter().sum::<f64>() / (2 * h + 1) as f64
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawingOptions {
    pub sample_time: f64,
    pub smoothing_window: usize,
    pub workspace: f64,
    pub max_duration: f64,
}

/// Per-axis trajectories on a uniform grid plus the settings used to build them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedDrawing {
    pub t: Vec<f64>,
    pub axes: Vec<Vec<f64>>,
    pub options: DrawingOptions,
}

/// Cubic resampling, centered smoothing, shift to start at rest, clamp to the workspace.
pub fn preprocess_drawing(
    t: &[f64],
    axes: &[Vec<f64>],
    opts: &DrawingOptions,
) -> Result<PreparedDrawing> {
    if t.len() < 2 {
        return Err(Error::BadDrawing(format!(
            "need at least 2 points, got {}",
            t.len()
        )));
    }
    if axes.is_empty() || axes.iter().any(|a| a.len() != t.len()) {
        return Err(Error::BadDrawing(
            "every axis needs one value per point".into(),
        ));
    }
    if t.iter()
        .chain(axes.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(Error::BadDrawing("non-finite coordinate".into()));
    }
    if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::BadDrawing(format!(
            "time is not strictly increasing at point {}",
            i + 1
        )));
    }
    let duration = t[t.len() - 1] - t[0];
    if duration > opts.max_duration {
        return Err(Error::BadDrawing(format!(
            "duration {duration:.1} s exceeds {} s",
            opts.max_duration
        )));
    }
    let mut out = Vec::with_capacity(axes.len());
    for a in axes {
        let r =
            resample_cubic(t, a, opts.sample_time).map_err(|e| Error::BadDrawing(e.to_string()))?;
        let s = moving_average(&r, opts.smoothing_window);
        let start = s[0];
        out.push(
            s.iter()
                .map(|v| (v - start).clamp(-opts.workspace, opts.workspace))
                .collect::<Vec<f64>>(),
        );
    }
    let len = out[0].len();
    Ok(PreparedDrawing {
        t: (0..len).map(|k| k as f64 * opts.sample_time).collect(),
        axes: out,
        options: opts.clone(),
    })
}

/// `t,value` CSV (header optional) resampled onto the system grid.
pub fn load_trajectory_csv(path: &Path, dt: f64) -> Result<Trajectory> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| rec.get(i).and_then(|s| s.trim().parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(a), Some(b)) => {
                t.push(a);
                v.push(b);
            }
            _ if t.is_empty() => continue,
            _ => return Err(Error::invalid(format!("bad row in {}", path.display()))),
        }
    }
    Ok(Trajectory {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sample_time: dt,
        values: resample_cubic(&t, &v, dt)?,
    })
}
