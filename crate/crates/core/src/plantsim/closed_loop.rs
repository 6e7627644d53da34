use super::{rk4_step, Plant};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Which reference-vector slots are driven by the scalar position reference
/// and its velocity. Every other slot is held at zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceMap {
    pub position_index: usize,
    #[serde(default)]
    pub velocity_index: Option<usize>,
}

/// `q = K (r - x)`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFeedbackController {
    pub gain: Vec<f64>,
    pub reference_map: ReferenceMap,
}

impl StateFeedbackController {
    pub fn new(gain: Vec<f64>, reference_map: ReferenceMap) -> Result<Self> {
        let ctrl = StateFeedbackController {
            gain,
            reference_map,
        };
        ctrl.validate()?;
        Ok(ctrl)
    }

    /// Position in slot 0, velocity in slot 1.
    pub fn position_velocity(gain: Vec<f64>) -> Result<Self> {
        Self::new(
            gain,
            ReferenceMap {
                position_index: 0,
                velocity_index: Some(1),
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gain.len();
        let map = self.reference_map;
        let bad = map.position_index >= n
            || map
                .velocity_index
                .is_some_and(|v| v >= n || v == map.position_index);
        if bad || self.gain.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid(format!("inconsistent controller {self:?}")));
        }
        Ok(())
    }

    pub fn actuation(&self, x: &[f64], position: f64, velocity: f64) -> f64 {
        let map = self.reference_map;
        let mut q = 0.0;
        for (i, (&k, &xi)) in self.gain.iter().zip(x).enumerate() {
            let r = if i == map.position_index {
                position
            } else if Some(i) == map.velocity_index {
                velocity
            } else {
                0.0
            };
            q += k * (r - xi);
        }
        q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    /// Integration step, s.
    pub sim_dt: f64,
    /// Integration steps per reference update.
    pub substeps: usize,
    pub divergence_bound: f64,
    /// State component reported as the scalar output `y`.
    pub output_index: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            sim_dt: 0.001,
            substeps: 15,
            divergence_bound: 1e3,
            output_index: 0,
        }
    }
}

impl SimOptions {
    pub fn module_dt(&self) -> f64 {
        self.sim_dt * self.substeps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sim_dt > 0.0) || self.substeps == 0 || !(self.divergence_bound > 0.0) {
            return Err(Error::invalid(format!("bad simulation options {self:?}")));
        }
        Ok(())
    }
}

/// Central differences of a sampled signal, holding the end values outside the sequence.
pub fn central_difference_velocity(r: &[f64], dt: f64) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|k| {
            let prev = r[k.saturating_sub(1)];
            let next = r[(k + 1).min(n - 1)];
            (next - prev) / (2.0 * dt)
        })
        .collect()
}

/// One row per reference update.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopTrace {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u_ref_pos: Vec<f64>,
    pub u_ref_vel: Vec<f64>,
    pub actuation: Vec<f64>,
    pub y: Vec<f64>,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
}

impl ClosedLoopTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, t: f64, x: &[f64], pos: f64, vel: f64, q: f64, y: f64) {
        self.t.push(t);
        self.x.push(x.to_vec());
        self.u_ref_pos.push(pos);
        self.u_ref_vel.push(vel);
        self.actuation.push(q);
        self.y.push(y);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.x.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend(["u_ref_pos", "u_ref_vel", "actuation", "y"].map(String::from));
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.t[k].to_string()];
            row.extend(self.x[k].iter().map(f64::to_string));
            for v in [
                self.u_ref_pos[k],
                self.u_ref_vel[k],
                self.actuation[k],
                self.y[k],
            ] {
                row.push(v.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the stabilized plant against a reference sampled every
/// `opts.module_dt()`. The controller updates at every integration step with
/// the reference held in between. Starts at the origin; stops early and flags
/// divergence once `||x||` leaves the bound.
pub fn simulate_closed_loop<P: Plant + ?Sized>(
    plant: &P,
    controller: &StateFeedbackController,
    reference: &[f64],
    opts: &SimOptions,
) -> Result<ClosedLoopTrace> {
    let x0 = vec![0.0; plant.state_dim()];
    simulate_closed_loop_from(plant, controller, reference, opts, &x0)
}

pub fn simulate_closed_loop_from<P: Plant + ?Sized>(
    plant: &P,
    controller: &StateFeedbackController,
    reference: &[f64],
    opts: &SimOptions,
    x0: &[f64],
) -> Result<ClosedLoopTrace> {
    opts.validate()?;
    let n = plant.state_dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: n,
            found: x0.len(),
        });
    }
    if controller.gain.len() != n {
        return Err(Error::DimensionMismatch {
            context: "controller gain",
            expected: n,
            found: controller.gain.len(),
        });
    }
    if opts.output_index >= n {
        return Err(Error::invalid("output index outside the state"));
    }
    let module_dt = opts.module_dt();
    let velocity = central_difference_velocity(reference, module_dt);
    let mut trace = ClosedLoopTrace::default();
    let mut x = x0.to_vec();

    for (k, (&pos, &vel)) in reference.iter().zip(&velocity).enumerate() {
        let t0 = k as f64 * module_dt;
        trace.push(
            t0,
            &x,
            pos,
            vel,
            controller.actuation(&x, pos, vel),
            x[opts.output_index],
        );
        for s in 0..opts.substeps {
            let q = controller.actuation(&x, pos, vel);
            let next = rk4_step(plant, &x, q, opts.sim_dt);
            let t = t0 + (s + 1) as f64 * opts.sim_dt;
            match next {
                Ok(v) if norm(&v) <= opts.divergence_bound => x = v,
                _ => {
                    log::debug!("closed loop diverged at t = {t:.3} s");
                    trace.diverged = true;
                    trace.divergence_time = Some(t);
                    return Ok(trace);
                }
            }
        }
    }
    Ok(trace)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
