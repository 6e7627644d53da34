use super::{
    linearize, reference_tf, simulate_closed_loop, ClosedLoopTrace, LinearModel, PendulumCart,
    SimOptions, StateFeedbackController,
};
use crate::polylti::DiscreteTransferFunction;
use crate::{Error, Result};

/// A stabilized system driven by a scalar position reference sampled at
/// `sample_time()`.
pub trait BaselineSystem: Send + Sync {
    fn name(&self) -> &str;

    fn sample_time(&self) -> f64;

    fn run(&self, reference: &[f64]) -> Result<ClosedLoopTrace>;

    /// Reference-to-output transfer function at the reference rate.
    fn linear_model(&self) -> Result<DiscreteTransferFunction>;
}

pub struct PendulumBaseline {
    name: String,
    plant: PendulumCart,
    controller: StateFeedbackController,
    options: SimOptions,
}

impl PendulumBaseline {
    /// Fails unless the gain stabilizes the upright linearization.
    pub fn new(
        name: impl Into<String>,
        plant: PendulumCart,
        controller: StateFeedbackController,
        options: SimOptions,
    ) -> Result<Self> {
        plant.params.validate()?;
        controller.validate()?;
        options.validate()?;
        let lin = linearize(&plant, &[0.0; 4], 0.0)?;
        let worst = spectral_abscissa(&lin, &controller.gain)?;
        if worst >= 0.0 {
            return Err(Error::invalid(format!(
                "controller does not stabilize the upright equilibrium (max Re = {worst:.4})"
            )));
        }
        Ok(PendulumBaseline {
            name: name.into(),
            plant,
            controller,
            options,
        })
    }

    pub fn plant(&self) -> &PendulumCart {
        &self.plant
    }

    pub fn controller(&self) -> &StateFeedbackController {
        &self.controller
    }

    pub fn options(&self) -> &SimOptions {
        &self.options
    }
}

/// Largest real part of `eig(A - B K)`.
pub fn spectral_abscissa(model: &LinearModel, gain: &[f64]) -> Result<f64> {
    let acl = model.closed_loop_matrix(gain)?;
    Ok(acl
        .complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

impl BaselineSystem for PendulumBaseline {
    fn name(&self) -> &str {
        &self.name
    }

    fn sample_time(&self) -> f64 {
        self.options.module_dt()
    }

    fn run(&self, reference: &[f64]) -> Result<ClosedLoopTrace> {
        simulate_closed_loop(&self.plant, &self.controller, reference, &self.options)
    }

    fn linear_model(&self) -> Result<DiscreteTransferFunction> {
        let lin = linearize(&self.plant, &[0.0; 4], 0.0)?;
        reference_tf(
            &lin,
            &self.controller,
            self.sample_time(),
            self.options.output_index,
        )
    }
}

/// Closed loop given directly as a proper transfer function.
pub struct LtiBaseline {
    name: String,
    tf: DiscreteTransferFunction,
    divergence_bound: f64,
}

impl LtiBaseline {
    pub fn new(
        name: impl Into<String>,
        tf: DiscreteTransferFunction,
        divergence_bound: f64,
    ) -> Result<Self> {
        tf.relative_degree()?;
        if !tf.is_stable()? {
            return Err(Error::invalid("LTI baseline must be stable"));
        }
        Ok(LtiBaseline {
            name: name.into(),
            tf,
            divergence_bound,
        })
    }

    pub fn tf(&self) -> &DiscreteTransferFunction {
        &self.tf
    }
}

impl BaselineSystem for LtiBaseline {
    fn name(&self) -> &str {
        &self.name
    }

    fn sample_time(&self) -> f64 {
        self.tf.sample_time()
    }

    fn run(&self, reference: &[f64]) -> Result<ClosedLoopTrace> {
        let dt = self.sample_time();
        let y = self.tf.simulate(reference, 0)?;
        let cut = y
            .iter()
            .position(|v| !v.is_finite() || v.abs() > self.divergence_bound);
        let len = cut.unwrap_or(y.len());
        Ok(ClosedLoopTrace {
            t: (0..len).map(|k| k as f64 * dt).collect(),
            x: vec![Vec::new(); len],
            u_ref_pos: reference[..len].to_vec(),
            u_ref_vel: vec![0.0; len],
            actuation: reference[..len].to_vec(),
            y: y[..len].to_vec(),
            diverged: cut.is_some(),
            divergence_time: cut.map(|k| k as f64 * dt),
        })
    }

    fn linear_model(&self) -> Result<DiscreteTransferFunction> {
        Ok(self.tf.clone())
    }
}
