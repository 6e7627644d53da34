use super::Plant;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumCartParams {
    pub cart_mass: f64,
    pub pendulum_mass: f64,
    pub length: f64,
    pub gravity: f64,
}

impl Default for PendulumCartParams {
    fn default() -> Self {
        PendulumCartParams {
            cart_mass: 1.0,
            pendulum_mass: 0.2,
            length: 0.5,
            gravity: 9.81,
        }
    }
}

impl PendulumCartParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.cart_mass,
            self.pendulum_mass,
            self.length,
            self.gravity,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "pendulum parameters must be positive: {self:?}"
            )))
        }
    }
}

/// Cart force as a function of motor voltage and cart velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageModel {
    pub velocity_coeff: f64,
    pub voltage_coeff: f64,
}

impl Default for VoltageModel {
    fn default() -> Self {
        VoltageModel {
            velocity_coeff: -7.74,
            voltage_coeff: 1.73,
        }
    }
}

impl VoltageModel {
    pub fn force(&self, cart_velocity: f64, voltage: f64) -> f64 {
        self.velocity_coeff * cart_velocity + self.voltage_coeff * voltage
    }
}

/// State `[eta, eta_dot, theta, theta_dot]`, force input.
pub fn pendulum_cart_derivative(state: &[f64], force: f64, p: &PendulumCartParams) -> [f64; 4] {
    let (eta_dot, theta, theta_dot) = (state[1], state[2], state[3]);
    let (s, c) = theta.sin_cos();
    let (big_m, m, l, g) = (p.cart_mass, p.pendulum_mass, p.length, p.gravity);
    let denom = big_m + m * s * s;
    let eta_dd = (force + m * g * s * c - m * l * theta_dot * theta_dot * s) / denom;
    let theta_dd =
        (force * c + (big_m + m) * g * s - m * l * theta_dot * theta_dot * s * c) / (l * denom);
    [eta_dot, eta_dd, theta_dot, theta_dd]
}

pub fn pendulum_cart_voltage_derivative(
    state: &[f64],
    voltage: f64,
    p: &PendulumCartParams,
    motor: &VoltageModel,
) -> [f64; 4] {
    pendulum_cart_derivative(state, motor.force(state[1], voltage), p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Actuation {
    Force,
    Voltage(VoltageModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PendulumCart {
    pub params: PendulumCartParams,
    pub actuation: Actuation,
}

impl PendulumCart {
    pub fn force_driven(params: PendulumCartParams) -> Self {
        PendulumCart {
            params,
            actuation: Actuation::Force,
        }
    }

    pub fn voltage_driven(params: PendulumCartParams, motor: VoltageModel) -> Self {
        PendulumCart {
            params,
            actuation: Actuation::Voltage(motor),
        }
    }
}

impl Plant for PendulumCart {
    fn state_dim(&self) -> usize {
        4
    }

    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let d = match &self.actuation {
            Actuation::Force => pendulum_cart_derivative(x, u, &self.params),
            Actuation::Voltage(m) => pendulum_cart_voltage_derivative(x, u, &self.params, m),
        };
        dx.copy_from_slice(&d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_and_unit_force() {
        let p = PendulumCartParams::default();
        assert_eq!(pendulum_cart_derivative(&[0.0; 4], 0.0, &p), [0.0; 4]);
        let d = pendulum_cart_derivative(&[0.0; 4], 1.0, &p);
        assert_eq!(d, [0.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn off_equilibrium_point() {
        // hand evaluation at theta = 0.2, eta_dot = 0.1, theta_dot = -0.1, q = 0.5
        let p = PendulumCartParams::default();
        let d = pendulum_cart_derivative(&[0.0, 0.1, 0.2, -0.1], 0.5, &p);
        let (s, c) = (0.19866933079506122_f64, 0.9800665778412416_f64);
        let denom = 1.0 + 0.2 * s * s;
        let eta_dd = (0.5 + 0.2 * 9.81 * s * c - 0.2 * 0.5 * 0.01 * s) / denom;
        let theta_dd = (0.5 * c + 1.2 * 9.81 * s - 0.2 * 0.5 * 0.01 * s * c) / (0.5 * denom);
        assert_eq!(d[0], 0.1);
        assert_eq!(d[2], -0.1);
        assert!((d[1] - eta_dd).abs() < 1e-14);
        assert!((d[3] - theta_dd).abs() < 1e-14);
        assert!((d[1] - 0.874_914_238_442_454).abs() < 1e-12);
        assert!((d[3] - 5.612_840_677_348_846).abs() < 1e-12);
    }

    #[test]
    fn voltage_substitution() {
        let p = PendulumCartParams::default();
        let m = VoltageModel::default();
        assert_eq!(
            pendulum_cart_voltage_derivative(&[0.0; 4], 0.0, &p, &m),
            [0.0; 4]
        );
        let d = pendulum_cart_voltage_derivative(&[0.0; 4], 1.0, &p, &m);
        assert!((d[1] - 1.73).abs() < 1e-15 && (d[3] - 3.46).abs() < 1e-15);
        let x = [0.0, 1.0, 0.0, 0.0];
        let d = pendulum_cart_voltage_derivative(&x, 0.0, &p, &m);
        assert_eq!(d, pendulum_cart_derivative(&x, -7.74, &p));
    }

    #[test]
    fn rejects_nonpositive_params() {
        let mut p = PendulumCartParams::default();
        assert!(p.validate().is_ok());
        p.length = 0.0;
        assert!(p.validate().is_err());
    }
}
