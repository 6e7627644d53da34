//! Plant models, integration, linearization and closed-loop simulation.

mod baseline;
mod closed_loop;
mod integrate;
mod linear;
mod pendulum;
mod surrogate;

pub use baseline::{spectral_abscissa, BaselineSystem, LtiBaseline, PendulumBaseline};
pub use closed_loop::{
    central_difference_velocity, simulate_closed_loop, simulate_closed_loop_from, ClosedLoopTrace,
    ReferenceMap, SimOptions, StateFeedbackController,
};
pub use integrate::{rk4_step, FnPlant, Plant};
pub use linear::{
    closed_loop_tf, controllability_matrix, discretize_zoh, expm, leverrier_faddeev, linearize,
    pole_place_siso, reference_tf, state_space_tf, LinearModel,
};
pub use pendulum::{
    pendulum_cart_derivative, pendulum_cart_voltage_derivative, Actuation, PendulumCart,
    PendulumCartParams, VoltageModel,
};
pub use surrogate::{critically_damped_poles, nmp_surrogate_axis};

/// Stabilizing gain for the force-driven cart, slots `[eta, eta_dot, theta, theta_dot]`.
pub const K1: [f64; 4] = [-0.8678, -1.808, 25.46, 4.140];
/// Gain used with the voltage-driven cart.
pub const K2: [f64; 4] = [-105.6, -55.04, 130.7, 23.67];
