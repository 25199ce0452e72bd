//! Time integration of the ring under feedback and noise.

mod controller;
mod disturbance;
mod linear;
mod nonlinear;
mod trajectory;

pub use controller::{control_law, Actuation, Controller, ControllerGains, ControllerWindow, GAIN_HORIZON};
pub use disturbance::{Channel, DisturbanceSpec, NoiseSource, SamplingMode, DEFAULT_SEED};
pub use linear::{
    closed_loop_abscissa, closed_loop_propagator, mode_signal_path, simulate, simulate_run, step_deterministic, step_euler,
    step_stochastic, Horizon, LinearDynamics, Rk4Work, DIVERGENCE_BOUND,
};
pub use nonlinear::{simulate_nonlinear, spacing_perturbation};
pub use trajectory::Trajectory;
