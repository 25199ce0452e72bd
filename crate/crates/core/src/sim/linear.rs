use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, EigenPropagator};
use crate::ring::{DisturbanceVector, LinearRingModel, StateVector};
use crate::spectral::mode_signal;

use super::controller::Controller;
use super::disturbance::{DisturbanceSpec, NoiseSource};
use super::trajectory::Trajectory;

/// States whose largest coordinate exceeds this are treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Final time and step of a fixed-step run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub t_end: f64,
    pub dt: f64,
}

impl Horizon {
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        let h = Horizon { t_end, dt };
        h.steps()?;
        Ok(h)
    }

    /// Number of steps; `t_end / dt` must be a whole number.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", alloc::format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid("T", alloc::format!("must be > 0, got {}", self.t_end)));
        }
        let ratio = self.t_end / self.dt;
        let steps = libm::round(ratio);
        if libm::fabs(ratio - steps) > 1e-9 * ratio.max(1.0) {
            return Err(Error::invalid(
                "dt",
                alloc::format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt),
            ));
        }
        Ok(steps as usize)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// Closed-loop right-hand side `P x + b (k . x) + d` kept in sparse form.
/// The ring matrices have at most four nonzeros per row, so this is much
/// cheaper than a dense product for long Monte Carlo batches.
#[derive(Debug, Clone)]
pub struct LinearDynamics {
    rows: Vec<Vec<(usize, f64)>>,
    gain: Vec<(usize, f64)>,
    input: Vec<(usize, f64)>,
    n: usize,
}

impl LinearDynamics {
    pub fn new(model: &LinearRingModel, controller: &Controller) -> Result<Self> {
        let plant = controller.plant(model);
        let dim = model.state_dim();
        let rows = (0..dim)
            .map(|r| {
                (0..dim)
                    .filter_map(|c| {
                        let v = plant[(r, c)];
                        (v != 0.0).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        let gain = controller
            .gain_vector(model.n())?
            .iter()
            .enumerate()
            .filter_map(|(c, &v)| (v != 0.0).then_some((c, v)))
            .collect();
        let input = (0..dim)
            .filter_map(|r| {
                let v = model.b[(r, 0)];
                (v != 0.0).then_some((r, v))
            })
            .collect();
        Ok(LinearDynamics {
            rows,
            gain,
            input,
            n: model.n(),
        })
    }

    pub fn vehicles(&self) -> usize {
        self.n
    }

    pub fn control(&self, x: &[f64]) -> f64 {
        self.gain.iter().map(|&(c, k)| k * x[c]).sum()
    }

    fn derivative(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(c, a)| a * x[c]).sum();
        }
        let u = self.control(x);
        for &(r, b) in &self.input {
            out[r] += b * u;
        }
    }

    /// One classical Runge-Kutta step of the noise-free system.
    pub fn rk4_step(&self, x: &[f64], dt: f64, out: &mut [f64], work: &mut Rk4Work) {
        let Rk4Work { k1, k2, k3, k4, tmp } = work;
        self.derivative(x, k1);
        axpy(x, 0.5 * dt, k1, tmp);
        self.derivative(tmp, k2);
        axpy(x, 0.5 * dt, k2, tmp);
        self.derivative(tmp, k3);
        axpy(x, dt, k3, tmp);
        self.derivative(tmp, k4);
        for i in 0..x.len() {
            out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// `x + dt (f(x) + d)`, with `d` already scaled for the sampling mode.
    pub fn euler_step(&self, x: &[f64], dt: f64, d: Option<&[f64]>, out: &mut [f64], work: &mut [f64]) {
        self.derivative(x, work);
        match d {
            Some(d) => {
                for i in 0..x.len() {
                    out[i] = x[i] + dt * (work[i] + d[i]);
                }
            }
            None => {
                for i in 0..x.len() {
                    out[i] = x[i] + dt * work[i];
                }
            }
        }
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = x[i] + a * y[i];
    }
}

/// Scratch buffers for [`LinearDynamics::rk4_step`].
#[derive(Debug, Clone)]
pub struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    pub fn new(dim: usize) -> Self {
        Rk4Work {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

fn check_state(model: &LinearRingModel, x: &StateVector) -> Result<()> {
    if x.vehicles() != model.n() {
        return Err(Error::Dimension {
            what: "initial state",
            expected: model.state_dim(),
            got: x.as_slice().len(),
        });
    }
    Ok(())
}

fn diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !(v.is_finite() && v.abs() <= DIVERGENCE_BOUND))
}

pub fn step_deterministic(
    model: &LinearRingModel,
    controller: &Controller,
    x: &StateVector,
    dt: f64,
) -> Result<StateVector> {
    check_state(model, x)?;
    let dyn_ = LinearDynamics::new(model, controller)?;
    let mut out = StateVector::zeros(model.n());
    dyn_.rk4_step(x.as_slice(), dt, out.as_mut_slice(), &mut Rk4Work::new(model.state_dim()));
    Ok(out)
}

/// Forward Euler step without noise.
pub fn step_euler(model: &LinearRingModel, controller: &Controller, x: &StateVector, dt: f64) -> Result<StateVector> {
    check_state(model, x)?;
    let dyn_ = LinearDynamics::new(model, controller)?;
    let mut out = StateVector::zeros(model.n());
    let mut work = vec![0.0; model.state_dim()];
    dyn_.euler_step(x.as_slice(), dt, None, out.as_mut_slice(), &mut work);
    Ok(out)
}

/// Euler-Maruyama step. Returns the next state and the disturbance applied.
pub fn step_stochastic(
    model: &LinearRingModel,
    controller: &Controller,
    x: &StateVector,
    dt: f64,
    spec: &DisturbanceSpec,
    noise: &mut NoiseSource,
) -> Result<(StateVector, DisturbanceVector)> {
    check_state(model, x)?;
    spec.validate(model.n())?;
    let dyn_ = LinearDynamics::new(model, controller)?;
    let mut d = DisturbanceVector::zeros(model.n());
    noise.sample(spec, dt, &mut d);
    let mut out = StateVector::zeros(model.n());
    let mut work = vec![0.0; model.state_dim()];
    dyn_.euler_step(x.as_slice(), dt, Some(d.as_slice()), out.as_mut_slice(), &mut work);
    Ok((out, d))
}

/// Run 0 of [`simulate_run`].
pub fn simulate(
    model: &LinearRingModel,
    controller: &Controller,
    x0: &StateVector,
    horizon: Horizon,
    spec: &DisturbanceSpec,
) -> Result<Trajectory> {
    simulate_run(model, controller, x0, horizon, spec, 0)
}

/// Integrates the linear ring from `x0`. Classical RK4 is used when every
/// disturbance channel is off, Euler-Maruyama otherwise. `run` selects the
/// noise stream.
pub fn simulate_run(
    model: &LinearRingModel,
    controller: &Controller,
    x0: &StateVector,
    horizon: Horizon,
    spec: &DisturbanceSpec,
    run: u64,
) -> Result<Trajectory> {
    check_state(model, x0)?;
    spec.validate(model.n())?;
    let steps = horizon.steps()?;
    let dt = horizon.dt;
    let n = model.n();
    let dim = model.state_dim();
    let dyn_ = LinearDynamics::new(model, controller)?;
    let stochastic = !spec.is_silent();
    let mut noise = NoiseSource::new(spec.seed, run);
    let mut rk = Rk4Work::new(dim);
    let mut work = vec![0.0; dim];

    let mut traj = Trajectory::with_capacity(dt, steps + 1);
    let mut x = x0.clone();
    for k in 0..steps {
        let u = dyn_.control(x.as_slice());
        let mut next = StateVector::zeros(n);
        let mut d = DisturbanceVector::zeros(n);
        if stochastic {
            noise.sample(spec, dt, &mut d);
            dyn_.euler_step(x.as_slice(), dt, Some(d.as_slice()), next.as_mut_slice(), &mut work);
        } else {
            dyn_.rk4_step(x.as_slice(), dt, next.as_mut_slice(), &mut rk);
        }
        if diverged(next.as_slice()) {
            return Err(Error::Divergence {
                step: k + 1,
                last_valid: k,
                time: horizon.time(k + 1),
            });
        }
        traj.push(horizon.time(k), core::mem::replace(&mut x, next), u, d);
    }
    let u = dyn_.control(x.as_slice());
    traj.push(horizon.time(steps), x, u, DisturbanceVector::zeros(n));
    Ok(traj)
}

/// Mode signal `x~11` of one run, recorded every `stride` steps (always
/// including step 0). Skips storing the full state, which is all a Monte
/// Carlo variance estimate needs.
pub fn mode_signal_path(
    model: &LinearRingModel,
    controller: &Controller,
    x0: &StateVector,
    horizon: Horizon,
    spec: &DisturbanceSpec,
    run: u64,
    stride: usize,
) -> Result<Vec<f64>> {
    check_state(model, x0)?;
    spec.validate(model.n())?;
    if stride == 0 {
        return Err(Error::invalid("stride", "must be at least 1"));
    }
    let steps = horizon.steps()?;
    let dt = horizon.dt;
    let n = model.n();
    let dim = model.state_dim();
    let dyn_ = LinearDynamics::new(model, controller)?;
    let stochastic = !spec.is_silent();
    let mut noise = NoiseSource::new(spec.seed, run);
    let mut rk = Rk4Work::new(dim);
    let mut work = vec![0.0; dim];
    let mut d = DisturbanceVector::zeros(n);
    let mut x = x0.clone();
    let mut next = StateVector::zeros(n);
    let mut out = Vec::with_capacity(steps / stride + 1);
    out.push(mode_signal(&x));
    for k in 1..=steps {
        if stochastic {
            noise.sample(spec, dt, &mut d);
            dyn_.euler_step(x.as_slice(), dt, Some(d.as_slice()), next.as_mut_slice(), &mut work);
        } else {
            dyn_.rk4_step(x.as_slice(), dt, next.as_mut_slice(), &mut rk);
        }
        if diverged(next.as_slice()) {
            return Err(Error::Divergence {
                step: k,
                last_valid: k - 1,
                time: horizon.time(k),
            });
        }
        core::mem::swap(&mut x, &mut next);
        if k % stride == 0 {
            out.push(mode_signal(&x));
        }
    }
    Ok(out)
}

/// Exact closed-loop propagator `exp((P + b k^T) t)`, for checking the
/// integrators.
pub fn closed_loop_propagator(model: &LinearRingModel, controller: &Controller) -> Result<EigenPropagator> {
    EigenPropagator::new(&controller.closed_loop(model)?)
}

/// Largest real part of the closed-loop spectrum once the eigenvalue
/// closest to zero, the spacing-sum integrator no feedback can move, is set
/// aside. Negative means every other mode decays.
pub fn closed_loop_abscissa(model: &LinearRingModel, controller: &Controller) -> Result<f64> {
    let mut ev = eigenvalues(&controller.closed_loop(model)?);
    let zero = ev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .ok_or(Error::LinearAlgebra("empty spectrum"))?;
    ev.swap_remove(zero);
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}
