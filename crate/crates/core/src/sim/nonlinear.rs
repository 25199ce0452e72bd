use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ovm::{nonlinear_rhs, Equilibrium, OvmParams, VehicleState};
use crate::ring::{DisturbanceVector, StateVector, AV_INDEX};

use super::controller::{Actuation, Controller};
use super::linear::{Horizon, DIVERGENCE_BOUND};
use super::trajectory::Trajectory;

fn to_absolute(eq: &Equilibrium, x: &StateVector) -> Vec<VehicleState> {
    (0..x.vehicles())
        .map(|i| VehicleState {
            spacing: eq.s_star + x.spacing(i),
            velocity: eq.v_star + x.velocity(i),
        })
        .collect()
}

fn to_deviation(eq: &Equilibrium, states: &[VehicleState]) -> StateVector {
    let mut x = StateVector::zeros(states.len());
    for (i, s) in states.iter().enumerate() {
        x.set_spacing(i, s.spacing - eq.s_star);
        x.set_velocity(i, s.velocity - eq.v_star);
    }
    x
}

fn rates(
    p: &OvmParams,
    eq: &Equilibrium,
    controller: &Controller,
    states: &[VehicleState],
) -> Result<(Vec<VehicleState>, f64)> {
    let u = controller.control(&to_deviation(eq, states))?;
    let av = match controller.actuation {
        Actuation::Direct => u,
        Actuation::Assisted => {
            let n = states.len();
            let me = &states[AV_INDEX];
            let lead = &states[(AV_INDEX + n - 1) % n];
            u + p.forcing(me.spacing, lead.velocity - me.velocity, me.velocity)
        }
    };
    let r = nonlinear_rhs(p, states, Some(av))?;
    let as_states = r
        .into_iter()
        .map(|r| VehicleState {
            spacing: r.spacing_rate,
            velocity: r.acceleration,
        })
        .collect();
    Ok((as_states, u))
}

fn offset(base: &[VehicleState], h: f64, k: &[VehicleState]) -> Vec<VehicleState> {
    base.iter()
        .zip(k)
        .map(|(b, k)| VehicleState {
            spacing: b.spacing + h * k.spacing,
            velocity: b.velocity + h * k.velocity,
        })
        .collect()
}

/// RK4 integration of the nonlinear ring under the same feedback law as the
/// linear model, started from the deviation `x0` around `eq`. States are
/// reported as deviations so they compare directly with the linear runs.
pub fn simulate_nonlinear(
    p: &OvmParams,
    eq: &Equilibrium,
    controller: &Controller,
    x0: &StateVector,
    horizon: Horizon,
) -> Result<Trajectory> {
    p.validate()?;
    let steps = horizon.steps()?;
    let dt = horizon.dt;
    let n = x0.vehicles();
    let mut traj = Trajectory::with_capacity(dt, steps + 1);
    let mut s = to_absolute(eq, x0);
    check_physical(&s, 0)?;
    for step in 0..steps {
        let (k1, u) = rates(p, eq, controller, &s)?;
        let (k2, _) = rates(p, eq, controller, &offset(&s, 0.5 * dt, &k1))?;
        let (k3, _) = rates(p, eq, controller, &offset(&s, 0.5 * dt, &k2))?;
        let (k4, _) = rates(p, eq, controller, &offset(&s, dt, &k3))?;
        let next: Vec<VehicleState> = (0..n)
            .map(|i| VehicleState {
                spacing: s[i].spacing
                    + dt / 6.0 * (k1[i].spacing + 2.0 * k2[i].spacing + 2.0 * k3[i].spacing + k4[i].spacing),
                velocity: s[i].velocity
                    + dt / 6.0 * (k1[i].velocity + 2.0 * k2[i].velocity + 2.0 * k3[i].velocity + k4[i].velocity),
            })
            .collect();
        let dev = to_deviation(eq, &next);
        if dev.as_slice().iter().any(|v| !(v.is_finite() && v.abs() <= DIVERGENCE_BOUND)) {
            return Err(Error::Divergence {
                step: step + 1,
                last_valid: step,
                time: horizon.time(step + 1),
            });
        }
        check_physical(&next, step + 1)?;
        traj.push(horizon.time(step), to_deviation(eq, &s), u, DisturbanceVector::zeros(n));
        s = next;
    }
    let x = to_deviation(eq, &s);
    let u = controller.control(&x)?;
    traj.push(horizon.time(steps), x, u, DisturbanceVector::zeros(n));
    Ok(traj)
}

fn check_physical(states: &[VehicleState], step: usize) -> Result<()> {
    match states.iter().position(|s| s.spacing <= 0.0) {
        Some(vehicle) => Err(Error::PhysicalViolation {
            step,
            vehicle,
            spacing: states[vehicle].spacing,
        }),
        None => Ok(()),
    }
}

/// Convenience for an initial perturbation `delta` on one vehicle's spacing.
pub fn spacing_perturbation(n: usize, vehicle: usize, delta: f64) -> StateVector {
    let mut x = StateVector::zeros(n);
    x.set_spacing(vehicle, delta);
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_fixed_point() {
        let p = OvmParams::TABLE1;
        let eq = Equilibrium::from_spacing(&p, 20.0).unwrap();
        let traj = simulate_nonlinear(&p, &eq, &Controller::default(), &StateVector::zeros(10), Horizon::new(1.0, 0.1).unwrap())
            .unwrap();
        assert!(traj.max_excursion() < 1e-12);
    }

    #[test]
    fn collision_is_reported() {
        let p = OvmParams::TABLE1;
        let eq = Equilibrium::from_spacing(&p, 20.0).unwrap();
        let x = spacing_perturbation(10, 3, -25.0);
        assert!(matches!(
            simulate_nonlinear(&p, &eq, &Controller::default(), &x, Horizon::new(1.0, 0.1).unwrap()),
            Err(Error::PhysicalViolation { step: 0, vehicle: 3, .. })
        ));
    }
}
