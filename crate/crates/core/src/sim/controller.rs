use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ring::{LinearRingModel, StateVector, AV_INDEX};

/// Number of vehicles the feedback law looks at.
pub const GAIN_HORIZON: usize = 5;

/// Spacing weights `gamma` and velocity weights `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub spacing: [f64; GAIN_HORIZON],
    pub velocity: [f64; GAIN_HORIZON],
}

impl ControllerGains {
    pub const UNITY: ControllerGains = ControllerGains {
        spacing: [1.0; GAIN_HORIZON],
        velocity: [1.0; GAIN_HORIZON],
    };

    pub const ZERO: ControllerGains = ControllerGains {
        spacing: [0.0; GAIN_HORIZON],
        velocity: [0.0; GAIN_HORIZON],
    };
}

/// Which vehicles the five gain pairs apply to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControllerWindow {
    /// State indices 1..5 taken literally, i.e. the controlled vehicle and
    /// the four vehicles behind it.
    Literal,
    /// The controlled vehicle and the four vehicles ahead of it:
    /// 1, n, n-1, n-2, n-3.
    #[default]
    Preceding,
}

impl ControllerWindow {
    /// Zero-based vehicle indices, in gain order.
    pub fn vehicles(self, n: usize) -> Result<[usize; GAIN_HORIZON]> {
        if n < GAIN_HORIZON {
            return Err(Error::invalid(
                "n",
                alloc::format!("controller looks at {GAIN_HORIZON} vehicles but the ring has {n}"),
            ));
        }
        Ok(core::array::from_fn(|j| match self {
            ControllerWindow::Literal => j,
            ControllerWindow::Preceding => (AV_INDEX + n - j) % n,
        }))
    }
}

/// How the control input reaches the controlled vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Actuation {
    /// `u` is the controlled vehicle's whole acceleration (plant `a_open`).
    Direct,
    /// `u` is added to the human-driver law (plant `a_circ`, `u` acts as the
    /// virtual input).
    #[default]
    Assisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Controller {
    pub gains: ControllerGains,
    pub window: ControllerWindow,
    pub actuation: Actuation,
}

impl Default for ControllerGains {
    fn default() -> Self {
        ControllerGains::UNITY
    }
}

impl Controller {
    pub fn new(gains: ControllerGains) -> Self {
        Controller {
            gains,
            ..Controller::default()
        }
    }

    /// Row vector `k` with `u = k . x`.
    pub fn gain_vector(&self, n: usize) -> Result<DVector<f64>> {
        let mut k = DVector::zeros(2 * n);
        for (j, &vehicle) in self.window.vehicles(n)?.iter().enumerate() {
            k[2 * vehicle] += self.gains.spacing[j];
            k[2 * vehicle + 1] += self.gains.velocity[j];
        }
        Ok(k)
    }

    pub fn control(&self, x: &StateVector) -> Result<f64> {
        control_law(&self.gains, self.window, x)
    }

    pub fn plant<'a>(&self, model: &'a LinearRingModel) -> &'a DMatrix<f64> {
        match self.actuation {
            Actuation::Direct => &model.a_open,
            Actuation::Assisted => &model.a_circ,
        }
    }

    pub fn closed_loop(&self, model: &LinearRingModel) -> Result<DMatrix<f64>> {
        let k = self.gain_vector(model.n())?;
        Ok(self.plant(model) + &model.b * k.transpose())
    }
}

/// `u = sum_j gamma_j s~_{w_j} + lambda_j v~_{w_j}` over the window `w`.
pub fn control_law(gains: &ControllerGains, window: ControllerWindow, x: &StateVector) -> Result<f64> {
    let vehicles = window.vehicles(x.vehicles())?;
    Ok(vehicles
        .iter()
        .enumerate()
        .map(|(j, &i)| gains.spacing[j] * x.spacing(i) + gains.velocity[j] * x.velocity(i))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_examples() {
        let g = ControllerGains::UNITY;
        let w = ControllerWindow::Literal;
        assert_eq!(control_law(&g, w, &StateVector::zeros(10)).unwrap(), 0.0);
        let mut x = StateVector::zeros(10);
        for i in 0..5 {
            x.set_spacing(i, 1.0);
            x.set_velocity(i, 1.0);
        }
        assert_eq!(control_law(&g, w, &x).unwrap(), 10.0);
        let mut x = StateVector::zeros(10);
        x.set_spacing(5, 1.0);
        assert_eq!(control_law(&g, w, &x).unwrap(), 0.0);
    }

    #[test]
    fn preceding_window() {
        assert_eq!(ControllerWindow::Preceding.vehicles(10).unwrap(), [0, 9, 8, 7, 6]);
        assert_eq!(ControllerWindow::Literal.vehicles(10).unwrap(), [0, 1, 2, 3, 4]);
        let mut x = StateVector::zeros(10);
        x.set_velocity(9, 2.0);
        x.set_spacing(1, 5.0);
        assert_eq!(control_law(&ControllerGains::UNITY, ControllerWindow::Preceding, &x).unwrap(), 2.0);
    }

    #[test]
    fn horizon_exceeds_ring() {
        let x = StateVector::zeros(4);
        assert!(matches!(
            control_law(&ControllerGains::UNITY, ControllerWindow::Literal, &x),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn gain_vector_matches_law() {
        let c = Controller::new(ControllerGains {
            spacing: [0.1, 0.2, 0.3, 0.4, 0.5],
            velocity: [-1.0, -2.0, -3.0, -4.0, -5.0],
        });
        let x = StateVector::from_vec((0..16).map(|i| i as f64 * 0.25 - 2.0).collect()).unwrap();
        let k = c.gain_vector(8).unwrap();
        assert!((k.dot(x.as_vector()) - c.control(&x).unwrap()).abs() < 1e-14);
    }
}
