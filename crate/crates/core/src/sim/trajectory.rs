use alloc::vec::Vec;

use crate::ring::{DisturbanceVector, StateVector};
use crate::spectral::mode_signal;

/// Sampled run on a uniform grid. Row `k` holds the state at `times[k]`, the
/// control evaluated there, and the disturbance applied over
/// `[times[k], times[k + 1])` (zero on the last row).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub controls: Vec<f64>,
    pub disturbances: Vec<DisturbanceVector>,
    pub mode_signal: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn with_capacity(dt: f64, rows: usize) -> Self {
        Trajectory {
            dt,
            times: Vec::with_capacity(rows),
            states: Vec::with_capacity(rows),
            controls: Vec::with_capacity(rows),
            disturbances: Vec::with_capacity(rows),
            mode_signal: Vec::with_capacity(rows),
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: StateVector, u: f64, d: DisturbanceVector) {
        self.times.push(t);
        self.mode_signal.push(mode_signal(&x));
        self.states.push(x);
        self.controls.push(u);
        self.disturbances.push(d);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn vehicles(&self) -> usize {
        self.states.first().map_or(0, StateVector::vehicles)
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last()
    }

    /// Largest absolute state coordinate over the run.
    pub fn max_excursion(&self) -> f64 {
        self.states.iter().map(StateVector::max_abs).fold(0.0, f64::max)
    }

    /// `max_t |sum s~(t) - sum s~(0)|`.
    pub fn conservation_residual(&self) -> f64 {
        let Some(first) = self.states.first() else {
            return 0.0;
        };
        let s0 = first.spacing_sum();
        self.states
            .iter()
            .map(|x| libm::fabs(x.spacing_sum() - s0))
            .fold(0.0, f64::max)
    }

    /// `max_t |sum s~(t) - sum s~(0) - int sum d^v|`: the ring-length balance
    /// with the injected velocity noise accounted for. Zero up to rounding
    /// for every run.
    pub fn balance_residual(&self) -> f64 {
        let Some(first) = self.states.first() else {
            return 0.0;
        };
        let s0 = first.spacing_sum();
        let mut injected = 0.0;
        let mut worst: f64 = 0.0;
        for (k, x) in self.states.iter().enumerate() {
            if k > 0 {
                injected += self.dt * self.disturbances[k - 1].velocity_sum();
            }
            worst = worst.max(libm::fabs(x.spacing_sum() - s0 - injected));
        }
        worst
    }

    /// `max_t |x~11(t) - x~11(0)|`.
    pub fn mode_drift(&self) -> f64 {
        let Some(&m0) = self.mode_signal.first() else {
            return 0.0;
        };
        self.mode_signal
            .iter()
            .map(|m| libm::fabs(m - m0))
            .fold(0.0, f64::max)
    }

    /// Time after which `max|x(t)|` stays below `fraction` of its initial
    /// value. `None` when the run never settles.
    pub fn settling_time(&self, fraction: f64) -> Option<f64> {
        let threshold = fraction * self.states.first()?.max_abs();
        let last_above = self.states.iter().rposition(|x| x.max_abs() > threshold);
        match last_above {
            None => Some(self.times[0]),
            Some(k) if k + 1 < self.len() => Some(self.times[k + 1]),
            Some(_) => None,
        }
    }
}
