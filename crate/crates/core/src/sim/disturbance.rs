use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ring::DisturbanceVector;

/// One disturbance input of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Channel {
    #[default]
    Off,
    /// Independent zero-mean Gaussian noise of intensity `sigma`.
    Gaussian { sigma: f64 },
    /// `gain` times the sample drawn for vehicle `source`'s channel of the
    /// same kind, which must be `Gaussian`.
    Mirror { source: usize, gain: f64 },
}

/// How a noise intensity becomes a per-step sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Discretized white noise: each step draws `N(0, sigma^2 / dt)`, so the
    /// integrated effect has variance `sigma^2 t`.
    #[default]
    White,
    /// Zero-order hold: each step draws `N(0, sigma^2)` and holds it.
    PiecewiseConstant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    pub velocity: Vec<Channel>,
    pub acceleration: Vec<Channel>,
    pub mode: SamplingMode,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 42;

impl DisturbanceSpec {
    pub fn none(n: usize) -> Self {
        DisturbanceSpec {
            velocity: vec![Channel::Off; n],
            acceleration: vec![Channel::Off; n],
            mode: SamplingMode::White,
            seed: DEFAULT_SEED,
        }
    }

    /// Gaussian velocity noise on one vehicle (zero-based).
    pub fn velocity_noise(n: usize, vehicle: usize, sigma: f64) -> Self {
        let mut spec = Self::none(n);
        spec.velocity[vehicle] = Channel::Gaussian { sigma };
        spec
    }

    pub fn acceleration_noise(n: usize, vehicle: usize, sigma: f64) -> Self {
        let mut spec = Self::none(n);
        spec.acceleration[vehicle] = Channel::Gaussian { sigma };
        spec
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn vehicles(&self) -> usize {
        self.velocity.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.velocity.len() != n || self.acceleration.len() != n {
            return Err(Error::Dimension {
                what: "disturbance channels",
                expected: n,
                got: self.velocity.len().min(self.acceleration.len()),
            });
        }
        for channels in [&self.velocity, &self.acceleration] {
            for ch in channels {
                match *ch {
                    Channel::Off => {}
                    Channel::Gaussian { sigma } => {
                        if !(sigma.is_finite() && sigma >= 0.0) {
                            return Err(Error::invalid("sigma", alloc::format!("must be >= 0, got {sigma}")));
                        }
                    }
                    Channel::Mirror { source, gain } => {
                        if !gain.is_finite() {
                            return Err(Error::invalid("gain", "mirror gain must be finite"));
                        }
                        if !matches!(channels.get(source), Some(Channel::Gaussian { .. })) {
                            return Err(Error::invalid(
                                "source",
                                alloc::format!("mirror source {source} is not a Gaussian channel"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// True when every channel is `Off`.
    pub fn is_silent(&self) -> bool {
        self.velocity
            .iter()
            .chain(&self.acceleration)
            .all(|c| matches!(c, Channel::Off))
    }

    /// Variance rate of `sum_i d^v_i` per unit time. Under white sampling
    /// `Var(x~11(t)) = t * rate / n`.
    pub fn velocity_sum_variance_rate(&self) -> f64 {
        self.velocity
            .iter()
            .enumerate()
            .filter_map(|(i, ch)| match ch {
                Channel::Gaussian { sigma } => {
                    let mirrored: f64 = self
                        .velocity
                        .iter()
                        .filter_map(|c| match c {
                            Channel::Mirror { source, gain } if *source == i => Some(*gain),
                            _ => None,
                        })
                        .sum();
                    Some(sigma * sigma * (1.0 + mirrored) * (1.0 + mirrored))
                }
                _ => None,
            })
            .sum()
    }
}

/// Reproducible noise stream for one simulation run. Runs with the same
/// seed and different indices use independent ChaCha streams, so Monte Carlo
/// results do not depend on execution order.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, run: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        NoiseSource { rng }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Draws one step of disturbances into `out`.
    pub fn sample(&mut self, spec: &DisturbanceSpec, dt: f64, out: &mut DisturbanceVector) {
        let scale = match spec.mode {
            SamplingMode::White => 1.0 / libm::sqrt(dt),
            SamplingMode::PiecewiseConstant => 1.0,
        };
        out.fill(0.0);
        for (kind, channels) in [(0, &spec.velocity), (1, &spec.acceleration)] {
            for (i, ch) in channels.iter().enumerate() {
                if let Channel::Gaussian { sigma } = *ch {
                    let value = sigma * scale * self.standard_normal();
                    set(out, kind, i, value);
                }
            }
            for (i, ch) in channels.iter().enumerate() {
                if let Channel::Mirror { source, gain } = *ch {
                    let value = gain * get(out, kind, source);
                    set(out, kind, i, value);
                }
            }
        }
    }
}

fn set(d: &mut DisturbanceVector, kind: usize, i: usize, value: f64) {
    if kind == 0 {
        d.set_velocity(i, value)
    } else {
        d.set_acceleration(i, value)
    }
}

fn get(d: &DisturbanceVector, kind: usize, i: usize) -> f64 {
    if kind == 0 {
        d.velocity(i)
    } else {
        d.acceleration(i)
    }
}
