//! Optimal velocity model (OVM) for human-driven vehicles.
//!
//! A driver accelerates towards a spacing-dependent desired velocity `V(s)`
//! and reacts to the relative velocity with its leader:
//!
//! ```text
//! dv/dt = alpha * (V(s) - v) + beta * ds/dt
//! ```
//!
//! `V` is zero below the stopping spacing, saturates at `v_max` above the
//! free-flow spacing, and follows a raised cosine in between.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Physical car-following parameters. Gains are per unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvmParams {
    /// Gain on the velocity error `V(s) - v` [1/s].
    pub alpha: f64,
    /// Gain on the relative velocity `ds/dt` [1/s].
    pub beta: f64,
    /// Stopping spacing [m].
    pub s_st: f64,
    /// Free-flow spacing [m].
    pub s_go: f64,
    /// Maximum velocity [m/s].
    pub v_max: f64,
}

impl OvmParams {
    /// The parameter set used for the reference ring experiments:
    /// alpha = 0.6, beta = 0.9, s_st = 5 m, s_go = 35 m, v_max = 30 m/s.
    pub const TABLE1: OvmParams = OvmParams {
        alpha: 0.6,
        beta: 0.9,
        s_st: 5.0,
        s_go: 35.0,
        v_max: 30.0,
    };

    pub fn new(alpha: f64, beta: f64, s_st: f64, s_go: f64, v_max: f64) -> Result<Self> {
        let p = OvmParams {
            alpha,
            beta,
            s_st,
            s_go,
            v_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, alloc::format!("must be finite and > 0, got {x}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("s_st", self.s_st)?;
        positive("v_max", self.v_max)?;
        if !(self.s_go.is_finite() && self.s_go > self.s_st) {
            return Err(Error::invalid(
                "s_go",
                alloc::format!("must exceed s_st = {}, got {}", self.s_st, self.s_go),
            ));
        }
        Ok(())
    }

    fn phase(&self, s: f64) -> f64 {
        PI * (s - self.s_st) / (self.s_go - self.s_st)
    }

    /// Spacing-dependent desired velocity `V(s)`.
    pub fn desired_velocity(&self, s: f64) -> f64 {
        if s <= self.s_st {
            0.0
        } else if s >= self.s_go {
            self.v_max
        } else {
            0.5 * self.v_max * (1.0 - libm::cos(self.phase(s)))
        }
    }

    /// `dV/ds`. Zero on the saturated branches and at the two kinks.
    pub fn desired_velocity_slope(&self, s: f64) -> f64 {
        if s <= self.s_st || s >= self.s_go {
            0.0
        } else {
            self.v_max * PI / (2.0 * (self.s_go - self.s_st)) * libm::sin(self.phase(s))
        }
    }

    /// Forcing function `F(s, ds/dt, v)`: the human driver's acceleration.
    pub fn forcing(&self, s: f64, s_dot: f64, v: f64) -> f64 {
        self.alpha * (self.desired_velocity(s) - v) + self.beta * s_dot
    }
}

/// Uniform-flow equilibrium: every vehicle at spacing `s_star` and velocity
/// `v_star = V(s_star)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub s_star: f64,
    pub v_star: f64,
}

impl Equilibrium {
    pub fn from_spacing(p: &OvmParams, s_star: f64) -> Result<Self> {
        p.validate()?;
        if !s_star.is_finite() || s_star <= 0.0 {
            return Err(Error::invalid(
                "s_star",
                alloc::format!("must be finite and > 0, got {s_star}"),
            ));
        }
        Ok(Equilibrium {
            s_star,
            v_star: p.desired_velocity(s_star),
        })
    }

    /// Inverse problem: the spacing whose desired velocity is `v_star`,
    /// found by bisection on `(s_st, s_go)` where `V` is strictly increasing.
    pub fn from_velocity(p: &OvmParams, v_star: f64) -> Result<Self> {
        p.validate()?;
        if !(v_star > 0.0 && v_star < p.v_max) {
            return Err(Error::invalid(
                "v_star",
                alloc::format!("must lie in (0, {}), got {v_star}", p.v_max),
            ));
        }
        let (mut lo, mut hi) = (p.s_st, p.s_go);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if p.desired_velocity(mid) < v_star {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Equilibrium::from_spacing(p, 0.5 * (lo + hi))
    }
}

/// Coefficients of the linearized car-following law
/// `dv~/dt = alpha1 s~ - alpha2 v~ + alpha3 v~_lead`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoeffs {
    /// Spacing sensitivity [1/s^2].
    pub alpha1: f64,
    /// Own-velocity damping [1/s].
    pub alpha2: f64,
    /// Lead-velocity coupling [1/s].
    pub alpha3: f64,
}

impl LinearCoeffs {
    /// Checked constructor; rejects coefficients violating the
    /// non-degeneracy guard `alpha1 - alpha2*alpha3 + alpha3 != 0`.
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self> {
        let c = LinearCoeffs {
            alpha1,
            alpha2,
            alpha3,
        };
        c.check()?;
        Ok(c)
    }

    /// Raw OVM partial derivatives at the equilibrium, no guard applied.
    pub fn from_ovm(p: &OvmParams, eq: &Equilibrium) -> Self {
        LinearCoeffs {
            alpha1: p.alpha * p.desired_velocity_slope(eq.s_star),
            alpha2: p.alpha + p.beta,
            alpha3: p.beta,
        }
    }

    pub fn guard(&self) -> f64 {
        self.alpha1 - self.alpha2 * self.alpha3 + self.alpha3
    }

    pub fn check(&self) -> Result<()> {
        for (name, x) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
        ] {
            if !x.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        let g = self.guard();
        let scale = 1.0_f64
            .max(libm::fabs(self.alpha1))
            .max(libm::fabs(self.alpha2 * self.alpha3))
            .max(libm::fabs(self.alpha3));
        if libm::fabs(g) <= 1e-12 * scale {
            return Err(Error::Degenerate { value: g });
        }
        Ok(())
    }

    /// Replaces `alpha1`, e.g. to inject a tabulated value instead of the
    /// derivative formula.
    pub fn with_alpha1(self, alpha1: f64) -> Result<Self> {
        LinearCoeffs::new(alpha1, self.alpha2, self.alpha3)
    }
}

/// Linearizes the OVM around `eq`.
pub fn linearize(p: &OvmParams, eq: &Equilibrium) -> Result<LinearCoeffs> {
    p.validate()?;
    let residual = p.forcing(eq.s_star, 0.0, eq.v_star);
    if libm::fabs(residual) > 1e-9 * (1.0 + p.v_max) {
        return Err(Error::invalid(
            "equilibrium",
            alloc::format!("F(s*, 0, v*) = {residual:e} is not zero"),
        ));
    }
    let c = LinearCoeffs::from_ovm(p, eq);
    c.check()?;
    Ok(c)
}

/// Absolute spacing and velocity of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub spacing: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleRate {
    pub spacing_rate: f64,
    pub acceleration: f64,
}

/// Right-hand side of the nonlinear ring. Vehicle `i` follows `i - 1` and
/// vehicle 0 (the controlled one) follows vehicle `n - 1`.
///
/// `av_acceleration` is the controlled vehicle's acceleration; `None` makes
/// it follow the human-driver law like everyone else.
pub fn nonlinear_rhs(
    p: &OvmParams,
    states: &[VehicleState],
    av_acceleration: Option<f64>,
) -> Result<Vec<VehicleRate>> {
    let n = states.len();
    if n < 2 {
        return Err(Error::Dimension {
            what: "ring size (need at least 2 vehicles)",
            expected: 2,
            got: n,
        });
    }
    let rates = (0..n)
        .map(|i| {
            let lead = &states[(i + n - 1) % n];
            let me = &states[i];
            let spacing_rate = lead.velocity - me.velocity;
            let acceleration = match (i, av_acceleration) {
                (0, Some(a)) => a,
                _ => p.forcing(me.spacing, spacing_rate, me.velocity),
            };
            VehicleRate {
                spacing_rate,
                acceleration,
            }
        })
        .collect();
    Ok(rates)
}
