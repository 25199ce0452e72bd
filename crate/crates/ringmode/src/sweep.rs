//! One-parameter sweeps over a scenario template.

use std::fmt;
use std::str::FromStr;

use ringmode_core::sim::simulate;
use ringmode_core::assemble;

use crate::config::{ScenarioConfig, DISTURBED_VEHICLE};
use crate::error::{Error, Result};
use crate::montecarlo::monte_carlo;

/// Monte Carlo size for sweep points when the template does not set one.
pub const DEFAULT_SWEEP_RUNS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    N,
    Alpha,
    Beta,
    SigmaV,
    SigmaA,
    Dt,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "n" => SweepParam::N,
            "alpha" => SweepParam::Alpha,
            "beta" => SweepParam::Beta,
            "sigma_v" => SweepParam::SigmaV,
            "sigma_a" => SweepParam::SigmaA,
            "dt" => SweepParam::Dt,
            other => return Err(format!("`{other}` is not one of: n, alpha, beta, sigma_v, sigma_a, dt")),
        })
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::N => "n",
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::SigmaV => "sigma_v",
            SweepParam::SigmaA => "sigma_a",
            SweepParam::Dt => "dt",
        })
    }
}

/// Summary of one sweep point. Statistics that do not apply (no noise, or a
/// failed run) are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: SweepParam,
    pub value: f64,
    pub terminal_variance: f64,
    pub slope: f64,
    pub expected_slope: f64,
    pub max_excursion: f64,
    /// Ring-length balance with injected velocity noise accounted for.
    pub conservation_residual: f64,
    pub runs: usize,
    pub error: Option<String>,
}

pub fn apply(cfg: &mut ScenarioConfig, param: SweepParam, value: f64) -> Result<()> {
    let bad = |reason: &str| crate::error::ConfigError::field(param.to_string(), format!("{value}: {reason}"));
    match param {
        SweepParam::N => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(bad("not a vehicle count").into());
            }
            cfg.ring.n = value as usize;
        }
        SweepParam::Alpha => cfg.ring.alpha = value,
        SweepParam::Beta => cfg.ring.beta = value,
        SweepParam::SigmaV => {
            cfg.disturbance.sigma_v = value;
            if cfg.disturbance.velocity_vehicles.is_empty() {
                cfg.disturbance.velocity_vehicles.push(DISTURBED_VEHICLE);
            }
        }
        SweepParam::SigmaA => {
            cfg.disturbance.sigma_a = value;
            if cfg.disturbance.acceleration_vehicles.is_empty() {
                cfg.disturbance.acceleration_vehicles.push(DISTURBED_VEHICLE);
            }
        }
        SweepParam::Dt => cfg.integration.dt = value,
    }
    Ok(())
}

fn point(template: &ScenarioConfig, param: SweepParam, value: f64) -> Result<SweepRow> {
    let mut cfg = template.clone();
    apply(&mut cfg, param, value)?;
    cfg.validate_for_simulation()?;
    let model = assemble(&cfg.ring_spec()?);
    let controller = cfg.controller();
    let spec = cfg.disturbance_spec();
    let x0 = cfg.initial_state();
    let horizon = cfg.horizon();
    let traj = simulate(&model, &controller, &x0, horizon, &spec)?;
    let expected_slope = spec.velocity_sum_variance_rate() / model.n() as f64;
    let mut row = SweepRow {
        parameter: param,
        value,
        terminal_variance: f64::NAN,
        slope: f64::NAN,
        expected_slope,
        max_excursion: traj.max_excursion(),
        conservation_residual: traj.balance_residual(),
        runs: 1,
        error: None,
    };
    if cfg.has_noise() {
        let mc = cfg.monte_carlo.clone();
        let runs = mc.as_ref().map_or(DEFAULT_SWEEP_RUNS, |m| m.runs);
        let stride = mc.map_or(crate::config::DEFAULT_MC_STRIDE, |m| m.stride);
        let v = monte_carlo(&model, &controller, &x0, horizon, &spec, runs, stride)?;
        row.terminal_variance = v.terminal_variance();
        row.slope = v.default_fit().map_or(f64::NAN, |f| f.slope);
        row.runs = runs;
    } else {
        row.terminal_variance = 0.0;
        row.slope = 0.0;
    }
    Ok(row)
}

/// Evaluates every value; failures become flagged rows and the sweep
/// continues.
pub fn sweep(template: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Vec<SweepRow> {
    values
        .iter()
        .map(|&value| {
            point(template, param, value).unwrap_or_else(|e: Error| SweepRow {
                parameter: param,
                value,
                terminal_variance: f64::NAN,
                slope: f64::NAN,
                expected_slope: f64::NAN,
                max_excursion: f64::NAN,
                conservation_residual: f64::NAN,
                runs: 0,
                error: Some(e.to_string()),
            })
        })
        .collect()
}
