//! `key=value` analysis reports.

use std::collections::BTreeMap;
use std::fmt;

use ringmode_core::controllability::{analyze, spacing_sum_alignment, ControllabilityReport};
use ringmode_core::sim::{closed_loop_abscissa, Controller, Trajectory};
use ringmode_core::spectral::{first_mode, FirstModeSystem};
use ringmode_core::LinearRingModel;

use crate::io::fmt_f64;
use crate::montecarlo::VarianceSummary;

/// Mode drift below this counts as flat.
pub const FLAT_TOLERANCE: f64 = 1e-8;

/// Ordered list of report entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, fmt_f64(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn parse(text: &str) -> BTreeMap<String, String> {
        text.lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn controllability_section(model: &LinearRingModel, c: &ControllabilityReport) -> Report {
    let mut r = Report::new();
    let k = &model.spec.coeffs;
    r.push("n", model.n());
    r.push("state_dim", c.state_dim);
    r.push_f64("alpha1", k.alpha1);
    r.push_f64("alpha2", k.alpha2);
    r.push_f64("alpha3", k.alpha3);
    r.push_f64("degeneracy_guard", k.guard());
    r.push("kalman_rank", c.kalman_rank);
    r.push("kalman_rank_numerical", c.kalman_rank_numerical);
    r.push("pbh_rank", c.pbh_rank());
    r.push("uncontrollable_count", c.uncontrollable_count());
    for (i, m) in c.uncontrollable.iter().enumerate() {
        let i = i + 1;
        r.push_f64(format!("uncontrollable_{i}_re"), m.eigenvalue.re);
        r.push_f64(format!("uncontrollable_{i}_im"), m.eigenvalue.im);
        r.push(format!("uncontrollable_{i}_multiplicity"), m.multiplicity);
        r.push_f64(format!("uncontrollable_{i}_residual"), m.residual);
        r.push_f64(
            format!("uncontrollable_{i}_spacing_sum_alignment"),
            spacing_sum_alignment(&m.left_vector),
        );
    }
    r.push("marginally_stable_uncontrollable", c.marginally_stable_uncontrollable);
    r.push("stabilizable", c.stabilizable);
    r
}

pub fn first_mode_section(fm: &FirstModeSystem) -> Report {
    let mut r = Report::new();
    let a = &fm.a_mode;
    r.push_f64("first_mode_a11", a[(0, 0)]);
    r.push_f64("first_mode_a12", a[(0, 1)]);
    r.push_f64("first_mode_a21", a[(1, 0)]);
    r.push_f64("first_mode_a22", a[(1, 1)]);
    r.push_f64("first_mode_b1", fm.b_mode[0]);
    r.push_f64("first_mode_b2", fm.b_mode[1]);
    r.push_f64("first_mode_lambda1", fm.eigenvalues[0]);
    r.push_f64("first_mode_lambda2", fm.eigenvalues[1]);
    r.push_f64("first_mode_disturbance_gain", fm.dist_gain);
    r
}

/// Structural analysis of the circulant model: controllability and the first
/// modal block. Both plants give the same controllability answer; the
/// circulant one is reported because the modal analysis is built on it.
pub fn structural_report(model: &LinearRingModel) -> ringmode_core::Result<(Report, ControllabilityReport)> {
    let c = analyze(&model.a_circ, &model.b)?;
    let mut r = controllability_section(model, &c);
    r.extend(first_mode_section(&first_mode(model)?));
    Ok((r, c))
}

pub fn closed_loop_section(model: &LinearRingModel, controller: &Controller) -> ringmode_core::Result<Report> {
    let mut r = Report::new();
    r.push("controller_window", format!("{:?}", controller.window).to_lowercase());
    r.push("actuation", format!("{:?}", controller.actuation).to_lowercase());
    let abscissa = closed_loop_abscissa(model, controller)?;
    r.push_f64("closed_loop_abscissa", abscissa);
    r.push("closed_loop_stable_apart_from_mode", abscissa < 0.0);
    Ok(r)
}

pub fn trajectory_section(t: &Trajectory) -> Report {
    let mut r = Report::new();
    r.push("steps", t.len().saturating_sub(1));
    r.push_f64("max_excursion", t.max_excursion());
    r.push_f64("final_max_abs", t.final_state().map_or(f64::NAN, |x| x.max_abs()));
    r.push_f64("conservation_residual", t.conservation_residual());
    r.push_f64("balance_residual", t.balance_residual());
    let drift = t.mode_drift();
    r.push_f64("mode_signal_max_drift", drift);
    r.push("mode_signal_flat", drift <= FLAT_TOLERANCE);
    match t.settling_time(0.05) {
        Some(s) => r.push_f64("settling_time_5pct", s),
        None => r.push("settling_time_5pct", "none"),
    }
    r
}

pub fn variance_section(v: &VarianceSummary, expected_slope: f64) -> Report {
    let mut r = Report::new();
    r.push("mc_runs", v.runs);
    r.push_f64("mc_terminal_variance", v.terminal_variance());
    r.push_f64("mc_terminal_mean", v.terminal_mean());
    r.push_f64("mc_expected_slope", expected_slope);
    if let Some(t_end) = v.times.last() {
        r.push_f64("mc_expected_terminal_variance", expected_slope * t_end);
    }
    if let Some(f) = v.default_fit() {
        r.push_f64("mc_slope", f.slope);
        r.push_f64("mc_slope_se", f.slope_se);
        r.push_f64("mc_intercept", f.intercept);
        r.push_f64("mc_intercept_se", f.intercept_se);
        r.push("mc_fit_points", f.points);
    }
    if let Some(b) = v.default_batch_spread() {
        r.push_f64("mc_slope_batch_se", b.slope_se);
        r.push_f64("mc_intercept_batch_se", b.intercept_se);
        r.push("mc_batches", b.batches);
    }
    r
}
