//! Scenario execution and artifact layout.
//!
//! A run directory holds `config.resolved`, `analysis.txt`, `trajectory.csv`
//! and, with Monte Carlo enabled, `variance.csv`. `analyze` adds the model
//! matrices, the modal eigenvalue table and the PBH table.

use std::fs;
use std::path::{Path, PathBuf};

use ringmode_core::sim::{simulate, simulate_nonlinear, Trajectory};
use ringmode_core::spectral::block_diagonalize;
use ringmode_core::{assemble, LinearRingModel};

use crate::config::{ModelKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::montecarlo::{monte_carlo, VarianceSummary};
use crate::report::{closed_loop_section, structural_report, trajectory_section, variance_section, Report};
use crate::sweep::{sweep, SweepParam, SweepRow};

pub const CONFIG_FILE: &str = "config.resolved";
pub const ANALYSIS_FILE: &str = "analysis.txt";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const VARIANCE_FILE: &str = "variance.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub report: Report,
    pub trajectory: Trajectory,
    pub variance: Option<VarianceSummary>,
}

fn prepare_dir(cfg: &ScenarioConfig) -> Result<PathBuf> {
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_text(&dir.join(CONFIG_FILE), &cfg.to_toml())?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn header(cfg: &ScenarioConfig) -> Report {
    let mut r = Report::new();
    r.push("preset", &cfg.preset);
    r.push("scenario", cfg.scenario);
    r.push("seed", cfg.disturbance.seed);
    r
}

pub fn model_for(cfg: &ScenarioConfig) -> Result<LinearRingModel> {
    Ok(assemble(&cfg.ring_spec()?))
}

/// Simulates the scenario and writes its artifacts. A diverging run leaves
/// `config.resolved` behind and returns the divergence error.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    cfg.validate_for_simulation()?;
    let dir = prepare_dir(cfg)?;
    let model = model_for(cfg)?;
    let controller = cfg.controller();
    let spec = cfg.disturbance_spec();
    let x0 = cfg.initial_state();
    let horizon = cfg.horizon();

    let mut report = header(cfg);
    report.extend(structural_report(&model)?.0);
    report.extend(closed_loop_section(&model, &controller)?);
    report.push("model", cfg.integration.model);
    report.push_f64("T", horizon.t_end);
    report.push_f64("dt", horizon.dt);

    let trajectory = match cfg.integration.model {
        ModelKind::Linear => simulate(&model, &controller, &x0, horizon, &spec)?,
        ModelKind::Nonlinear => simulate_nonlinear(&cfg.ovm_params()?, &cfg.equilibrium()?, &controller, &x0, horizon)?,
    };
    report.extend(trajectory_section(&trajectory));
    if cfg.output.trajectory {
        io::write_trajectory(&dir.join(TRAJECTORY_FILE), &trajectory)?;
    }

    let variance = match &cfg.monte_carlo {
        Some(mc) => {
            let v = monte_carlo(&model, &controller, &x0, horizon, &spec, mc.runs, mc.stride)?;
            io::write_variance(&dir.join(VARIANCE_FILE), &v)?;
            let expected = spec.velocity_sum_variance_rate() / model.n() as f64;
            report.extend(variance_section(&v, expected));
            Some(v)
        }
        None => None,
    };
    write_text(&dir.join(ANALYSIS_FILE), &report.to_string())?;
    Ok(RunArtifacts {
        dir,
        report,
        trajectory,
        variance,
    })
}

/// Structural analysis only: controllability, modal blocks, matrices.
pub fn run_analysis(cfg: &ScenarioConfig) -> Result<Report> {
    cfg.validate()?;
    let dir = prepare_dir(cfg)?;
    let model = model_for(cfg)?;
    let mut report = header(cfg);
    let (structure, controllability) = structural_report(&model)?;
    report.extend(structure);
    // The feedback law needs five vehicles; smaller rings get the open-loop
    // analysis only.
    if model.n() >= ringmode_core::sim::GAIN_HORIZON {
        report.extend(closed_loop_section(&model, &cfg.controller())?);
    }
    if cfg.output.matrices {
        io::write_matrix(&dir.join("A_open.csv"), &model.a_open)?;
        io::write_matrix(&dir.join("A_circ.csv"), &model.a_circ)?;
        io::write_matrix(&dir.join("B.csv"), &model.b)?;
    }
    if cfg.output.modal {
        io::write_modal_eigenvalues(&dir.join("modal_eigenvalues.csv"), &block_diagonalize(&model)?)?;
    }
    if cfg.output.pbh {
        io::write_pbh(&dir.join("pbh.csv"), &controllability.modes)?;
    }
    write_text(&dir.join(ANALYSIS_FILE), &report.to_string())?;
    Ok(report)
}

pub fn run_sweep(cfg: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    let dir = prepare_dir(cfg)?;
    let rows = sweep(cfg, param, values);
    io::write_sweep(&dir.join(SWEEP_FILE), &rows)?;
    Ok(rows)
}
