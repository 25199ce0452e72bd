use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ringmode::config::{ActuationKind, ModelKind, NoiseMode, Purpose, Window};
use ringmode::sweep::SweepParam;
use ringmode::{run_analysis, run_scenario, run_sweep, Overrides, Scenario, ScenarioConfig};

/// Ring-road mixed traffic: controllability analysis and simulation.
#[derive(Debug, Parser)]
#[command(name = "ringmode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory, report and variance CSVs.
    Run(Common),
    /// Controllability and modal analysis of the ring.
    Analyze(Common),
    /// Repeat a scenario over values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// n, alpha, beta, sigma_v, sigma_a or dt.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML scenario file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// free, accel-noise or vel-noise.
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    n: Option<usize>,
    /// Disturbed / kicked vehicle, 1-based.
    #[arg(long)]
    vehicle: Option<usize>,
    #[arg(long = "sigma-v")]
    sigma_v: Option<f64>,
    #[arg(long = "sigma-a")]
    sigma_a: Option<f64>,
    /// white or hold.
    #[arg(long = "noise-mode")]
    noise_mode: Option<NoiseMode>,
    /// Final time [s].
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Monte Carlo runs; enables the variance study.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "alpha1-override")]
    alpha1_override: Option<f64>,
    /// preceding or literal.
    #[arg(long = "controller-window")]
    controller_window: Option<Window>,
    /// assisted or direct.
    #[arg(long)]
    actuation: Option<ActuationKind>,
    /// linear or nonlinear.
    #[arg(long)]
    model: Option<ModelKind>,
}

impl Common {
    fn resolve(&self, purpose: Purpose) -> ringmode::Result<ScenarioConfig> {
        let o = Overrides {
            preset: self.preset.clone(),
            scenario: self.scenario,
            n: self.n,
            vehicle: self.vehicle,
            sigma_v: self.sigma_v,
            sigma_a: self.sigma_a,
            noise_mode: self.noise_mode,
            t_end: self.t_end,
            dt: self.dt,
            runs: self.runs,
            seed: self.seed,
            out: self.out.clone(),
            alpha1_override: self.alpha1_override,
            controller_window: self.controller_window,
            actuation: self.actuation,
            model: self.model,
        };
        ScenarioConfig::resolve(self.config.as_deref(), &o, purpose)
    }
}

fn execute(cli: Cli) -> ringmode::Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve(Purpose::Simulation)?;
            let out = run_scenario(&cfg)?;
            println!("wrote {}", out.dir.display());
            for key in ["kalman_rank", "stabilizable", "mode_signal_flat", "final_max_abs", "mc_slope"] {
                if let Some(v) = out.report.get(key) {
                    println!("{key}={v}");
                }
            }
        }
        Command::Analyze(common) => {
            let cfg = common.resolve(Purpose::Analysis)?;
            print!("{}", run_analysis(&cfg)?);
        }
        Command::Sweep { common, param, values } => {
            // Sweep points are checked one by one so a bad value only flags its row.
            let cfg = common.resolve(Purpose::Analysis)?;
            let rows = run_sweep(&cfg, param, &values)?;
            for r in &rows {
                match &r.error {
                    None => println!(
                        "{}={} terminal_var={:.6} slope={:.6} expected={:.6}",
                        r.parameter, r.value, r.terminal_variance, r.slope, r.expected_slope
                    ),
                    Some(e) => println!("{}={} failed: {e}", r.parameter, r.value),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
