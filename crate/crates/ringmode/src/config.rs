//! Scenario configuration.
//!
//! A scenario is resolved in layers: preset, then scenario template, then the
//! config file (TOML, flat `[section]` tables of `key = value`), then
//! command-line overrides. The fully resolved result is written next to the
//! outputs as `config.resolved`, which is itself a valid config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use ringmode_core::sim::{
    Actuation, Channel, Controller, ControllerGains, ControllerWindow, DisturbanceSpec, Horizon, SamplingMode,
    DEFAULT_SEED,
};
use ringmode_core::{Equilibrium, OvmParams, RingSpec, StateVector};

use crate::error::{ConfigError, Result};

pub const PAPER_TABLE1: &str = "paper-table1";

/// Vehicle disturbed or kicked in the reference scenarios (1-based).
pub const DISTURBED_VEHICLE: usize = 5;

macro_rules! section {
    (
        $(#[$meta:meta])*
        $name:ident / $partial:ident {
            $( $(#[$fmeta:meta])* $field:ident : $ty:ty, )*
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fmeta])* pub $field: $ty, )*
        }

        #[derive(Debug, Clone, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $partial {
            $( $(#[$fmeta])* $field: Option<$ty>, )*
        }

        impl $partial {
            fn apply(self, to: &mut $name) {
                $( if let Some(v) = self.$field { to.$field = v; } )*
            }
        }
    };
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name {
            $( #[serde(rename = $text)] $variant, )*
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $( $text => Ok($name::$variant), )*
                    other => Err(format!(
                        "`{other}` is not one of: {}",
                        [$($text),*].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $( $name::$variant => $text, )* })
            }
        }
    };
}

keyword_enum!(Scenario {
    Free => "free",
    AccelNoise => "accel-noise",
    VelNoise => "vel-noise",
});

keyword_enum!(InitialKind {
    Zero => "zero",
    VelocityKick => "velocity-kick",
});

keyword_enum!(NoiseMode {
    White => "white",
    Hold => "hold",
});

keyword_enum!(Window {
    Preceding => "preceding",
    Literal => "literal",
});

keyword_enum!(ActuationKind {
    Assisted => "assisted",
    Direct => "direct",
});

keyword_enum!(ModelKind {
    Linear => "linear",
    Nonlinear => "nonlinear",
});

section!(
    /// Ring size, equilibrium spacing and OVM parameters.
    RingSection / RingPartial {
        n: usize,
        s_star: f64,
        alpha: f64,
        beta: f64,
        s_st: f64,
        s_go: f64,
        v_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha1_override: Option<f64>,
    }
);

section!(
    InitialSection / InitialPartial {
        kind: InitialKind,
        /// 1-based.
        vehicle: usize,
        magnitude: f64,
    }
);

section!(
    /// Gaussian noise on the listed vehicles (1-based).
    DisturbanceSection / DisturbancePartial {
        mode: NoiseMode,
        seed: u64,
        velocity_vehicles: Vec<usize>,
        sigma_v: f64,
        acceleration_vehicles: Vec<usize>,
        sigma_a: f64,
    }
);

section!(
    ControllerSection / ControllerPartial {
        window: Window,
        actuation: ActuationKind,
        gamma: [f64; 5],
        lambda: [f64; 5],
    }
);

section!(
    IntegrationSection / IntegrationPartial {
        #[serde(rename = "T")]
        t_end: f64,
        dt: f64,
        model: ModelKind,
    }
);

section!(
    OutputSection / OutputPartial {
        dir: PathBuf,
        trajectory: bool,
        matrices: bool,
        modal: bool,
        pbh: bool,
    }
);

section!(
    MonteCarloSection / MonteCarloPartial {
        runs: usize,
        /// Record the mode signal every `stride` steps.
        stride: usize,
    }
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: String,
    pub scenario: Scenario,
    pub ring: RingSection,
    pub initial: InitialSection,
    pub disturbance: DisturbanceSection,
    pub controller: ControllerSection,
    pub integration: IntegrationSection,
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    scenario: Option<Scenario>,
    ring: Option<RingPartial>,
    initial: Option<InitialPartial>,
    disturbance: Option<DisturbancePartial>,
    controller: Option<ControllerPartial>,
    integration: Option<IntegrationPartial>,
    output: Option<OutputPartial>,
    monte_carlo: Option<MonteCarloPartial>,
}

/// Command-line overrides, applied last.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub scenario: Option<Scenario>,
    pub n: Option<usize>,
    pub vehicle: Option<usize>,
    pub sigma_v: Option<f64>,
    pub sigma_a: Option<f64>,
    pub noise_mode: Option<NoiseMode>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub alpha1_override: Option<f64>,
    pub controller_window: Option<Window>,
    pub actuation: Option<ActuationKind>,
    pub model: Option<ModelKind>,
}

pub const DEFAULT_MC_STRIDE: usize = 10;

/// What a resolved config will be used for; simulations need more of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Analysis,
    Simulation,
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        if name != PAPER_TABLE1 {
            return Err(ConfigError::UnknownPreset(name.to_string()));
        }
        let p = OvmParams::TABLE1;
        Ok(ScenarioConfig {
            preset: name.to_string(),
            scenario: Scenario::Free,
            ring: RingSection {
                n: 10,
                s_star: 20.0,
                alpha: p.alpha,
                beta: p.beta,
                s_st: p.s_st,
                s_go: p.s_go,
                v_max: p.v_max,
                alpha1_override: None,
            },
            initial: InitialSection {
                kind: InitialKind::VelocityKick,
                vehicle: DISTURBED_VEHICLE,
                magnitude: 1.0,
            },
            disturbance: DisturbanceSection {
                mode: NoiseMode::White,
                seed: DEFAULT_SEED,
                velocity_vehicles: Vec::new(),
                sigma_v: 0.0,
                acceleration_vehicles: Vec::new(),
                sigma_a: 0.0,
            },
            controller: ControllerSection {
                window: Window::Preceding,
                actuation: ActuationKind::Assisted,
                gamma: [1.0; 5],
                lambda: [1.0; 5],
            },
            integration: IntegrationSection {
                t_end: 60.0,
                dt: 0.01,
                model: ModelKind::Linear,
            },
            output: OutputSection {
                dir: PathBuf::from("out"),
                trajectory: true,
                matrices: true,
                modal: true,
                pbh: true,
            },
            monte_carlo: None,
        })
    }

    /// Table-1 preset with one of the three reference scenarios applied.
    pub fn paper(scenario: Scenario) -> Self {
        let mut cfg = Self::preset(PAPER_TABLE1).expect("built-in preset");
        cfg.apply_scenario(scenario);
        cfg
    }

    /// Resets initial condition, noise and horizon to the scenario template.
    pub fn apply_scenario(&mut self, scenario: Scenario) {
        self.scenario = scenario;
        let d = &mut self.disturbance;
        d.velocity_vehicles.clear();
        d.acceleration_vehicles.clear();
        d.sigma_v = 0.0;
        d.sigma_a = 0.0;
        self.initial = InitialSection {
            kind: InitialKind::Zero,
            vehicle: DISTURBED_VEHICLE,
            magnitude: 0.0,
        };
        match scenario {
            Scenario::Free => {
                self.initial.kind = InitialKind::VelocityKick;
                self.initial.magnitude = 1.0;
                self.integration.t_end = 60.0;
            }
            Scenario::AccelNoise => {
                d.acceleration_vehicles.push(DISTURBED_VEHICLE);
                d.sigma_a = 1.0;
                self.integration.t_end = 50.0;
            }
            Scenario::VelNoise => {
                d.velocity_vehicles.push(DISTURBED_VEHICLE);
                d.sigma_v = 1.0;
                self.integration.t_end = 50.0;
            }
        }
    }

    /// Layers `file` (if any) and `overrides` on top of the preset and
    /// scenario they name, then validates.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides, purpose: Purpose) -> Result<Self> {
        let (text, parsed) = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
                let parsed: FileConfig = toml::from_str(&text).map_err(|e| ConfigError::Syntax {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })?;
                (Some(text), parsed)
            }
            None => (None, FileConfig::default()),
        };
        let preset = overrides
            .preset
            .clone()
            .or(parsed.preset.clone())
            .unwrap_or_else(|| PAPER_TABLE1.to_string());
        let mut cfg = Self::preset(&preset)?;
        cfg.apply_scenario(overrides.scenario.or(parsed.scenario).unwrap_or(Scenario::Free));
        cfg.apply_file(parsed);
        cfg.apply_overrides(overrides);
        cfg.validate_for(purpose).map_err(|e| match (e, file, text) {
            (ConfigError::Field { field, reason, .. }, Some(path), Some(text)) => ConfigError::Field {
                line: locate(&text, &field),
                path: Some(path.to_path_buf()),
                field,
                reason,
            },
            (e, _, _) => e,
        })?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: FileConfig) {
        macro_rules! merge {
            ($($s:ident),*) => { $( if let Some(p) = f.$s { p.apply(&mut self.$s); } )* };
        }
        merge!(ring, initial, disturbance, controller, integration, output);
        if let Some(mc) = f.monte_carlo {
            let target = self.monte_carlo.get_or_insert(MonteCarloSection {
                runs: 1000,
                stride: DEFAULT_MC_STRIDE,
            });
            mc.apply(target);
        }
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(n) = o.n {
            self.ring.n = n;
        }
        if let Some(v) = o.vehicle {
            let d = &mut self.disturbance;
            for list in [&mut d.velocity_vehicles, &mut d.acceleration_vehicles] {
                if !list.is_empty() {
                    *list = vec![v];
                }
            }
            self.initial.vehicle = v;
        }
        let vehicle = o.vehicle.unwrap_or(self.initial.vehicle);
        if let Some(s) = o.sigma_v {
            self.disturbance.sigma_v = s;
            if self.disturbance.velocity_vehicles.is_empty() {
                self.disturbance.velocity_vehicles.push(vehicle);
            }
        }
        if let Some(s) = o.sigma_a {
            self.disturbance.sigma_a = s;
            if self.disturbance.acceleration_vehicles.is_empty() {
                self.disturbance.acceleration_vehicles.push(vehicle);
            }
        }
        if let Some(m) = o.noise_mode {
            self.disturbance.mode = m;
        }
        if let Some(seed) = o.seed {
            self.disturbance.seed = seed;
        }
        if let Some(t) = o.t_end {
            self.integration.t_end = t;
        }
        if let Some(dt) = o.dt {
            self.integration.dt = dt;
        }
        if let Some(runs) = o.runs {
            self.monte_carlo
                .get_or_insert(MonteCarloSection {
                    runs,
                    stride: DEFAULT_MC_STRIDE,
                })
                .runs = runs;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if o.alpha1_override.is_some() {
            self.ring.alpha1_override = o.alpha1_override;
        }
        if let Some(w) = o.controller_window {
            self.controller.window = w;
        }
        if let Some(a) = o.actuation {
            self.controller.actuation = a;
        }
        if let Some(m) = o.model {
            self.integration.model = m;
        }
    }

    /// Checks the ring, noise levels and horizon.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.ring;
        if r.n < 2 {
            return Err(ConfigError::field("ring.n", format!("ring needs at least 2 vehicles, got {}", r.n)));
        }
        self.ovm_params()?;
        self.ring_spec()?;
        let d = &self.disturbance;
        for (field, s) in [("disturbance.sigma_v", d.sigma_v), ("disturbance.sigma_a", d.sigma_a)] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(ConfigError::field(field, format!("must be >= 0, got {s}")));
            }
        }
        let i = &self.integration;
        Horizon::new(i.t_end, i.dt).map_err(|e| core_field("integration", e))?;
        if let Some(mc) = &self.monte_carlo {
            if mc.runs < 2 {
                return Err(ConfigError::field("monte_carlo.runs", "need at least 2 runs for a variance"));
            }
            if mc.stride == 0 {
                return Err(ConfigError::field("monte_carlo.stride", "must be at least 1"));
            }
        }
        if i.model == ModelKind::Nonlinear && (self.has_noise() || self.monte_carlo.is_some()) {
            return Err(ConfigError::field(
                "integration.model",
                "the nonlinear model runs noise-free only",
            ));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus what a simulation needs: vehicle
    /// references inside the ring and a ring large enough for the feedback
    /// law.
    pub fn validate_for_simulation(&self) -> Result<(), ConfigError> {
        self.validate()?;
        let n = self.ring.n;
        let in_ring = |field: &str, v: usize| {
            if (1..=n).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::field(field, format!("vehicle {v} is outside 1..={n}")))
            }
        };
        if self.initial.kind == InitialKind::VelocityKick {
            in_ring("initial.vehicle", self.initial.vehicle)?;
        }
        let d = &self.disturbance;
        for &v in &d.velocity_vehicles {
            in_ring("disturbance.velocity_vehicles", v)?;
        }
        for &v in &d.acceleration_vehicles {
            in_ring("disturbance.acceleration_vehicles", v)?;
        }
        self.controller()
            .gain_vector(n)
            .map_err(|e| core_field("ring", e))?;
        Ok(())
    }

    pub fn validate_for(&self, purpose: Purpose) -> Result<(), ConfigError> {
        match purpose {
            Purpose::Analysis => self.validate(),
            Purpose::Simulation => self.validate_for_simulation(),
        }
    }

    pub fn has_noise(&self) -> bool {
        let d = &self.disturbance;
        !d.velocity_vehicles.is_empty() || !d.acceleration_vehicles.is_empty()
    }

    pub fn ovm_params(&self) -> Result<OvmParams, ConfigError> {
        let r = &self.ring;
        OvmParams::new(r.alpha, r.beta, r.s_st, r.s_go, r.v_max).map_err(|e| core_field("ring", e))
    }

    pub fn equilibrium(&self) -> Result<Equilibrium, ConfigError> {
        Equilibrium::from_spacing(&self.ovm_params()?, self.ring.s_star).map_err(|e| core_field("ring", e))
    }

    pub fn ring_spec(&self) -> Result<RingSpec, ConfigError> {
        let spec = RingSpec::from_ovm(&self.ovm_params()?, self.ring.n, self.ring.s_star);
        let spec = match (spec, self.ring.alpha1_override) {
            (Ok(mut s), Some(a1)) => s.coeffs.with_alpha1(a1).map(|c| {
                s.coeffs = c;
                s
            }),
            (s, _) => s,
        };
        spec.map_err(|e| core_field("ring", e))
    }

    pub fn controller(&self) -> Controller {
        let c = &self.controller;
        Controller {
            gains: ControllerGains {
                spacing: c.gamma,
                velocity: c.lambda,
            },
            window: match c.window {
                Window::Preceding => ControllerWindow::Preceding,
                Window::Literal => ControllerWindow::Literal,
            },
            actuation: match c.actuation {
                ActuationKind::Assisted => Actuation::Assisted,
                ActuationKind::Direct => Actuation::Direct,
            },
        }
    }

    pub fn disturbance_spec(&self) -> DisturbanceSpec {
        let d = &self.disturbance;
        let mut spec = DisturbanceSpec::none(self.ring.n).with_seed(d.seed);
        spec.mode = match d.mode {
            NoiseMode::White => SamplingMode::White,
            NoiseMode::Hold => SamplingMode::PiecewiseConstant,
        };
        for &v in &d.velocity_vehicles {
            spec.velocity[v - 1] = Channel::Gaussian { sigma: d.sigma_v };
        }
        for &v in &d.acceleration_vehicles {
            spec.acceleration[v - 1] = Channel::Gaussian { sigma: d.sigma_a };
        }
        spec
    }

    pub fn initial_state(&self) -> StateVector {
        let mut x = StateVector::zeros(self.ring.n);
        if self.initial.kind == InitialKind::VelocityKick {
            x.set_velocity(self.initial.vehicle - 1, self.initial.magnitude);
        }
        x
    }

    pub fn horizon(&self) -> Horizon {
        Horizon {
            t_end: self.integration.t_end,
            dt: self.integration.dt,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })
    }
}

fn core_field(section: &str, e: ringmode_core::Error) -> ConfigError {
    match e {
        ringmode_core::Error::InvalidParameter { name, reason } => ConfigError::field(format!("{section}.{name}"), reason),
        other => ConfigError::field(section, other.to_string()),
    }
}

/// Line (1-based) where `section.key` is set in a TOML document, if it is.
fn locate(text: &str, field: &str) -> Option<usize> {
    let (section, key) = field.split_once('.').unwrap_or(("", field));
    let mut current = String::new();
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        let Some((k, _)) = line.split_once('=') else {
            continue;
        };
        if current == section && k.trim() == key {
            return Some(i + 1);
        }
    }
    section_line
}
