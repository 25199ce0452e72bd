use std::fs;

use ringmode::config::Purpose;
use ringmode::{ConfigError, Error, Overrides, ScenarioConfig};

fn resolve_text(text: &str) -> Result<ScenarioConfig, Error> {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("scenario.toml");
    fs::write(&path, text).unwrap();
    ScenarioConfig::resolve(Some(&path), &Overrides::default(), Purpose::Simulation)
}

#[test]
fn zero_gains_rejected_with_line() {
    let err = resolve_text("[ring]\nalpha = 0.0\nbeta = 0.0\n").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    match err {
        Error::Config(ConfigError::Field { field, line, .. }) => {
            assert_eq!(field, "ring.alpha");
            assert_eq!(line, Some(2));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_key_rejected_with_position() {
    let err = resolve_text("[ring]\nn = 10\nalpah = 0.5\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("alpah"), "{msg}");
    assert!(msg.contains("line 3"), "{msg}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn vehicle_outside_ring() {
    let err = resolve_text("[disturbance]\nvelocity_vehicles = [11]\nsigma_v = 1.0\n").unwrap_err();
    assert!(err.to_string().contains("scenario.toml:2: disturbance.velocity_vehicles"), "{err}");
}

#[test]
fn partial_file_layers_over_scenario() {
    let cfg = resolve_text("scenario = \"vel-noise\"\n[integration]\nT = 10.0\n[monte_carlo]\nruns = 50\n").unwrap();
    assert_eq!(cfg.disturbance.velocity_vehicles, vec![5]);
    assert_eq!(cfg.integration.t_end, 10.0);
    assert_eq!(cfg.integration.dt, 0.01);
    assert_eq!(cfg.monte_carlo.unwrap().runs, 50);
}

#[test]
fn misc_invalid_values() {
    for text in [
        "[integration]\ndt = 0.07\n",
        "[integration]\ndt = -1.0\n",
        "[disturbance]\nsigma_a = -1.0\n",
        "[ring]\nn = 4\n",
        "[monte_carlo]\nruns = 1\n",
        "preset = \"other\"\n",
        "scenario = \"storm\"\n",
        "[integration]\nmodel = \"nonlinear\"\n[disturbance]\nvelocity_vehicles = [1]\n",
    ] {
        let err = resolve_text(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}: {err}");
    }
}

#[test]
fn degenerate_linearization_surfaces_guard() {
    // alpha1 = alpha3 * (alpha2 - 1) = 0.45 cancels the guard for Table 1.
    let err = resolve_text("[ring]\nalpha1_override = 0.45\n").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("ring"), "{err}");
}
