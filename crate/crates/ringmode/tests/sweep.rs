use ringmode::montecarlo::monte_carlo;
use ringmode::runner::model_for;
use ringmode::sweep::{apply, sweep, SweepParam};
use ringmode::{Overrides, Scenario, ScenarioConfig};

fn vel_noise(runs: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::paper(Scenario::VelNoise);
    cfg.apply_overrides(&Overrides {
        runs: Some(runs),
        ..Overrides::default()
    });
    cfg
}

#[test]
fn slope_falls_with_ring_size() {
    let rows = sweep(&vel_noise(400), SweepParam::N, &[4.0, 6.0, 8.0, 10.0]);
    assert!(rows[0].error.is_some(), "n = 4 is below the gain horizon");
    let ok: Vec<_> = rows[1..].iter().collect();
    for r in &ok {
        assert!(r.error.is_none());
        assert!((r.slope / r.expected_slope - 1.0).abs() < 0.15, "{r:?}");
        assert!(r.conservation_residual < 1e-8);
    }
    assert!(ok.windows(2).all(|w| w[1].slope < w[0].slope));
}

#[test]
fn zero_sigma_gives_zero_variance() {
    let rows = sweep(&vel_noise(50), SweepParam::SigmaV, &[0.0]);
    assert_eq!(rows[0].terminal_variance, 0.0);
    assert_eq!(rows[0].slope, 0.0);
}

// Two independent Monte Carlo slopes differ by sampling noise of several
// percent at this size, so agreement is judged against their batch errors.
#[test]
fn slope_insensitive_to_dt() {
    let cfg = vel_noise(1000);
    let fits: Vec<(f64, f64)> = [0.01, 0.005]
        .iter()
        .map(|&dt| {
            let mut c = cfg.clone();
            apply(&mut c, SweepParam::Dt, dt).unwrap();
            let m = model_for(&c).unwrap();
            let v = monte_carlo(&m, &c.controller(), &c.initial_state(), c.horizon(), &c.disturbance_spec(), 1000, 10)
                .unwrap();
            (v.default_fit().unwrap().slope, v.default_batch_spread().unwrap().slope_se)
        })
        .collect();
    let ((a, sa), (b, sb)) = (fits[0], fits[1]);
    assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
    for s in [a, b] {
        assert!((s / 0.1 - 1.0).abs() < 0.1, "{s}");
    }
}

#[test]
fn unstable_alpha_is_flagged_not_fatal() {
    let rows = sweep(&vel_noise(20), SweepParam::Alpha, &[0.0, 0.6]);
    assert!(rows[0].error.is_some());
    assert!(rows[1].error.is_none());
}
