use ringmode_core::sim::{
    closed_loop_propagator, mode_signal_path, simulate, simulate_run, Channel, Controller, ControllerGains,
    DisturbanceSpec, Horizon,
};
use ringmode_core::spectral::mode_signal;
use ringmode_core::{assemble, LinearRingModel, OvmParams, RingSpec, StateVector};

fn table1() -> LinearRingModel {
    assemble(&RingSpec::from_ovm(&OvmParams::TABLE1, 10, 20.0).unwrap())
}

fn perturbed() -> StateVector {
    let mut x = StateVector::zeros(10);
    x.set_spacing(4, 2.0);
    x.set_velocity(2, -1.0);
    x
}

#[test]
fn mode_signal_ignores_the_controller() {
    let m = table1();
    let spec = DisturbanceSpec::velocity_noise(10, 4, 1.0);
    let h = Horizon::new(20.0, 0.01).unwrap();
    let base = simulate(&m, &Controller::new(ControllerGains::UNITY), &perturbed(), h, &spec).unwrap();
    let gains = ControllerGains {
        spacing: [0.7, 1.2, 0.9, 1.4, 0.6],
        velocity: [1.3, 0.8, 1.1, 0.5, 1.0],
    };
    let other = simulate(&m, &Controller::new(gains), &perturbed(), h, &spec).unwrap();
    let gap = base
        .mode_signal
        .iter()
        .zip(&other.mode_signal)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-10, "{gap:e}");
}

#[test]
fn rk4_is_fourth_order() {
    let m = table1();
    let c = Controller::default();
    let x0 = perturbed();
    let exact = closed_loop_propagator(&m, &c).unwrap().propagate(x0.as_vector(), 20.0);
    let err = |dt| {
        let t = simulate(&m, &c, &x0, Horizon::new(20.0, dt).unwrap(), &DisturbanceSpec::none(10)).unwrap();
        (t.final_state().unwrap().as_vector() - &exact).amax()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((14.0..=18.0).contains(&ratio), "{ratio}");
}

#[test]
fn noise_free_conservation() {
    let m = table1();
    let t = simulate(&m, &Controller::default(), &perturbed(), Horizon::new(60.0, 0.01).unwrap(), &DisturbanceSpec::none(10))
        .unwrap();
    assert!(t.conservation_residual() < 1e-10);
    assert!(t.mode_drift() < 1e-10);
}

#[test]
fn cancelling_noise_keeps_the_mode_fixed() {
    let m = table1();
    let mut spec = DisturbanceSpec::velocity_noise(10, 1, 1.0);
    spec.velocity[2] = Channel::Mirror { source: 1, gain: -1.0 };
    let t = simulate(&m, &Controller::default(), &perturbed(), Horizon::new(50.0, 0.01).unwrap(), &spec).unwrap();
    assert!(t.mode_drift() < 1e-8, "{:e}", t.mode_drift());
    assert!(t.max_excursion() > 0.1);
}

#[test]
fn acceleration_noise_leaves_the_mode_alone() {
    let m = table1();
    let spec = DisturbanceSpec::acceleration_noise(10, 4, 1.0);
    let t = simulate(&m, &Controller::default(), &perturbed(), Horizon::new(50.0, 0.01).unwrap(), &spec).unwrap();
    assert!(t.mode_drift() < 1e-8);
}

#[test]
fn increments_match_the_injected_noise() {
    let m = table1();
    let spec = DisturbanceSpec::velocity_noise(10, 4, 1.0);
    let t = simulate(&m, &Controller::default(), &perturbed(), Horizon::new(10.0, 0.01).unwrap(), &spec).unwrap();
    let mut integrated = 0.0;
    for k in 0..t.len() - 1 {
        integrated += t.dt * t.disturbances[k].velocity_sum();
        let drift = t.states[k + 1].spacing_sum() - t.states[0].spacing_sum();
        assert!((drift - integrated).abs() < 1e-10);
    }
}

#[test]
fn euler_maruyama_moments() {
    let m = table1();
    let spec = DisturbanceSpec::velocity_noise(10, 4, 1.0);
    let h = Horizon::new(10.0, 0.01).unwrap();
    let runs = 400;
    let finals: Vec<f64> = (0..runs)
        .map(|r| *mode_signal_path(&m, &Controller::default(), &StateVector::zeros(10), h, &spec, r, 1000).unwrap().last().unwrap())
        .collect();
    let mean = finals.iter().sum::<f64>() / runs as f64;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let expected = 10.0 / 10.0;
    assert!(mean.abs() < 3.0 * (expected / runs as f64).sqrt(), "{mean}");
    // Sample variance of 400 Gaussian draws has relative sd ~7%.
    assert!((var / expected - 1.0).abs() < 0.25, "{var}");
}

#[test]
fn runs_are_reproducible() {
    let m = table1();
    let spec = DisturbanceSpec::velocity_noise(10, 4, 1.0);
    let h = Horizon::new(2.0, 0.01).unwrap();
    let a = simulate_run(&m, &Controller::default(), &perturbed(), h, &spec, 5).unwrap();
    let b = simulate_run(&m, &Controller::default(), &perturbed(), h, &spec, 5).unwrap();
    let c = simulate_run(&m, &Controller::default(), &perturbed(), h, &spec, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.mode_signal[0], mode_signal(&perturbed()));
}

#[test]
fn free_response_settles() {
    let m = table1();
    let mut x = StateVector::zeros(10);
    x.set_spacing(4, 1.0);
    x.set_spacing(5, -1.0);
    let t = simulate(&m, &Controller::default(), &x, Horizon::new(60.0, 0.01).unwrap(), &DisturbanceSpec::none(10)).unwrap();
    assert!(t.final_state().unwrap().max_abs() < 0.05);
    assert!(t.settling_time(0.05).is_some());
}

#[test]
fn balance_holds_under_velocity_noise() {
    let m = table1();
    let spec = DisturbanceSpec::velocity_noise(10, 4, 1.0);
    let t = simulate(&m, &Controller::default(), &perturbed(), Horizon::new(20.0, 0.01).unwrap(), &spec).unwrap();
    assert!(t.balance_residual() < 1e-10);
    assert!(t.conservation_residual() > 0.1);
}

#[test]
fn stored_mode_signal_matches_states() {
    let m = table1();
    let spec = DisturbanceSpec::velocity_noise(10, 4, 1.0);
    let t = simulate(&m, &Controller::default(), &perturbed(), Horizon::new(5.0, 0.01).unwrap(), &spec).unwrap();
    for (x, v) in t.states.iter().zip(&t.mode_signal) {
        assert!((mode_signal(x) - v).abs() <= 1e-12);
    }
    assert_eq!(t.times.len(), t.controls.len());
    assert_eq!(t.times.len(), t.disturbances.len());
    for w in t.times.windows(2) {
        assert!((w[1] - w[0] - 0.01).abs() < 1e-12);
    }
}

// Trailing-window sample variances of every coordinate settle down under
// acceleration noise.
#[test]
fn acceleration_noise_response_is_stationary() {
    let m = table1();
    let spec = DisturbanceSpec::acceleration_noise(10, 4, 1.0);
    let t = simulate(&m, &Controller::default(), &StateVector::zeros(10), Horizon::new(400.0, 0.01).unwrap(), &spec)
        .unwrap();
    let window_var = |from: usize, to: usize, c: usize| {
        let xs: Vec<f64> = t.states[from..to].iter().map(|x| x.as_slice()[c]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    };
    for c in 0..20 {
        let late = window_var(20_000, 40_001, c);
        let later = window_var(30_000, 40_001, c);
        assert!(late.is_finite() && late < 10.0, "coordinate {c}: {late}");
        assert!((late - later).abs() <= 0.35 * late.max(1e-6), "coordinate {c}: {late} vs {later}");
    }
}

mod conservation {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn any_gains_any_acceleration_noise(
            gamma in proptest::array::uniform5(-2.0f64..2.0),
            lambda in proptest::array::uniform5(-2.0f64..2.0),
            sigmas in proptest::collection::vec(0.0f64..2.0, 10),
            seed in any::<u64>(),
        ) {
            let m = table1();
            let mut spec = DisturbanceSpec::none(10).with_seed(seed);
            for (i, s) in sigmas.iter().enumerate() {
                spec.acceleration[i] = Channel::Gaussian { sigma: *s };
            }
            let c = Controller::new(ControllerGains { spacing: gamma, velocity: lambda });
            match simulate(&m, &c, &perturbed(), Horizon::new(100.0, 0.01).unwrap(), &spec) {
                Ok(t) => prop_assert!(t.conservation_residual() <= 1e-8, "{:e}", t.conservation_residual()),
                // Destabilizing gains trip the divergence guard; nothing to check.
                Err(ringmode_core::Error::Divergence { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}
