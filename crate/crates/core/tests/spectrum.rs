use proptest::prelude::*;
use ringmode_core::linalg::{eigenvalues, spectrum_distance, to_complex};
use ringmode_core::spectral::{block_diagonalize, first_mode};
use ringmode_core::{assemble, LinearCoeffs, OvmParams, RingSpec};

fn table1(n: usize) -> ringmode_core::LinearRingModel {
    assemble(&RingSpec::from_ovm(&OvmParams::TABLE1, n, 20.0).unwrap())
}

#[test]
fn spectra_agree_for_all_ring_sizes() {
    for n in 2..=32 {
        let m = table1(n);
        let modes = block_diagonalize(&m).unwrap();
        let dist = spectrum_distance(&eigenvalues(&m.a_circ), &modes.spectrum());
        assert!(dist <= 1e-8, "n = {n}: {dist:e}");
        let err = (modes.reconstruct() - to_complex(&m.a_circ)).camax();
        assert!(err <= 1e-10, "n = {n}: {err:e}");
    }
}

#[test]
fn open_loop_plant_is_rejected() {
    let mut m = table1(6);
    m.a_circ = m.a_open.clone();
    assert!(matches!(
        block_diagonalize(&m),
        Err(ringmode_core::Error::NotCirculant { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reconstruction_for_random_coefficients(
        a1 in 0.05f64..3.0, a2 in 0.2f64..3.0, a3 in 0.05f64..2.0, n in 2usize..=16,
    ) {
        let Ok(c) = LinearCoeffs::new(a1, a2, a3) else { return Ok(()) };
        let m = assemble(&RingSpec::new(n, 20.0, c).unwrap());
        let modes = block_diagonalize(&m).unwrap();
        prop_assert!((modes.reconstruct() - to_complex(&m.a_circ)).camax() <= 1e-10);
        let fm = first_mode(&m).unwrap();
        prop_assert_eq!(fm.a_mode[(0, 0)], 0.0);
        prop_assert_eq!(fm.a_mode[(0, 1)], 0.0);
        prop_assert!((fm.a_mode[(1, 0)] - a1).abs() <= 1e-12);
        prop_assert!((fm.a_mode[(1, 1)] - (a3 - a2)).abs() <= 1e-12);
    }
}
