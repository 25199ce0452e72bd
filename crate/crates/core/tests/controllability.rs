use proptest::prelude::*;
use ringmode_core::controllability::{analyze, spacing_sum_alignment};
use ringmode_core::{assemble, LinearCoeffs, RingSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn exactly_one_uncontrollable_integrator(
        a1 in 0.1f64..2.0, a2 in 0.5f64..3.0, a3 in 0.1f64..1.5, n in 2usize..=12,
    ) {
        let Ok(c) = LinearCoeffs::new(a1, a2, a3) else { return Ok(()) };
        let m = assemble(&RingSpec::new(n, 20.0, c).unwrap());
        for a in [&m.a_circ, &m.a_open] {
            let r = analyze(a, &m.b).unwrap();
            prop_assert_eq!(r.kalman_rank, 2 * n - 1);
            prop_assert_eq!(r.pbh_rank(), r.kalman_rank);
            prop_assert_eq!(r.uncontrollable.len(), 1);
            let mode = &r.uncontrollable[0];
            prop_assert!(mode.eigenvalue.norm() < 1e-8);
            prop_assert!(spacing_sum_alignment(&mode.left_vector) > 1.0 - 1e-8);
            prop_assert!(!r.stabilizable);
        }
    }
}
