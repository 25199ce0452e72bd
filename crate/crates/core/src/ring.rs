//! Linearized ring of `n` vehicles with one controlled vehicle.
//!
//! States are interleaved per vehicle, `(s~1, v~1, s~2, v~2, ..., s~n, v~n)`,
//! so the system matrices are literally `n x n` arrays of 2x2 blocks.
//! Vehicle 1 (index 0) is the controlled vehicle.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::ovm::{linearize, Equilibrium, LinearCoeffs, OvmParams};

/// Index of the controlled vehicle.
pub const AV_INDEX: usize = 0;

/// The 2x2 building blocks of the ring matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blocks {
    /// Human vehicle, own block.
    pub a1: Matrix2<f64>,
    /// Human vehicle, coupling to its leader.
    pub a2: Matrix2<f64>,
    /// Controlled vehicle, own block.
    pub c1: Matrix2<f64>,
    /// Controlled vehicle, coupling to its leader.
    pub c2: Matrix2<f64>,
    /// Controlled vehicle input.
    pub b1: Vector2<f64>,
}

pub fn build_blocks(c: &LinearCoeffs) -> Blocks {
    Blocks {
        a1: Matrix2::new(0.0, -1.0, c.alpha1, -c.alpha2),
        a2: Matrix2::new(0.0, 1.0, 0.0, c.alpha3),
        c1: Matrix2::new(0.0, -1.0, 0.0, 0.0),
        c2: Matrix2::new(0.0, 1.0, 0.0, 0.0),
        b1: Vector2::new(0.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    pub n: usize,
    pub s_star: f64,
    pub coeffs: LinearCoeffs,
}

impl RingSpec {
    pub fn new(n: usize, s_star: f64, coeffs: LinearCoeffs) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", alloc::format!("ring needs n >= 2, got {n}")));
        }
        coeffs.check()?;
        Ok(RingSpec { n, s_star, coeffs })
    }

    /// Ring around the OVM equilibrium at spacing `s_star`.
    pub fn from_ovm(p: &OvmParams, n: usize, s_star: f64) -> Result<Self> {
        let eq = Equilibrium::from_spacing(p, s_star)?;
        RingSpec::new(n, s_star, linearize(p, &eq)?)
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n
    }
}

/// Per-vehicle deviations from equilibrium, interleaved `(s~i, v~i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<f64>);

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        StateVector(DVector::zeros(2 * n))
    }

    pub fn from_vec(x: Vec<f64>) -> Result<Self> {
        if x.len() < 4 || x.len() % 2 != 0 {
            return Err(Error::Dimension {
                what: "state vector (even, >= 4)",
                expected: x.len() + x.len() % 2,
                got: x.len(),
            });
        }
        Ok(StateVector(DVector::from_vec(x)))
    }

    pub fn from_vector(x: DVector<f64>) -> Result<Self> {
        Self::from_vec(x.data.into())
    }

    pub fn vehicles(&self) -> usize {
        self.0.len() / 2
    }

    /// Spacing deviation of vehicle `i` (zero-based).
    pub fn spacing(&self, i: usize) -> f64 {
        self.0[2 * i]
    }

    pub fn velocity(&self, i: usize) -> f64 {
        self.0[2 * i + 1]
    }

    pub fn set_spacing(&mut self, i: usize, value: f64) {
        self.0[2 * i] = value;
    }

    pub fn set_velocity(&mut self, i: usize, value: f64) {
        self.0[2 * i + 1] = value;
    }

    pub fn spacing_sum(&self) -> f64 {
        self.0.iter().step_by(2).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        self.0.as_mut_slice()
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

/// Additive disturbance, interleaved `(d^v_i, d^a_i)`: velocity disturbances
/// enter the spacing rows, acceleration disturbances the velocity rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceVector(DVector<f64>);

impl DisturbanceVector {
    pub fn zeros(n: usize) -> Self {
        DisturbanceVector(DVector::zeros(2 * n))
    }

    pub fn from_vec(d: Vec<f64>) -> Result<Self> {
        if d.len() < 4 || d.len() % 2 != 0 {
            return Err(Error::Dimension {
                what: "disturbance vector (even, >= 4)",
                expected: d.len() + d.len() % 2,
                got: d.len(),
            });
        }
        Ok(DisturbanceVector(DVector::from_vec(d)))
    }

    pub fn vehicles(&self) -> usize {
        self.0.len() / 2
    }

    pub fn velocity(&self, i: usize) -> f64 {
        self.0[2 * i]
    }

    pub fn acceleration(&self, i: usize) -> f64 {
        self.0[2 * i + 1]
    }

    pub fn set_velocity(&mut self, i: usize, value: f64) {
        self.0[2 * i] = value;
    }

    pub fn set_acceleration(&mut self, i: usize, value: f64) {
        self.0[2 * i + 1] = value;
    }

    pub fn velocity_sum(&self) -> f64 {
        self.0.iter().step_by(2).sum()
    }

    pub fn acceleration_sum(&self) -> f64 {
        self.0.iter().skip(1).step_by(2).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub(crate) fn fill(&mut self, value: f64) {
        self.0.fill(value);
    }
}

/// Dense linear ring model.
///
/// `a_open` is the physical plant, where the controlled vehicle's
/// acceleration is the input. `a_circ` is the same plant written with the
/// virtual input `u^ = u - (alpha1 s~1 - alpha2 v~1 + alpha3 v~n)`, which makes
/// it block circulant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRingModel {
    pub spec: RingSpec,
    pub a_open: DMatrix<f64>,
    pub a_circ: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

fn put_block(m: &mut DMatrix<f64>, row: usize, col: usize, block: &Matrix2<f64>) {
    m.fixed_view_mut::<2, 2>(2 * row, 2 * col).copy_from(block);
}

pub fn assemble(spec: &RingSpec) -> LinearRingModel {
    let n = spec.n;
    let blocks = build_blocks(&spec.coeffs);
    let mut a_circ = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        put_block(&mut a_circ, i, i, &blocks.a1);
        put_block(&mut a_circ, i, (i + n - 1) % n, &blocks.a2);
    }
    let mut a_open = a_circ.clone();
    put_block(&mut a_open, AV_INDEX, AV_INDEX, &blocks.c1);
    put_block(&mut a_open, AV_INDEX, n - 1, &blocks.c2);

    let mut b = DMatrix::zeros(2 * n, 1);
    b.fixed_view_mut::<2, 1>(2 * AV_INDEX, 0).copy_from(&blocks.b1);

    LinearRingModel {
        spec: *spec,
        a_open,
        a_circ,
        b,
    }
}

impl LinearRingModel {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn state_dim(&self) -> usize {
        2 * self.spec.n
    }

    /// Row index of the controlled vehicle's velocity, where `b` is 1.
    pub fn input_row(&self) -> usize {
        2 * AV_INDEX + 1
    }

    fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.vehicles() != self.spec.n {
            return Err(Error::Dimension {
                what: "state vector",
                expected: self.state_dim(),
                got: x.as_slice().len(),
            });
        }
        Ok(())
    }

    /// Human-driver acceleration the controlled vehicle would have at `x`.
    pub fn human_feedback(&self, x: &StateVector) -> Result<f64> {
        self.check_state(x)?;
        let c = &self.spec.coeffs;
        let n = self.spec.n;
        Ok(c.alpha1 * x.spacing(AV_INDEX) - c.alpha2 * x.velocity(AV_INDEX)
            + c.alpha3 * x.velocity(n - 1))
    }
}

/// Maps the physical input `u` to the virtual input of the circulant form.
pub fn virtual_input(model: &LinearRingModel, x: &StateVector, u: f64) -> Result<f64> {
    Ok(u - model.human_feedback(x)?)
}

/// Inverse of [`virtual_input`].
pub fn physical_input(model: &LinearRingModel, x: &StateVector, u_hat: f64) -> Result<f64> {
    Ok(u_hat + model.human_feedback(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table1(n: usize) -> LinearRingModel {
        assemble(&RingSpec::from_ovm(&OvmParams::TABLE1, n, 20.0).unwrap())
    }

    #[test]
    fn blocks_substitute_coefficients() {
        let c = LinearCoeffs::new(0.9425, 1.5, 0.9).unwrap();
        let b = build_blocks(&c);
        assert_eq!(b.a1, Matrix2::new(0.0, -1.0, 0.9425, -1.5));
        let sum = b.c1 + b.c2;
        assert_eq!(sum.row(1).sum(), 0.0);
        assert_eq!(sum.row(1).amax(), 0.0);
        let zero_coupling = build_blocks(&LinearCoeffs::new(0.5, 1.0, 0.0).unwrap());
        assert_eq!(zero_coupling.a2, Matrix2::new(0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn two_vehicle_ring() {
        let m = table1(2);
        let b = build_blocks(&m.spec.coeffs);
        let mut expected = DMatrix::zeros(4, 4);
        put_block(&mut expected, 0, 0, &b.a1);
        put_block(&mut expected, 0, 1, &b.a2);
        put_block(&mut expected, 1, 0, &b.a2);
        put_block(&mut expected, 1, 1, &b.a1);
        assert_eq!(m.a_circ, expected);
        assert_eq!(m.a_open.fixed_view::<2, 2>(0, 0).into_owned(), b.c1);
        assert_eq!(m.a_open.fixed_view::<2, 2>(0, 2).into_owned(), b.c2);
    }

    #[test]
    fn av_rows() {
        let m = table1(10);
        let c = m.spec.coeffs;
        assert!(m.a_open.row(1).iter().all(|&x| x == 0.0));
        let row = m.a_circ.row(1);
        assert_eq!(row[0], c.alpha1);
        assert_eq!(row[1], -c.alpha2);
        assert_eq!(row[19], c.alpha3);
        assert_eq!(row.iter().filter(|&&x| x != 0.0).count(), 3);
        for r in 2..20 {
            assert_eq!(m.a_open.row(r), m.a_circ.row(r));
        }
        assert_eq!(m.b.iter().filter(|&&x| x != 0.0).count(), 1);
        assert_eq!(m.b[(1, 0)], 1.0);
    }

    #[test]
    fn block_rows_sum_to_a1_plus_a2() {
        let m = table1(7);
        let c = m.spec.coeffs;
        let expected = Matrix2::new(0.0, 0.0, c.alpha1, c.alpha3 - c.alpha2);
        for i in 0..7 {
            let mut sum = Matrix2::zeros();
            for j in 0..7 {
                sum += m.a_circ.fixed_view::<2, 2>(2 * i, 2 * j);
            }
            assert_eq!(sum, expected);
        }
    }

    #[test]
    fn spacing_sum_functional_annihilates() {
        let m = table1(9);
        let e = DVector::from_fn(18, |i, _| if i % 2 == 0 { 1.0 } else { 0.0 });
        let left = e.transpose() * &m.a_circ;
        for j in (0..18).step_by(2) {
            assert_eq!(left[j], 0.0);
        }
        assert_eq!((e.transpose() * &m.b)[(0, 0)], 0.0);
    }

    #[test]
    fn virtual_input_examples() {
        let m = table1(10);
        let x = StateVector::zeros(10);
        assert_eq!(virtual_input(&m, &x, 1.0).unwrap(), 1.0);
        let mut x = StateVector::zeros(10);
        x.set_spacing(0, 1.0);
        assert_abs_diff_eq!(virtual_input(&m, &x, 0.0).unwrap(), -0.9425, epsilon = 1e-4);
        assert!(virtual_input(&m, &StateVector::zeros(3), 0.0).is_err());
    }

    #[test]
    fn rejects_small_rings() {
        let c = LinearCoeffs::new(0.9, 1.5, 0.9).unwrap();
        assert!(RingSpec::new(1, 20.0, c).is_err());
    }

    proptest! {
        #[test]
        fn feedback_equivalence(
            n in 2usize..=10,
            seed in proptest::collection::vec(-1.0f64..1.0, 41),
            u in -2.0f64..2.0,
        ) {
            let m = table1(n);
            let x = StateVector::from_vec(seed[..2 * n].to_vec()).unwrap();
            let d = DVector::from_column_slice(&seed[20..20 + 2 * n]);
            let u_hat = virtual_input(&m, &x, u).unwrap();
            let lhs = &m.a_open * x.as_vector() + &m.b * u + &d;
            let rhs = &m.a_circ * x.as_vector() + &m.b * u_hat + &d;
            prop_assert!((lhs - rhs).amax() <= 1e-12 * x.as_vector().norm().max(1.0));
            let back = physical_input(&m, &x, u_hat).unwrap();
            prop_assert!((back - u).abs() <= 1e-14 * (1.0 + u.abs() + x.max_abs() * 4.0));
        }
    }
}
