//! Block-DFT diagonalization of the circulant ring matrix.
//!
//! With `omega = exp(2 pi i / n)` and `F*[j][k] = omega^(jk) / sqrt(n)`, the
//! coordinates `x~ = (F (x) I2) x` turn the block-circulant matrix into
//! `blkdiag(D_1, ..., D_n)` with `D_i = A1 + A2 omega^((n-1)(i-1))`.
//! The first block is the real matrix `[[0, 0], [alpha1, alpha3 - alpha2]]`:
//! its first coordinate, the scaled sum of all spacings, is an integrator
//! that the input cannot reach.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ring::{DisturbanceVector, LinearRingModel, StateVector};

/// Unitary DFT matrix in the `F*` convention.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMatrix {
    f_star: DMatrix<Complex64>,
}

/// `omega^k` with the exponent reduced modulo `n` first, which keeps the
/// roots of unity accurate for large exponents.
fn root_of_unity(n: usize, k: usize) -> Complex64 {
    let angle = 2.0 * PI * (k % n) as f64 / n as f64;
    Complex::new(libm::cos(angle), libm::sin(angle))
}

pub fn fourier_matrix(n: usize) -> Result<FourierMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", "Fourier matrix needs n >= 1"));
    }
    let scale = 1.0 / libm::sqrt(n as f64);
    let f_star = DMatrix::from_fn(n, n, |j, k| root_of_unity(n, j * k) * scale);
    Ok(FourierMatrix { f_star })
}

impl FourierMatrix {
    pub fn n(&self) -> usize {
        self.f_star.nrows()
    }

    pub fn f_star(&self) -> &DMatrix<Complex64> {
        &self.f_star
    }

    /// `F`, the conjugate (and, by symmetry, the inverse) of `F*`.
    pub fn f(&self) -> DMatrix<Complex64> {
        self.f_star.map(|z| z.conj())
    }

    /// `F (x) I2` if `conjugate` is true, else `F* (x) I2`.
    pub fn kron_i2(&self, conjugate: bool) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            if r % 2 != c % 2 {
                return Complex::new(0.0, 0.0);
            }
            let z = self.f_star[(r / 2, c / 2)];
            if conjugate {
                z.conj()
            } else {
                z
            }
        })
    }
}

/// Largest entrywise deviation from block-circulant structure with square
/// blocks of size `block`.
pub fn circulant_deviation(m: &DMatrix<f64>, block: usize) -> f64 {
    let n = m.nrows() / block;
    let mut worst: f64 = 0.0;
    for bi in 0..n {
        for bj in 0..n {
            let (ni, nj) = ((bi + 1) % n, (bj + 1) % n);
            for r in 0..block {
                for c in 0..block {
                    let d = m[(block * bi + r, block * bj + c)] - m[(block * ni + r, block * nj + c)];
                    worst = worst.max(libm::fabs(d));
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct ModalDecomposition {
    /// `D_1 ... D_n`.
    pub blocks: Vec<Matrix2<Complex64>>,
    /// `(F (x) I2) b`, equal to `[B1; ...; B1] / sqrt(n)`.
    pub modal_b: DVector<Complex64>,
    transform: FourierMatrix,
}

pub fn block_diagonalize(model: &LinearRingModel) -> Result<ModalDecomposition> {
    let a = &model.a_circ;
    let deviation = circulant_deviation(a, 2);
    if deviation != 0.0 {
        return Err(Error::NotCirculant {
            max_deviation: deviation,
        });
    }
    let n = model.n();
    let transform = fourier_matrix(n)?;
    // First block column C_0..C_{n-1}; D_{k+1} = sum_j C_j omega^{-jk}.
    let column: Vec<Matrix2<Complex64>> = (0..n)
        .map(|j| a.fixed_view::<2, 2>(2 * j, 0).map(|x| Complex::new(x, 0.0)))
        .collect();
    let blocks = (0..n)
        .map(|k| {
            column
                .iter()
                .enumerate()
                .filter(|(_, c)| c.iter().any(|z| z.re != 0.0))
                .fold(Matrix2::zeros(), |acc, (j, c)| {
                    acc + c * root_of_unity(n, (n - 1) * j * k % n)
                })
        })
        .collect();
    let modal_b = transform.kron_i2(true) * crate::linalg::to_complex(&model.b).column(0);
    Ok(ModalDecomposition {
        blocks,
        modal_b,
        transform,
    })
}

/// Closed-form eigenvalues of a complex 2x2 matrix. Triangular blocks return
/// their diagonal exactly.
pub fn eigenvalues_2x2(m: &Matrix2<Complex64>) -> [Complex64; 2] {
    let zero = Complex::new(0.0, 0.0);
    if m[(0, 1)] == zero || m[(1, 0)] == zero {
        return [m[(0, 0)], m[(1, 1)]];
    }
    let half_trace = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let half_gap = (m[(0, 0)] - m[(1, 1)]) * 0.5;
    let root = (half_gap * half_gap + m[(0, 1)] * m[(1, 0)]).sqrt();
    [half_trace + root, half_trace - root]
}

impl ModalDecomposition {
    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn transform(&self) -> &FourierMatrix {
        &self.transform
    }

    /// `(F (x) I2) d`: disturbances expressed in modal coordinates.
    pub fn modal_d_map(&self, d: &DisturbanceVector) -> DVector<Complex64> {
        self.transform.kron_i2(true) * d.as_vector().map(|x| Complex::new(x, 0.0))
    }

    pub fn block_diagonal(&self) -> DMatrix<Complex64> {
        let n = self.n();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for (i, block) in self.blocks.iter().enumerate() {
            out.fixed_view_mut::<2, 2>(2 * i, 2 * i).copy_from(block);
        }
        out
    }

    /// `(F* (x) I2) blkdiag(D) (F (x) I2)`, which should equal `a_circ`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        self.transform.kron_i2(false) * self.block_diagonal() * self.transform.kron_i2(true)
    }

    pub fn block_eigenvalues(&self) -> Vec<[Complex64; 2]> {
        self.blocks.iter().map(eigenvalues_2x2).collect()
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.block_eigenvalues().into_iter().flatten().collect()
    }
}

/// Dynamics of the first modal block: spacing-sum integrator plus the
/// velocity-sum coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstModeSystem {
    pub a_mode: Matrix2<f64>,
    pub b_mode: Vector2<f64>,
    /// `1/sqrt(n)`, the gain from summed disturbances into the mode.
    pub dist_gain: f64,
    pub eigenvalues: [f64; 2],
}

impl FirstModeSystem {
    /// Modal drive `(sum d^v, sum d^a) / sqrt(n)`. Only the first entry
    /// reaches the uncontrollable coordinate.
    pub fn disturbance_drive(&self, d: &DisturbanceVector) -> Vector2<f64> {
        Vector2::new(d.velocity_sum(), d.acceleration_sum()) * self.dist_gain
    }
}

pub fn first_mode(model: &LinearRingModel) -> Result<FirstModeSystem> {
    let modes = block_diagonalize(model)?;
    let d1 = modes.blocks[0];
    let imag = d1.iter().map(|z| libm::fabs(z.im)).fold(0.0, f64::max);
    debug_assert!(imag <= 1e-12, "first modal block is not real: {imag:e}");
    let a_mode = d1.map(|z| z.re);
    let b_mode = Vector2::new(modes.modal_b[0].re, modes.modal_b[1].re);
    let ev = eigenvalues_2x2(&d1);
    Ok(FirstModeSystem {
        a_mode,
        b_mode,
        dist_gain: 1.0 / libm::sqrt(model.n() as f64),
        eigenvalues: [ev[0].re, ev[1].re],
    })
}

/// The uncontrollable coordinate `x~11 = sum(s~i) / sqrt(n)`.
pub fn mode_signal(x: &StateVector) -> f64 {
    x.spacing_sum() / libm::sqrt(x.vehicles() as f64)
}

/// Drive of `x~11`: `sum(d^v_i) / sqrt(n)`. Acceleration channels do not
/// appear.
pub fn modal_disturbance(d: &DisturbanceVector) -> f64 {
    d.velocity_sum() / libm::sqrt(d.vehicles() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ovm::OvmParams;
    use crate::ring::{assemble, RingSpec};
    use approx::assert_abs_diff_eq;

    fn table1(n: usize) -> LinearRingModel {
        assemble(&RingSpec::from_ovm(&OvmParams::TABLE1, n, 20.0).unwrap())
    }

    fn unitarity_error(f: &FourierMatrix) -> f64 {
        let prod = f.f() * f.f_star();
        (prod - DMatrix::identity(f.n(), f.n())).map(|z| z.norm()).max()
    }

    #[test]
    fn small_fourier_matrices() {
        assert!(fourier_matrix(0).is_err());
        let f1 = fourier_matrix(1).unwrap();
        assert_eq!(f1.f_star()[(0, 0)], Complex::new(1.0, 0.0));
        let f2 = fourier_matrix(2).unwrap();
        let r = 1.0 / libm::sqrt(2.0);
        assert_abs_diff_eq!(f2.f_star()[(1, 1)].re, -r, epsilon = 1e-15);
        assert_abs_diff_eq!(f2.f_star()[(1, 1)].im, 0.0, epsilon = 1e-15);
        assert!(unitarity_error(&fourier_matrix(4).unwrap()) <= 1e-14);
    }

    #[test]
    fn fourier_unitary_up_to_32() {
        for n in 1..=32 {
            let f = fourier_matrix(n).unwrap();
            assert!(unitarity_error(&f) <= 1e-12, "n = {n}");
            let r = 1.0 / libm::sqrt(n as f64);
            for k in 0..n {
                assert_abs_diff_eq!(f.f_star()[(0, k)].re, r, epsilon = 1e-15);
                assert_abs_diff_eq!(f.f_star()[(k, 0)].re, r, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn first_block_is_a1_plus_a2() {
        let m = table1(10);
        let modes = block_diagonalize(&m).unwrap();
        let c = m.spec.coeffs;
        let d1 = modes.blocks[0];
        assert_eq!(d1.map(|z| z.re), Matrix2::new(0.0, 0.0, c.alpha1, c.alpha3 - c.alpha2));
        assert!(d1.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn blocks_follow_paper_exponent() {
        let m = table1(6);
        let modes = block_diagonalize(&m).unwrap();
        let blocks = crate::ring::build_blocks(&m.spec.coeffs);
        for (i, d) in modes.blocks.iter().enumerate() {
            let w = root_of_unity(6, 5 * i);
            let expected = blocks.a1.map(|x| Complex::new(x, 0.0)) + blocks.a2.map(|x| Complex::new(x, 0.0)) * w;
            assert!((d - expected).map(|z| z.norm()).max() < 1e-15);
        }
    }

    #[test]
    fn modal_input() {
        let m = table1(10);
        let modes = block_diagonalize(&m).unwrap();
        let r = 1.0 / libm::sqrt(10.0);
        for i in 0..10 {
            assert!(modes.modal_b[2 * i].norm() < 1e-15);
            assert!((modes.modal_b[2 * i + 1] - Complex::new(r, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_circulant() {
        let mut m = table1(5);
        m.a_circ = m.a_open.clone();
        match block_diagonalize(&m) {
            Err(Error::NotCirculant { max_deviation }) => assert!(max_deviation > 0.9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_mode_table1() {
        let fm = first_mode(&table1(10)).unwrap();
        assert_eq!(fm.eigenvalues[0], 0.0);
        assert_abs_diff_eq!(fm.eigenvalues[1], -0.6, epsilon = 1e-12);
        assert_eq!(fm.a_mode.row(0).amax(), 0.0);
        assert_eq!(fm.b_mode[0], 0.0);
        assert_abs_diff_eq!(fm.b_mode[1], 0.31623, epsilon = 1e-5);
    }

    #[test]
    fn mode_signal_examples() {
        assert_eq!(mode_signal(&StateVector::zeros(10)), 0.0);
        let mut x = StateVector::zeros(10);
        for i in 0..10 {
            x.set_spacing(i, 1.0);
        }
        assert_abs_diff_eq!(mode_signal(&x), libm::sqrt(10.0), epsilon = 1e-14);
        let mut x = StateVector::zeros(10);
        x.set_spacing(0, 1.0);
        x.set_spacing(1, -1.0);
        assert_eq!(mode_signal(&x), 0.0);
    }

    #[test]
    fn mode_signal_is_first_modal_coordinate() {
        let m = table1(7);
        let modes = block_diagonalize(&m).unwrap();
        let x = StateVector::from_vec((0..14).map(|i| libm::sin(i as f64)).collect()).unwrap();
        let z = modes.transform().kron_i2(true) * x.as_vector().map(|v| Complex::new(v, 0.0));
        assert!(z[0].im.abs() <= 1e-12);
        assert_abs_diff_eq!(z[0].re, mode_signal(&x), epsilon = 1e-12);
    }

    #[test]
    fn modal_disturbance_examples() {
        let mut d = DisturbanceVector::zeros(10);
        d.set_velocity(4, 1.0);
        assert_abs_diff_eq!(modal_disturbance(&d), 1.0 / libm::sqrt(10.0), epsilon = 1e-15);
        let mut d = DisturbanceVector::zeros(10);
        d.set_velocity(0, 1.0);
        d.set_velocity(1, -1.0);
        assert_eq!(modal_disturbance(&d), 0.0);
        let mut d = DisturbanceVector::zeros(10);
        for i in 0..10 {
            d.set_acceleration(i, 7.0);
        }
        assert_eq!(modal_disturbance(&d), 0.0);
    }

    #[test]
    fn modal_map_first_entries() {
        let m = table1(5);
        let modes = block_diagonalize(&m).unwrap();
        let d = DisturbanceVector::from_vec((0..10).map(|i| i as f64 * 0.3 - 1.0).collect()).unwrap();
        let z = modes.modal_d_map(&d);
        let fm = first_mode(&m).unwrap();
        let drive = fm.disturbance_drive(&d);
        assert_abs_diff_eq!(z[0].re, drive[0], epsilon = 1e-13);
        assert_abs_diff_eq!(z[1].re, drive[1], epsilon = 1e-13);
        assert_abs_diff_eq!(drive[0], modal_disturbance(&d), epsilon = 1e-14);
    }
}
