//! Dense linear algebra helpers on top of nalgebra.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex::new(x, 0.0))
}

/// Eigenvalues of a real square matrix (real Schur form).
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Largest distance between matched entries of two spectra. Each entry of
/// `a` is greedily paired with its nearest unused entry of `b`, so the result
/// does not depend on ordering.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

// Primes below 2^62 so that products fit in u128 before reduction.
const PRIMES: [u64; 3] = [
    2_305_843_009_213_693_951, // 2^61 - 1
    4_611_686_018_427_387_847, // 2^62 - 57
    1_000_000_000_000_000_003,
];

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Exact dyadic decomposition `x = m * 2^e` of a finite double.
fn dyadic(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    };
    let shift = mant.trailing_zeros();
    (sign * (mant >> shift) as i64, e + shift as i32)
}

/// Scales a matrix of doubles by a common power of two so every entry is an
/// integer, and reduces it modulo each prime.
fn integer_images(m: &DMatrix<f64>) -> Result<[DMatrix<u64>; 3]> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::LinearAlgebra("non-finite matrix entry"));
    }
    let parts = m.map(dyadic);
    let min_exp = parts
        .iter()
        .filter(|(mant, _)| *mant != 0)
        .map(|(_, e)| *e)
        .min()
        .unwrap_or(0);
    Ok(PRIMES.map(|p| {
        parts.map(|(mant, e)| {
            let magnitude = mant.unsigned_abs() % p;
            let scaled = mul_mod(magnitude, pow_mod(2, (e - min_exp) as u64, p), p);
            if mant < 0 && scaled != 0 {
                p - scaled
            } else {
                scaled
            }
        })
    }))
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn rank_mod(mut m: DMatrix<u64>, p: u64) -> usize {
    let (rows, cols) = m.shape();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| m[(r, col)] != 0) else {
            continue;
        };
        m.swap_rows(pivot, rank);
        let inv = inv_mod(m[(rank, col)], p);
        for r in rank + 1..rows {
            let factor = mul_mod(m[(r, col)], inv, p);
            if factor == 0 {
                continue;
            }
            for c in col..cols {
                let sub = mul_mod(factor, m[(rank, c)], p);
                m[(r, c)] = (m[(r, c)] + p - sub) % p;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Exact rank over the rationals of the Krylov matrix `[B, AB, ..., A^{k-1}B]`
/// with `k = dim A`, treating every double as the exact rational it encodes.
///
/// Works over prime fields; the rank modulo `p` never exceeds the rank over
/// the rationals, and the maximum over the primes in use equals it unless
/// all of them divide the same nonzero minors.
pub fn exact_krylov_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    let dim = a.nrows();
    let a_images = integer_images(a)?;
    let b_images = integer_images(b)?;
    let mut best = 0;
    for ((ap, bp), &p) in a_images.into_iter().zip(b_images).zip(PRIMES.iter()) {
        let inputs = bp.ncols();
        let mut krylov = DMatrix::<u64>::zeros(dim, dim * inputs);
        let mut block = bp;
        for k in 0..dim {
            krylov.columns_mut(k * inputs, inputs).copy_from(&block);
            let mut next = DMatrix::<u64>::zeros(dim, inputs);
            for i in 0..dim {
                for j in 0..inputs {
                    let mut acc: u128 = 0;
                    for l in 0..dim {
                        acc += ap[(i, l)] as u128 * block[(l, j)] as u128;
                        acc %= p as u128;
                    }
                    next[(i, j)] = acc as u64;
                }
            }
            block = next;
        }
        best = best.max(rank_mod(krylov, p));
    }
    Ok(best)
}

/// Unit vector spanning the numerical null space of a complex square
/// matrix: the right singular vector of its smallest singular value.
fn null_vector(m: DMatrix<Complex64>) -> Result<(DVector<Complex64>, f64)> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::LinearAlgebra("SVD did not return V"))?;
    let (idx, smin) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    let v = v_t.row(idx).transpose().map(|z| z.conj());
    Ok((v, smin))
}

/// Exact solution operator `x(t) = exp(A t) x0` of a diagonalizable real
/// system, built from its eigendecomposition `A = V diag(lambda) V^-1`.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    lambdas: Vec<Complex64>,
    vectors: DMatrix<Complex64>,
    inverse: DMatrix<Complex64>,
}

impl EigenPropagator {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        let lambdas = eigenvalues(a);
        for i in 0..dim {
            for j in i + 1..dim {
                if (lambdas[i] - lambdas[j]).norm() < 1e-9 * (1.0 + lambdas[i].norm()) {
                    return Err(Error::LinearAlgebra("repeated eigenvalue; not diagonalizable here"));
                }
            }
        }
        let ac = to_complex(a);
        let mut vectors = DMatrix::zeros(dim, dim);
        for (k, lambda) in lambdas.iter().enumerate() {
            let shifted = &ac - DMatrix::from_diagonal_element(dim, dim, *lambda);
            let (v, _) = null_vector(shifted)?;
            vectors.set_column(k, &v);
        }
        let inverse = vectors
            .clone()
            .try_inverse()
            .ok_or(Error::LinearAlgebra("eigenvector matrix is singular"))?;
        Ok(EigenPropagator {
            lambdas,
            vectors,
            inverse,
        })
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn propagate(&self, x0: &DVector<f64>, t: f64) -> DVector<f64> {
        let modal = &self.inverse * x0.map(|x| Complex::new(x, 0.0));
        let scaled = DVector::from_iterator(
            modal.len(),
            modal
                .iter()
                .zip(&self.lambdas)
                .map(|(c, l)| c * (l * t).exp()),
        );
        (&self.vectors * scaled).map(|z| z.re)
    }
}
