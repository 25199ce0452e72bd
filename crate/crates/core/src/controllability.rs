//! Controllability of `(A, B)` by Kalman rank and by the PBH eigenvalue test.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, exact_krylov_rank, spectral_norm, to_complex};

/// Eigenvalues closer than this are treated as one repeated eigenvalue.
pub const EIGEN_CLUSTER_TOL: f64 = 1e-8;
/// PBH relative threshold on the smallest singular value of `[lambda I - A, B]`.
pub const PBH_TOL: f64 = 1e-8;
/// Real-part margin for counting an uncontrollable mode as stable.
pub const STABILITY_TOL: f64 = 1e-8;

fn check_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension {
            what: "A columns (A must be square)",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension {
            what: "B rows",
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(())
}

/// `[B, AB, ..., A^{k-1}B]` with each power normalized to unit Frobenius norm
/// (nonzero powers only) to limit growth.
pub fn kalman_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_pair(a, b)?;
    let (dim, m) = (a.nrows(), b.ncols());
    let mut k = DMatrix::zeros(dim, dim * m);
    let mut block = b.clone();
    for p in 0..dim {
        let norm = block.norm();
        if norm > 0.0 {
            block /= norm;
        }
        k.columns_mut(p * m, m).copy_from(&block);
        block = a * &block;
    }
    Ok(k)
}

/// Rank of the Kalman controllability matrix.
///
/// Computed exactly over the rationals represented by the `f64` entries;
/// floating-point rank decisions on Krylov matrices lose the gap between the
/// last controllable direction and zero once the state dimension reaches the
/// high twenties. See [`kalman_rank_numerical`] for the floating estimate.
pub fn kalman_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    check_pair(a, b)?;
    exact_krylov_rank(a, b)
}

/// Floating-point rank of [`kalman_matrix`]: singular values above
/// `2 n eps sigma_max`.
pub fn kalman_rank_numerical(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    let k = kalman_matrix(a, b)?;
    if k.is_empty() {
        return Ok(0);
    }
    let sv = k.svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    let tol = 2.0 * a.nrows() as f64 * f64::EPSILON * smax;
    Ok(sv.iter().filter(|&&s| s > tol).count())
}

/// PBH verdict for one (possibly repeated) eigenvalue.
#[derive(Debug, Clone)]
pub struct PbhMode {
    pub eigenvalue: Complex64,
    /// Algebraic multiplicity within the clustering tolerance.
    pub multiplicity: usize,
    /// Number of singular values of `[lambda I - A, B]` below threshold,
    /// capped at the multiplicity.
    pub rank_deficiency: usize,
    pub min_singular_value: f64,
    /// Left singular vector `q` of the smallest singular value, so that
    /// `q* [lambda I - A, B] ~ 0` when the mode is uncontrollable. For an
    /// uncontrollable mode it is a left eigenvector of `A` orthogonal to `B`.
    pub left_vector: DVector<Complex64>,
}

impl PbhMode {
    pub fn is_controllable(&self) -> bool {
        self.rank_deficiency == 0
    }
}

fn cluster(values: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for v in values {
        match clusters
            .iter_mut()
            .find(|(c, _)| (c - v).norm() <= EIGEN_CLUSTER_TOL * (1.0 + c.norm()))
        {
            Some((c, count)) => {
                *c = (*c * *count as f64 + v) / (*count as f64 + 1.0);
                *count += 1;
            }
            None => clusters.push((*v, 1)),
        }
    }
    clusters
}

fn pbh_threshold(a: &DMatrix<f64>) -> f64 {
    PBH_TOL * spectral_norm(a).max(1.0)
}

/// PBH test at each distinct eigenvalue of `a`.
pub fn pbh_test(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<PbhMode>> {
    check_pair(a, b)?;
    let dim = a.nrows();
    let tol = pbh_threshold(a);
    let ac = to_complex(a);
    let bc = to_complex(b);
    let mut modes = Vec::new();
    for (lambda, multiplicity) in cluster(&eigenvalues(a)) {
        let mut m = DMatrix::zeros(dim, dim + b.ncols());
        m.columns_mut(0, dim)
            .copy_from(&(DMatrix::from_diagonal_element(dim, dim, lambda) - &ac));
        m.columns_mut(dim, b.ncols()).copy_from(&bc);
        let svd = m.svd(true, false);
        let u = svd.u.ok_or(Error::LinearAlgebra("SVD did not return U"))?;
        let (idx, smin) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        let below = svd.singular_values.iter().filter(|&&s| s < tol).count();
        modes.push(PbhMode {
            eigenvalue: lambda,
            multiplicity,
            rank_deficiency: below.min(multiplicity),
            min_singular_value: smin,
            left_vector: u.column(idx).into_owned(),
        });
    }
    Ok(modes)
}

#[derive(Debug, Clone)]
pub struct UncontrollableMode {
    pub eigenvalue: Complex64,
    pub multiplicity: usize,
    /// `||q* [lambda I - A, B]||` for the reported left vector.
    pub residual: f64,
    pub left_vector: DVector<Complex64>,
}

#[derive(Debug, Clone)]
pub struct ControllabilityReport {
    pub state_dim: usize,
    /// Exact rank of the Kalman matrix.
    pub kalman_rank: usize,
    /// Floating SVD rank of the scaled Kalman matrix, for comparison.
    pub kalman_rank_numerical: usize,
    pub modes: Vec<PbhMode>,
    pub uncontrollable: Vec<UncontrollableMode>,
    /// Some uncontrollable mode sits on the imaginary axis.
    pub marginally_stable_uncontrollable: bool,
    pub stabilizable: bool,
}

impl ControllabilityReport {
    pub fn uncontrollable_count(&self) -> usize {
        self.uncontrollable.iter().map(|m| m.multiplicity).sum()
    }

    /// Rank implied by PBH: state dimension minus uncontrollable modes.
    pub fn pbh_rank(&self) -> usize {
        self.state_dim - self.uncontrollable_count()
    }
}

pub fn analyze(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<ControllabilityReport> {
    let modes = pbh_test(a, b)?;
    let uncontrollable: Vec<_> = modes
        .iter()
        .filter(|m| !m.is_controllable())
        .map(|m| UncontrollableMode {
            eigenvalue: m.eigenvalue,
            multiplicity: m.rank_deficiency,
            residual: m.min_singular_value,
            left_vector: m.left_vector.clone(),
        })
        .collect();
    let marginally_stable_uncontrollable = uncontrollable
        .iter()
        .any(|m| libm::fabs(m.eigenvalue.re) <= STABILITY_TOL);
    let mut report = ControllabilityReport {
        state_dim: a.nrows(),
        kalman_rank: kalman_rank(a, b)?,
        kalman_rank_numerical: kalman_rank_numerical(a, b)?,
        modes,
        uncontrollable,
        marginally_stable_uncontrollable,
        stabilizable: false,
    };
    report.stabilizable = stabilizability(&report);
    Ok(report)
}

/// Stabilizable iff every uncontrollable mode is strictly stable.
pub fn stabilizability(report: &ControllabilityReport) -> bool {
    report
        .uncontrollable
        .iter()
        .all(|m| m.eigenvalue.re < -STABILITY_TOL)
}

/// Unobservable eigenvalues of `(a, c)`, computed as the uncontrollable
/// eigenvalues of the dual pair `(a^T, c^T)`. Repeated modes are listed once
/// per unit of rank deficiency.
pub fn dual_observability(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if c.ncols() != a.nrows() {
        return Err(Error::Dimension {
            what: "C columns",
            expected: a.nrows(),
            got: c.ncols(),
        });
    }
    let modes = pbh_test(&a.transpose(), &c.transpose())?;
    Ok(modes
        .iter()
        .flat_map(|m| core::iter::repeat_n(m.eigenvalue, m.rank_deficiency))
        .collect())
}

/// Cosine similarity `|<q, e>| / (|q| |e|)` between a complex vector and the
/// real spacing-sum functional `(1, 0, 1, 0, ..., 1, 0)`.
pub fn spacing_sum_alignment(q: &DVector<Complex64>) -> f64 {
    let dot: Complex64 = q.iter().step_by(2).copied().sum();
    let e_norm = libm::sqrt((q.len() / 2) as f64);
    dot.norm() / (q.norm() * e_norm)
}
