//! Dense complex linear algebra sized for the problems in this crate: bare
//! Hilbert spaces of a few hundred states and vectorized Liouvillians of at
//! most a few hundred entries.
//!
//! Storage is column-major (the layout of the backing `nalgebra::DMatrix`).
//! Vectorization of density operators elsewhere in the crate uses the same
//! column-stacking order, so `vec(ρ)[i + n*j] == ρ[(i, j)]`.

mod eig;
mod ode;
mod solve;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub use eig::{general_eig, hermitian_eig, hermitian_eig_with, GeneralEigen, HermitianEigen};
pub(crate) use eig::phase_reference;
pub use ode::{propagate_ode, propagate_ode_with, OdeOptions};
pub use solve::{solve_linear, solve_linear_with, LuFactor};

use crate::error::{Error, Result};

/// Complex column vector.
pub type CVector = DVector<C64>;

/// Numerical tolerances used by the kernel. All fields are relative unless
/// noted otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Accepted Hermiticity defect `‖h − h†‖ / max(1, ‖h‖)`.
    pub hermitian: f64,
    /// Smallest accepted LU pivot relative to `‖a‖`.
    pub pivot: f64,
    /// Eigenvalues closer than this (relative to the matrix norm) are treated
    /// as exactly degenerate when forming eigenvectors.
    pub degenerate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            pivot: 1e-14,
            degenerate: 1e-12,
        }
    }
}

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, data))
    }

    /// Wraps an `nalgebra` matrix, rejecting non-finite entries.
    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix construction"));
        }
        Ok(Self(m))
    }

    pub fn from_real_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        let data: Vec<C64> = data.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_slice(rows, cols, &data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// `|i⟩⟨j|` in an `n`-dimensional space.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub(crate) fn from_inner_unchecked(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    pub fn column(&self, j: usize) -> CVector {
        self.0.column(j).into_owned()
    }

    /// Columns `cols` as a new matrix, in the order given.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self(self.0.select_columns(cols))
    }

    /// Principal submatrix on `idx`.
    pub fn principal(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self.0[(idx[i], idx[j])])
    }

    /// `‖self − self†‖` (Frobenius).
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    /// Conjugated sandwich `l† · self · r`.
    pub fn sandwich(&self, l: &ComplexMatrix, r: &ComplexMatrix) -> Self {
        Self(l.0.adjoint() * &self.0 * &r.0)
    }

    /// Matrix commutator `[self, other]`.
    pub fn commutator(&self, other: &ComplexMatrix) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Column-stacked vector of the entries.
    pub fn vectorize(&self) -> CVector {
        DVector::from_column_slice(self.0.as_slice())
    }

    /// Inverse of [`ComplexMatrix::vectorize`] for an `n×n` matrix.
    pub fn unvectorize(v: &CVector, n: usize) -> Result<Self> {
        if v.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} cannot be reshaped to {n}x{n}",
                v.len()
            )));
        }
        Ok(Self(DMatrix::from_column_slice(n, n, v.as_slice())))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}x{} {:?}", self.nrows(), self.ncols(), self.0.as_slice())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Frobenius norm of a vector.
pub fn vnorm(v: &CVector) -> f64 {
    v.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random(rng: &mut StdRng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = ComplexMatrix::from_real_row_slice(1, 2, &[1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert!(ComplexMatrix::from_real_row_slice(2, 2, &[1.0; 3]).is_err());
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_diag_with_identity() {
        let d = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let k = kron(&d, &ComplexMatrix::identity(2));
        assert_eq!(k, ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 2.0, 2.0]));
    }

    #[test]
    fn kron_mixed_product_identity() {
        let mut rng = StdRng::seed_from_u64(7);
        let (a, b, c, d) = (
            random(&mut rng, 3),
            random(&mut rng, 3),
            random(&mut rng, 3),
            random(&mut rng, 3),
        );
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        assert!((&lhs - &rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let m = ComplexMatrix::from_real_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = m.vectorize();
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(ComplexMatrix::unvectorize(&v, 2).unwrap(), m);
    }

    #[test]
    fn column_stacking_sandwich_identity() {
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let mut rng = StdRng::seed_from_u64(11);
        let (a, x, b) = (random(&mut rng, 4), random(&mut rng, 4), random(&mut rng, 4));
        let lhs = (&(&a * &x) * &b).vectorize();
        let rhs = kron(&b.transpose(), &a).mul_vec(&x.vectorize());
        assert!((lhs - rhs).norm() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn kron_respects_transpose_and_adjoint(n in 1usize..4, m in 1usize..4, seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let (a, b) = (random(&mut rng, n), random(&mut rng, m));
            let k = kron(&a, &b);
            proptest::prop_assert_eq!(k.nrows(), n * m);
            proptest::prop_assert!((&k.adjoint() - &kron(&a.adjoint(), &b.adjoint())).norm() < 1e-13);
            proptest::prop_assert!((&k.transpose() - &kron(&a.transpose(), &b.transpose())).norm() < 1e-13);
            let tr = k.trace() - a.trace() * b.trace();
            proptest::prop_assert!(tr.norm() < 1e-12);
        }
    }
}

