use nalgebra::{DMatrix, Schur, SymmetricEigen};

use super::{ComplexMatrix, Tolerances, C64};
use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix.
///
/// `values` ascend; column `k` of `vectors` is the eigenvector for
/// `values[k]`, normalized, with its largest-magnitude component made real
/// and positive.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with(h, &Tolerances::default())
}

pub fn hermitian_eig_with(h: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let defect = h.hermiticity_defect();
    if defect > tol.hermitian * h.norm().max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let n = h.nrows();
    // Symmetrize so that the solver never sees the rounding-level defect.
    let sym = (h.as_inner() + h.as_inner().adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = eig.eigenvectors.select_columns(&order);
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        col /= C64::new(norm, 0.0);
        let phase = phase_reference(col.as_slice());
        col *= phase.conj();
    }
    Ok(HermitianEigen {
        values,
        vectors: ComplexMatrix::from_inner_unchecked(vectors),
    })
}

/// Unit-modulus phase of the largest-magnitude entry. Near-ties resolve to the
/// lowest index so the choice is stable under rounding.
pub(crate) fn phase_reference(v: &[C64]) -> C64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-8))
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    pivot / pivot.norm()
}

/// Eigen-decomposition `a = R · diag(values) · L` of a general square matrix,
/// where `left = R⁻¹` holds the (biorthogonal) left eigenvectors as rows.
#[derive(Debug, Clone)]
pub struct GeneralEigen {
    pub values: Vec<C64>,
    pub right: ComplexMatrix,
    pub left: ComplexMatrix,
}

impl GeneralEigen {
    /// `‖a − R Λ L‖ / ‖a‖`.
    pub fn reconstruction_error(&self, a: &ComplexMatrix) -> f64 {
        let lam = ComplexMatrix::from_diagonal(&self.values);
        let rec = &(&self.right * &lam) * &self.left;
        (a - &rec).norm() / a.norm().max(f64::MIN_POSITIVE)
    }
}

/// Complex Schur decomposition followed by triangular back-substitution for
/// the eigenvectors. Exactly degenerate diagonal entries are treated as free
/// directions, which is correct for diagonalizable input.
pub fn general_eig(a: &ComplexMatrix) -> Result<GeneralEigen> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let tol = Tolerances::default();
    let schur = Schur::try_new(a.as_inner().clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let degenerate = tol.degenerate * scale;

    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut rhs = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                rhs -= t[(i, j)] * y[(j, k)];
            }
            let denom = t[(i, i)] - t[(k, k)];
            y[(i, k)] = if denom.norm() <= degenerate {
                C64::new(0.0, 0.0)
            } else {
                rhs / denom
            };
        }
    }
    let mut right = q * y;
    for mut col in right.column_iter_mut() {
        let norm = col.norm();
        col /= C64::new(norm, 0.0);
    }
    let right = ComplexMatrix::from_inner_unchecked(right);
    let left = super::solve::invert(&right)?;
    Ok(GeneralEigen {
        values,
        right,
        left,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(rng: &mut StdRng, n: usize) -> ComplexMatrix {
        let m = ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&m + &m.adjoint()).scale_real(0.5)
    }

    #[test]
    fn diagonal_input() {
        let h = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let e = hermitian_eig(&h).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        let expected = ComplexMatrix::from_real_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((&e.vectors - &expected).norm() < 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let h = ComplexMatrix::from_real_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = hermitian_eig(&h).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = ComplexMatrix::from_real_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]).unwrap();
        match hermitian_eig(&h) {
            Err(Error::NotHermitian { defect }) => assert!((defect - 0.5 * 2f64.sqrt()).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        let r = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&r), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = StdRng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 50);
        let e = hermitian_eig(&h).unwrap();
        let d: Vec<C64> = e.values.iter().map(|&x| C64::new(x, 0.0)).collect();
        let rec = &(&e.vectors * &ComplexMatrix::from_diagonal(&d)) * &e.vectors.adjoint();
        assert!((&rec - &h).norm() <= 1e-9 * h.norm());
        let gram = &e.vectors.adjoint() * &e.vectors;
        assert!((&gram - &ComplexMatrix::identity(50)).norm() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..50 {
            let col = e.vectors.column(k);
            let resid = (h.mul_vec(&col) - col.clone() * C64::new(e.values[k], 0.0)).norm();
            assert!(resid <= 1e-9 * h.norm());
            let p = phase_reference(col.as_slice());
            assert!((p - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let tr: f64 = e.values.iter().sum();
        assert!((tr - h.trace().re).abs() <= 1e-9 * h.norm());
    }

    #[test]
    fn general_eig_of_random_matrix() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = ComplexMatrix::from_fn(12, 12, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let e = general_eig(&a).unwrap();
        assert!(e.reconstruction_error(&a) < 1e-11);
    }

    #[test]
    fn general_eig_with_exact_degeneracy() {
        // Block-diagonal with a repeated eigenvalue in separate blocks.
        let b = ComplexMatrix::from_row_slice(
            2,
            2,
            &[C64::new(-1.0, 0.0), C64::new(0.0, 2.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.0)],
        )
        .unwrap();
        let a = super::super::kron(&ComplexMatrix::identity(2), &b);
        let e = general_eig(&a).unwrap();
        assert!(e.reconstruction_error(&a) < 1e-12);
    }
}
