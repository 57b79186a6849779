use nalgebra::DMatrix;

use super::{CVector, ComplexMatrix, Tolerances, C64};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting and a pivot-size guard.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl LuFactor {
    pub fn new(a: &ComplexMatrix, context: Option<&str>) -> Result<Self> {
        Self::with_tolerances(a, context, &Tolerances::default())
    }

    pub fn with_tolerances(a: &ComplexMatrix, context: Option<&str>, tol: &Tolerances) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let n = a.nrows();
        let threshold = tol.pivot * a.norm();
        let lu = a.as_inner().clone().lu();
        let pivot = (0..n).map(|k| lu.u()[(k, k)].norm()).fold(f64::INFINITY, f64::min);
        if n > 0 && (pivot <= threshold || pivot == 0.0) {
            return Err(Error::Singular {
                context: context.map(str::to_owned),
                pivot,
                threshold,
            });
        }
        Ok(Self { lu, n })
    }

    pub fn solve(&self, b: &CVector) -> Result<CVector> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a {n}x{n} system",
                b.len(),
                n = self.n
            )));
        }
        self.lu
            .solve(b)
            .ok_or(Error::Singular {
                context: None,
                pivot: 0.0,
                threshold: 0.0,
            })
    }
}

/// Solves `a x = b`.
pub fn solve_linear(a: &ComplexMatrix, b: &CVector) -> Result<CVector> {
    solve_linear_with(a, b, None)
}

/// Solves `a x = b`; `context` is attached to singularity diagnostics.
pub fn solve_linear_with(a: &ComplexMatrix, b: &CVector, context: Option<&str>) -> Result<CVector> {
    LuFactor::new(a, context)?.solve(b)
}

pub(crate) fn invert(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.nrows();
    let lu = LuFactor::new(a, Some("matrix inverse"))?;
    let mut out = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let mut e = CVector::zeros(n);
        e[j] = C64::new(1.0, 0.0);
        out.set_column(j, &lu.solve(&e)?);
    }
    Ok(ComplexMatrix::from_inner_unchecked(out))
}
