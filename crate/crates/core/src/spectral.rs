//! Eigenvector-based matrix functions, used as an independent oracle for the
//! contour calculus on diagonalizable inputs.

use crate::linalg::{c, diag, frobenius, inverse, norm2, CMatrix, C64};

/// Eigenvector conditioning beyond which the oracle declines to answer.
pub const MAX_EIGVEC_COND: f64 = 1e10;

#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: CMatrix,
    pub inverse: CMatrix,
    pub cond: f64,
}

/// Eigen-decomposition A = V Λ V⁻¹ from the complex Schur form, or `None`
/// when the eigenvector basis is too ill-conditioned to trust.
pub fn eigen_decompose(m: &CMatrix) -> Option<Eigen> {
    let n = m.nrows();
    let (q, t) = m.clone().schur().unpack();
    let scale = frobenius(&t).max(f64::MIN_POSITIVE);
    let small = 1e-14 * scale;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lk = t[(k, k)];
        y[(k, k)] = c(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = c(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let mut d = t[(j, j)] - lk;
            if d.norm() < small {
                d = c(small, 0.0);
            }
            y[(j, k)] = -acc / d;
        }
        let nrm = y.column(k).norm();
        y.column_mut(k).unscale_mut(nrm);
    }
    let v = q * y;
    let vinv = inverse(&v).ok()?;
    let cond = norm2(&v) * norm2(&vinv);
    if !(cond <= MAX_EIGVEC_COND) {
        return None;
    }
    let values = (0..n).map(|k| t[(k, k)]).collect();
    Some(Eigen {
        values,
        vectors: v,
        inverse: vinv,
        cond,
    })
}

impl Eigen {
    pub fn apply<F: Fn(C64) -> C64>(&self, f: F) -> CMatrix {
        let fv: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        &self.vectors * diag(&fv) * &self.inverse
    }
}

/// f(A) = V f(Λ) V⁻¹.
pub fn spectral_function<F: Fn(C64) -> C64>(m: &CMatrix, f: F) -> Option<CMatrix> {
    eigen_decompose(m).map(|e| e.apply(f))
}
