//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Pivot ratio below which an LU factorization is treated as singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-15;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let v: Vec<C64> = values.iter().map(|&x| c(x, 0.0)).collect();
    diag(&v)
}

/// Square, non-empty, finite.
pub fn validate_square(m: &CMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Empty);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Solve `m X = rhs` by LU with partial pivoting.
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 0..u.nrows() {
        let p = u[(k, k)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(hi > 0.0) || lo <= PIVOT_RATIO_FLOOR * hi {
        let est = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(Error::IllConditioned(est));
    }
    let x = lu
        .solve(rhs)
        .ok_or_else(|| Error::SolveFailed("LU solve returned no solution".into()))?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SolveFailed("non-finite solution".into()));
    }
    Ok(x)
}

pub fn solve_vec(m: &CMatrix, rhs: &CVector) -> Result<CVector> {
    let x = solve(m, &CMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
    Ok(x.column(0).into_owned())
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    solve(m, &identity(m.nrows()))
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

pub fn norm2(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn sigma_min(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// 2-norm condition number.
pub fn cond2(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    match m.clone().schur().eigenvalues() {
        Some(v) => v.iter().copied().collect(),
        None => {
            // The Schur form is upper triangular for complex input; read the diagonal.
            let (_, t) = m.clone().schur().unpack();
            (0..t.nrows()).map(|k| t[(k, k)]).collect()
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (j, &k) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖a − b‖_F / ‖b‖_F, falling back to the absolute difference when b = 0.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = frobenius(&(a - b));
    let s = frobenius(b);
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

pub fn vec_rel_diff(a: &CVector, b: &CVector) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

/// Extreme eigenvalues of the Hermitian pencil (a, b) with b positive definite.
pub fn pencil_extremes(a: &CMatrix, b: &CMatrix) -> Result<(f64, f64)> {
    let (vals, vecs) = hermitian_eigen(b);
    let lo = vals.first().copied().unwrap_or(0.0);
    let hi = vals.last().copied().unwrap_or(0.0);
    if !(lo > 1e-14 * hi.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateGram(lo));
    }
    let inv_sqrt: Vec<C64> = vals.iter().map(|&v| c(1.0 / v.sqrt(), 0.0)).collect();
    let w = &vecs * diag(&inv_sqrt) * vecs.adjoint();
    let reduced = &w * a * &w;
    let (ev, _) = hermitian_eigen(&reduced);
    Ok((ev[0], ev[ev.len() - 1]))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_rejects_singular() {
        let m = diag_real(&[1.0, 0.0]);
        assert!(solve(&m, &identity(2)).is_err());
    }

    #[test]
    fn solve_small_system() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let x = inverse(&m).unwrap();
        assert!(rel_diff(&(&m * &x), &identity(2)) < 1e-15);
    }

    #[test]
    fn pencil_of_scaled_identity() {
        let (lo, hi) = pencil_extremes(&diag_real(&[2.0, 8.0]), &diag_real(&[1.0, 2.0])).unwrap();
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 4.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(5.0, 0.0), c(0.0, 0.0), c(0.0, 2.0)]);
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((ev[1] - c(0.0, 2.0)).norm() < 1e-12);
    }
}
