//! Sectorial operators: construction, resolvents, sectoriality certificates,
//! graded norms.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::dunford_riesz_default;
use crate::error::{Error, Result};
use crate::linalg::{c, eigenvalues, identity, norm2, sigma_min, singular_values, solve, solve_vec, CMatrix, CVector, C64};
use crate::quadrature::{QuadConfig, RadialGrid};
use crate::symbols::{golden_max, ScalarSymbol};

/// σ_min(A) ≤ KERNEL_TOL·‖A‖ means A is treated as having a kernel.
pub const KERNEL_TOL: f64 = 1e-12;
/// σ_min(z − A) ≤ RESOLVENT_TOL·max(‖A‖, |z|) means z is treated as an eigenvalue.
pub const RESOLVENT_TOL: f64 = 1e-12;
/// Uniform angular grid used by the type-angle estimate.
pub const ANGLE_GRID: usize = 256;
/// Resolvent constants above this cap count as "not sectorial at this angle".
pub const C_THETA_CAP: f64 = 1e6;
/// Relative change allowed when the certification grid is doubled.
pub const SATURATION_TOL: f64 = 1e-3;

/// Closed sector S_θ = {|arg z| ≤ θ} ∪ {0}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    theta: f64,
}

impl Sector {
    /// θ = π is accepted as the limiting case whose boundary is the negative axis.
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= PI) {
            return Err(Error::InvalidParam(format!("sector angle must lie in (0, π), got {theta}")));
        }
        Ok(Sector { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn contains(&self, z: C64) -> bool {
        z == c(0.0, 0.0) || z.arg().abs() <= self.theta
    }
}

/// A dense matrix with trivial kernel and certified sectoriality data.
pub struct SectorialOperator {
    matrix: CMatrix,
    label: String,
    omega_est: f64,
    c_theta: Vec<(f64, f64)>,
    spectrum: Vec<C64>,
    norm: f64,
    powers: Arc<Mutex<HashMap<(u64, u64), CMatrix>>>,
}

impl Clone for SectorialOperator {
    fn clone(&self) -> Self {
        SectorialOperator {
            matrix: self.matrix.clone(),
            label: self.label.clone(),
            omega_est: self.omega_est,
            c_theta: self.c_theta.clone(),
            spectrum: self.spectrum.clone(),
            norm: self.norm,
            powers: Arc::clone(&self.powers),
        }
    }
}

impl fmt::Debug for SectorialOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectorialOperator")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("omega_est", &self.omega_est)
            .field("c_theta", &self.c_theta)
            .finish()
    }
}

impl SectorialOperator {
    /// Kernel check plus type-angle estimate.
    pub fn new(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        crate::linalg::validate_square(&matrix)?;
        let sv = singular_values(&matrix);
        let norm = sv[0];
        let smin = *sv.last().unwrap();
        if !(smin > KERNEL_TOL * norm) {
            return Err(Error::Singular {
                sigma_min: smin,
                threshold: KERNEL_TOL * norm,
            });
        }
        let spectrum = eigenvalues(&matrix);
        let omega_est = estimate_type_angle(&matrix)?;
        Ok(SectorialOperator {
            matrix,
            label: label.into(),
            omega_est,
            c_theta: Vec::new(),
            spectrum,
            norm,
            powers: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn omega_est(&self) -> f64 {
        self.omega_est
    }

    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Certified (θ, C_θ) pairs in ascending θ.
    pub fn c_theta(&self) -> &[(f64, f64)] {
        &self.c_theta
    }

    /// Smallest and largest eigenvalue modulus.
    pub fn spectral_radii(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for z in &self.spectrum {
            lo = lo.min(z.norm());
            hi = hi.max(z.norm());
        }
        (lo, hi)
    }

    /// The adjoint as an operator; the type angle is the same.
    pub fn adjoint(&self) -> Result<SectorialOperator> {
        SectorialOperator::new(self.matrix.adjoint(), format!("adjoint({})", self.label))
    }

    pub(crate) fn cached_power(&self, key: (u64, u64)) -> Option<CMatrix> {
        self.powers.lock().ok().and_then(|m| m.get(&key).cloned())
    }

    pub(crate) fn store_power(&self, key: (u64, u64), value: &CMatrix) {
        if let Ok(mut m) = self.powers.lock() {
            m.insert(key, value.clone());
        }
    }

    /// Certify at θ and record the constant.
    pub fn certify(&mut self, sector: Sector, ray_grid: &RadialGrid) -> Result<f64> {
        let c_val = certify_sectoriality(self, sector, ray_grid)?;
        match self.c_theta.iter_mut().find(|(t, _)| *t == sector.theta()) {
            Some(entry) => entry.1 = c_val,
            None => {
                self.c_theta.push((sector.theta(), c_val));
                self.c_theta.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            }
        }
        Ok(c_val)
    }

    /// Default ray grid for certification: the spectral annulus widened by e^{±20}.
    pub fn default_ray_grid(&self) -> RadialGrid {
        let (lo, hi) = self.spectral_radii();
        RadialGrid::with_density(lo.ln() - 20.0, hi.ln() + 20.0, 8.0).expect("finite spectrum")
    }
}

/// (zI − A)⁻¹ by LU, refusing points on or next to the spectrum.
pub fn resolvent(a: &SectorialOperator, z: C64) -> Result<CMatrix> {
    resolvent_of(a.matrix(), z)
}

pub fn resolvent_of(m: &CMatrix, z: C64) -> Result<CMatrix> {
    let n = m.nrows();
    let shifted = identity(n) * z - m;
    let smin = sigma_min(&shifted);
    let scale = norm2(m).max(z.norm());
    if !(smin > RESOLVENT_TOL * scale) {
        return Err(Error::ResolventSingular { z, sigma_min: smin });
    }
    solve(&shifted, &identity(n))
}

/// |z|·‖(z − A)⁻¹‖ = |z|/σ_min(z − A).
fn resolvent_bound(m: &CMatrix, z: C64) -> f64 {
    let n = m.nrows();
    let smin = sigma_min(&(identity(n) * z - m));
    if smin > 0.0 {
        z.norm() / smin
    } else {
        f64::INFINITY
    }
}

/// Sup of the resolvent bound along the ray arg z = phi, refined around the best node.
fn ray_sup(m: &CMatrix, phi: f64, us: &[f64]) -> f64 {
    let dir = c(0.0, phi).exp();
    let vals: Vec<f64> = us.par_iter().map(|&u| resolvent_bound(m, dir * u.exp())).collect();
    let (k, best) = vals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !best.is_finite() || us.len() < 3 {
        return best;
    }
    let a = us[k.saturating_sub(1)];
    let b = us[(k + 1).min(us.len() - 1)];
    best.max(golden_max(|u| resolvent_bound(m, dir * u.exp()), a, b, 50))
}

fn sup_outside(m: &CMatrix, theta: f64, grid: &RadialGrid) -> f64 {
    let us = grid.log_nodes();
    let mut best = 0.0f64;
    for j in 0..=4 {
        let tp = theta + j as f64 * (PI - theta) / 4.0;
        best = best.max(ray_sup(m, tp, us));
        if tp < PI {
            best = best.max(ray_sup(m, -tp, us));
        }
    }
    best
}

fn max_eig_arg(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().map(|z| z.arg().abs()).fold(0.0, f64::max)
}

/// Sampled sup of |z|·‖(z − A)⁻¹‖ over rays at and beyond ±θ.
///
/// The sup over the complement of S_θ is attained on its boundary, so the
/// extra angles only guard against a coarse radial grid.
pub fn certify_sectoriality(a: &SectorialOperator, sector: Sector, ray_grid: &RadialGrid) -> Result<f64> {
    let theta = sector.theta();
    if theta <= a.omega_est() && theta < PI {
        return Err(Error::InvalidParam(format!(
            "sector angle {theta:.6} must exceed the type-angle estimate {:.6}",
            a.omega_est()
        )));
    }
    certify_matrix(a.matrix(), theta, ray_grid)
}

pub(crate) fn certify_matrix(m: &CMatrix, theta: f64, ray_grid: &RadialGrid) -> Result<f64> {
    let worst = max_eig_arg(m);
    if worst >= theta {
        return Err(Error::NotSectorial {
            theta,
            reason: format!("an eigenvalue has argument {worst:.6}"),
        });
    }
    let coarse = sup_outside(m, theta, ray_grid);
    let finer_grid = ray_grid
        .refined()
        .with_range(ray_grid.u_min() - 4.0, ray_grid.u_max() + 4.0)?;
    let fine = sup_outside(m, theta, &finer_grid);
    if !fine.is_finite() || (fine - coarse).abs() > SATURATION_TOL * fine {
        return Err(Error::NotSectorial {
            theta,
            reason: format!("resolvent sup does not saturate: {coarse:.6e} then {fine:.6e}"),
        });
    }
    Ok(fine)
}

/// Cheap version of the certificate used inside the angle bisection.
fn quick_bound(m: &CMatrix, theta: f64, us: &[f64]) -> f64 {
    ray_sup(m, theta, us).max(if theta < PI { ray_sup(m, -theta, us) } else { 0.0 })
}

/// Smallest angle kπ/(N+1) on the uniform grid whose resolvent constant stays below the cap.
pub fn estimate_type_angle(m: &CMatrix) -> Result<f64> {
    let ev = eigenvalues(m);
    let lo_r = ev.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let hi_r = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(lo_r > 0.0) {
        return Err(Error::InvalidParam("type angle needs a nonsingular matrix".into()));
    }
    let arg_max = max_eig_arg(m);
    let grid = RadialGrid::with_density(lo_r.ln() - 12.0, hi_r.ln() + 12.0, 6.0)?;
    let us = grid.log_nodes();
    let angle = |k: usize| k as f64 * PI / (ANGLE_GRID + 1) as f64;
    let ok = |k: usize| {
        let t = angle(k);
        t > arg_max && quick_bound(m, t, us) <= C_THETA_CAP
    };
    if !ok(ANGLE_GRID) {
        return Err(Error::NotSectorial {
            theta: angle(ANGLE_GRID),
            reason: "no angle below π keeps the resolvent constant under the cap".into(),
        });
    }
    // Resolvent constants decrease in θ, so the passing set is an upper interval.
    let (mut lo, mut hi) = (0usize, ANGLE_GRID);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let est = angle(hi);
    debug_assert!(est > arg_max);
    Ok(est)
}

/// ‖T_A^{−n} x‖ with T_A = √A(1+A)⁻¹.
pub fn graded_norm(a: &SectorialOperator, n: i32, x: &CVector, cfg: &QuadConfig) -> Result<f64> {
    check_dim(a, x)?;
    if n == 0 {
        return Ok(x.norm());
    }
    let t = dunford_riesz_default(a, &ScalarSymbol::sqrt_over_1p(), cfg)?.value;
    let mut y = x.clone();
    if n > 0 {
        for _ in 0..n {
            y = solve_vec(&t, &y).map_err(|_| Error::IllConditioned(crate::linalg::cond2(&t)))?;
        }
    } else {
        for _ in 0..(-n) {
            y = &t * y;
        }
    }
    Ok(y.norm())
}

/// x_ε = (1+εA)⁻¹x − ε(A+ε)⁻¹x, the two-resolvent form of
/// (1−ε²)A(A+ε)⁻¹(1+εA)⁻¹x.
pub fn approximate_identity(a: &SectorialOperator, x: &CVector, eps: f64) -> Result<CVector> {
    check_eps(eps)?;
    check_dim(a, x)?;
    let n = a.dim();
    let id = identity(n);
    let m = a.matrix();
    let first = solve_vec(&(&id + m * c(eps, 0.0)), x)?;
    let second = solve_vec(&(m + &id * c(eps, 0.0)), x)?;
    Ok(first - second * c(eps, 0.0))
}

/// Product form (1−ε²)A(A+ε)⁻¹(1+εA)⁻¹x.
pub fn approximate_identity_product(a: &SectorialOperator, x: &CVector, eps: f64) -> Result<CVector> {
    check_eps(eps)?;
    check_dim(a, x)?;
    let id = identity(a.dim());
    let m = a.matrix();
    let y = solve_vec(&(&id + m * c(eps, 0.0)), x)?;
    let y = solve_vec(&(m + &id * c(eps, 0.0)), &y)?;
    Ok(m * y * c(1.0 - eps * eps, 0.0))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParam(format!("ε must lie in (0,1), got {eps}")));
    }
    Ok(())
}

pub(crate) fn check_dim(a: &SectorialOperator, x: &CVector) -> Result<()> {
    if x.len() != a.dim() {
        return Err(Error::InvalidParam(format!(
            "vector has length {} but the operator has dimension {}",
            x.len(),
            a.dim()
        )));
    }
    Ok(())
}
