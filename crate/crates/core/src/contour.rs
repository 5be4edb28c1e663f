//! Sector-boundary contours and the Dunford–Riesz / extended functional calculus.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, identity, norm2, solve, CMatrix, CVector, C64, I};
use crate::operator::SectorialOperator;
use crate::quadrature::{adaptive, Converged, QuadConfig, RadialGrid, Sweep};
use crate::report::Report;
use crate::symbols::ScalarSymbol;

/// Traversal direction of a sector boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// From ∞e^{iθ'} down to 0, then from 0 out to ∞e^{−iθ'}; the sector lies on the left.
    SectorOnLeft,
}

/// One quadrature node on a contour: the point, the weighted dz and |dz|.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourNode {
    pub z: C64,
    pub dz: C64,
    pub abs_dz: f64,
}

/// The two rays arg z = ±θ', discretized by a shared radial grid.
///
/// Nodes are stored upper ray first, then lower ray, each in increasing radius,
/// so node k and node k + n are complex conjugates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    theta_prime: f64,
    grid: RadialGrid,
    orientation: Orientation,
}

impl Contour {
    pub fn new(theta_prime: f64, grid: RadialGrid) -> Result<Self> {
        if !(theta_prime > 0.0 && theta_prime <= PI) {
            return Err(Error::InvalidParam(format!(
                "contour angle must lie in (0, π], got {theta_prime}"
            )));
        }
        Ok(Contour {
            theta_prime,
            grid,
            orientation: Orientation::SectorOnLeft,
        })
    }

    pub fn theta_prime(&self) -> f64 {
        self.theta_prime
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn len(&self) -> usize {
        2 * self.grid.n_nodes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_grid(&self, grid: RadialGrid) -> Contour {
        Contour {
            theta_prime: self.theta_prime,
            grid,
            orientation: self.orientation,
        }
    }

    pub fn refined(&self) -> Contour {
        self.with_grid(self.grid.refined())
    }

    pub fn nodes(&self) -> Vec<ContourNode> {
        let up = c(0.0, self.theta_prime).exp();
        let down = up.conj();
        let mut out = Vec::with_capacity(self.len());
        for (&r, &w) in self.grid.radii().iter().zip(self.grid.weights()) {
            out.push(ContourNode {
                z: up * r,
                dz: -up * (w * r),
                abs_dz: w * r,
            });
        }
        for (&r, &w) in self.grid.radii().iter().zip(self.grid.weights()) {
            out.push(ContourNode {
                z: down * r,
                dz: down * (w * r),
                abs_dz: w * r,
            });
        }
        out
    }

    pub fn points(&self) -> Vec<C64> {
        self.nodes().into_iter().map(|n| n.z).collect()
    }
}

/// Real shift μ used to subtract the pole at infinity from the resolvent.
pub fn calculus_shift(a: &SectorialOperator) -> f64 {
    let (lo, hi) = a.spectral_radii();
    (lo * hi).sqrt()
}

/// Contour angle halfway between the type angle and the symbol's validity angle.
pub fn contour_angle(a: &SectorialOperator, sup_angle: f64) -> Result<f64> {
    let s = sup_angle.min(PI);
    if !(a.omega_est() < s) {
        return Err(Error::InvalidParam(format!(
            "type angle {:.6} leaves no room below the symbol's angle {s:.6}",
            a.omega_est()
        )));
    }
    Ok(0.5 * (a.omega_est() + s))
}

pub fn default_contour(a: &SectorialOperator, sup_angle: f64, cfg: &QuadConfig) -> Result<Contour> {
    let theta = contour_angle(a, sup_angle)?;
    let (lo, hi) = a.spectral_radii();
    let (u0, u1) = cfg.range(lo, hi);
    Contour::new(theta, cfg.initial_grid(u0, u1)?)
}

/// Kernels K_j = dz_j/(2πi)·(z_j − A)⁻¹(A − μ)(z_j − μ)⁻¹, so that
/// ψ(A) = ψ(μ)I + Σ_j ψ(z_j)K_j.
pub struct ResolventTable {
    contour: Contour,
    mu: f64,
    nodes: Vec<C64>,
    kernels: Vec<CMatrix>,
    kernel_norms: Vec<f64>,
    dim: usize,
}

impl ResolventTable {
    pub fn build(m: &CMatrix, contour: &Contour, mu: f64) -> Result<Self> {
        let n = m.nrows();
        let shift = m - identity(n) * c(mu, 0.0);
        let nodes = contour.nodes();
        let kernels: Result<Vec<CMatrix>> = nodes
            .par_iter()
            .map(|node| {
                let k = solve(&(identity(n) * node.z - m), &shift)
                    .map_err(|_| Error::ResolventSingular { z: node.z, sigma_min: 0.0 })?;
                Ok(k * (node.dz / (2.0 * PI * I * (node.z - mu))))
            })
            .collect();
        let kernels = kernels?;
        let kernel_norms = kernels.iter().map(frobenius).collect();
        Ok(ResolventTable {
            contour: contour.clone(),
            mu,
            nodes: nodes.iter().map(|n| n.z).collect(),
            kernels,
            kernel_norms,
            dim: n,
        })
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    pub fn kernels(&self) -> &[CMatrix] {
        &self.kernels
    }

    pub fn kernel_norms(&self) -> &[f64] {
        &self.kernel_norms
    }

    pub fn apply<F: Fn(C64) -> C64>(&self, f: F) -> Sweep<CMatrix> {
        let f_mu = f(c(self.mu, 0.0));
        let mut acc = identity(self.dim) * f_mu;
        let mut scale = f_mu.norm() * (self.dim as f64).sqrt();
        for ((k, &z), &kn) in self.kernels.iter().zip(&self.nodes).zip(&self.kernel_norms) {
            let fz = f(z);
            if fz == c(0.0, 0.0) {
                continue;
            }
            acc += k * fz;
            scale += fz.norm() * kn;
        }
        Sweep { value: acc, scale }
    }
}

/// Size of the pole-subtracted integrand at log-radius u, maximized over both rays.
fn tail_probe(m: &CMatrix, theta: f64, mu: f64, fs: &[&ScalarSymbol], u: f64) -> f64 {
    let n = m.nrows();
    let shift = m - identity(n) * c(mu, 0.0);
    let r = u.exp();
    let mut best = 0.0f64;
    for sign in [1.0, -1.0] {
        let z = c(0.0, sign * theta).exp() * r;
        let fmax = fs.iter().map(|f| f.eval(z).norm()).fold(0.0, f64::max);
        if fmax == 0.0 {
            continue;
        }
        let k = match solve(&(identity(n) * z - m), &shift) {
            Ok(k) => frobenius(&k),
            Err(_) => return f64::INFINITY,
        };
        best = best.max(fmax * r * k / (z - mu).norm());
    }
    best
}

fn check_contour(a: &SectorialOperator, sup_angle: f64, contour: &Contour) -> Result<()> {
    let t = contour.theta_prime();
    if !(t > a.omega_est()) || !(t < sup_angle.min(PI) || (sup_angle >= PI && t < PI)) {
        return Err(Error::InvalidParam(format!(
            "contour angle {t:.6} must lie in ({:.6}, {:.6})",
            a.omega_est(),
            sup_angle.min(PI)
        )));
    }
    Ok(())
}

/// Σ of several Ψ-class symbols on one adaptive grid, sharing resolvents.
pub fn dunford_riesz_batch(
    a: &SectorialOperator,
    symbols: &[&ScalarSymbol],
    contour: &Contour,
    cfg: &QuadConfig,
) -> Result<Converged<Vec<CMatrix>>> {
    cfg.validate()?;
    let sup = symbols.iter().map(|s| s.sup_angle()).fold(PI, f64::min);
    for s in symbols {
        if !s.is_psi() {
            return Err(Error::InvalidParam(format!(
                "symbol '{}' has no declared Ψ-class exponent; use the extended calculus",
                s.name()
            )));
        }
    }
    check_contour(a, sup, contour)?;
    let mu = calculus_shift(a);
    let m = a.matrix();
    let theta = contour.theta_prime();
    let mut grid = contour.grid().clone();
    if cfg.extend_tails {
        let (lo, hi) = crate::quadrature::extend_range(
            grid.u_min(),
            grid.u_max(),
            cfg.tail_tol(),
            cfg.max_width,
            cfg.u_min.is_none(),
            cfg.u_max.is_none(),
            |u| tail_probe(m, theta, mu, symbols, u),
        );
        if lo != grid.u_min() || hi != grid.u_max() {
            grid = grid.with_range(lo, hi)?;
        }
    }
    adaptive(cfg, grid, |g| {
        let table = ResolventTable::build(m, &contour.with_grid(g.clone()), mu)?;
        let mut values = Vec::with_capacity(symbols.len());
        let mut scale = 0.0f64;
        for s in symbols {
            let sw = table.apply(|z| s.eval(z));
            scale = scale.max(sw.scale);
            values.push(sw.value);
        }
        Ok(Sweep { value: values, scale })
    })
}

/// ψ(A) = (1/2πi)∮ (z − A)⁻¹ψ(z) dz along the contour, refined until stable.
pub fn dunford_riesz(
    a: &SectorialOperator,
    psi: &ScalarSymbol,
    contour: &Contour,
    cfg: &QuadConfig,
) -> Result<Converged<CMatrix>> {
    let r = dunford_riesz_batch(a, &[psi], contour, cfg)?;
    Ok(Converged {
        value: r.value.into_iter().next().expect("one symbol"),
        grid: r.grid,
        doublings: r.doublings,
        change: r.change,
    })
}

pub fn dunford_riesz_default(a: &SectorialOperator, psi: &ScalarSymbol, cfg: &QuadConfig) -> Result<Converged<CMatrix>> {
    let contour = default_contour(a, psi.sup_angle(), cfg)?;
    dunford_riesz(a, psi, &contour, cfg)
}

/// φ(A) = A(I + A)⁻², exactly.
pub fn phi_matrix(a: &SectorialOperator) -> Result<CMatrix> {
    let n = a.dim();
    let m = a.matrix();
    let b = identity(n) + m;
    solve(&(&b * &b), m)
}

/// f(A) := φ(A)⁻¹(fφ)(A) for several symbols at once.
pub fn extended_calculus_batch(
    a: &SectorialOperator,
    fs: &[&ScalarSymbol],
    cfg: &QuadConfig,
) -> Result<Converged<Vec<CMatrix>>> {
    let weight = ScalarSymbol::phi();
    let products: Vec<ScalarSymbol> = fs.iter().map(|f| f.times(&weight)).collect();
    let refs: Vec<&ScalarSymbol> = products.iter().collect();
    let sup = fs.iter().map(|f| f.sup_angle()).fold(PI, f64::min);
    let contour = default_contour(a, sup, cfg)?;
    let dr = dunford_riesz_batch(a, &refs, &contour, cfg)?;
    let phi_a = phi_matrix(a)?;
    let values: Result<Vec<CMatrix>> = dr
        .value
        .iter()
        .map(|v| solve(&phi_a, v).map_err(|e| Error::SolveFailed(format!("φ(A) solve: {e}"))))
        .collect();
    Ok(Converged {
        value: values?,
        grid: dr.grid,
        doublings: dr.doublings,
        change: dr.change,
    })
}

pub fn extended_calculus(a: &SectorialOperator, f: &ScalarSymbol, cfg: &QuadConfig) -> Result<Converged<CMatrix>> {
    let r = extended_calculus_batch(a, &[f], cfg)?;
    Ok(Converged {
        value: r.value.into_iter().next().expect("one symbol"),
        grid: r.grid,
        doublings: r.doublings,
        change: r.change,
    })
}

fn integer_power(m: &CMatrix, k: i64) -> Result<CMatrix> {
    let n = m.nrows();
    let base = if k < 0 { crate::linalg::inverse(m)? } else { m.clone() };
    let mut out = identity(n);
    for _ in 0..k.unsigned_abs() {
        out = &out * &base;
    }
    Ok(out)
}

/// A^α on the principal branch; integer parts are split off so the contour
/// integral only ever sees exponents in (0, 1). Cached on the operator.
pub fn fractional_power(a: &SectorialOperator, alpha: f64, cfg: &QuadConfig) -> Result<CMatrix> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParam(format!("exponent must be finite, got {alpha}")));
    }
    if !(alpha.abs() * a.omega_est() < PI) {
        return Err(Error::InvalidParam(format!(
            "|α|·ω = {:.6} must stay below π",
            alpha.abs() * a.omega_est()
        )));
    }
    let key = (alpha.to_bits(), cfg.tol.to_bits());
    if let Some(m) = a.cached_power(key) {
        return Ok(m);
    }
    let whole = alpha.floor();
    let frac = alpha - whole;
    let int_part = integer_power(a.matrix(), whole as i64)?;
    let value = if frac == 0.0 {
        int_part
    } else {
        let f = extended_calculus(a, &ScalarSymbol::z_pow(frac), cfg)?.value;
        int_part * f
    };
    a.store_power(key, &value);
    Ok(value)
}

/// Λ_k(A) = Log(A) + 2kπi·I.
pub fn logarithm_branch(a: &SectorialOperator, k: i32, cfg: &QuadConfig) -> Result<CMatrix> {
    let l = extended_calculus(a, &ScalarSymbol::log(), cfg)?.value;
    Ok(l + identity(a.dim()) * c(0.0, 2.0 * PI * k as f64))
}

/// Λ_k(A)^{−r}. For k ≠ 0 this is the extended calculus of (Log z + 2kπi)^{−r};
/// for k = 0 it is the principal power of the operator Log A, which needs
/// σ(Log A) to avoid (−∞, 0].
pub fn log_power_matrix(a: &SectorialOperator, k: i32, r: f64, cfg: &QuadConfig) -> Result<CMatrix> {
    if k != 0 {
        return Ok(extended_calculus(a, &ScalarSymbol::log_power(k, r), cfg)?.value);
    }
    let l = logarithm_branch(a, 0, cfg)?;
    let b = SectorialOperator::new(l, format!("log({})", a.label()))?;
    fractional_power(&b, -r, cfg)
}

/// Λ_k(A)^{−r}x for k ≠ 0 and r > 1/2.
pub fn negative_log_power(a: &SectorialOperator, k: i32, r: f64, x: &CVector, cfg: &QuadConfig) -> Result<CVector> {
    if k == 0 {
        return Err(Error::InvalidParam("branch k = 0 is excluded: Λ_0(A) may have 0 in its spectrum".into()));
    }
    if !(r > 0.5) {
        return Err(Error::InvalidParam(format!("exponent r must exceed 1/2, got {r}")));
    }
    crate::operator::check_dim(a, x)?;
    Ok(log_power_matrix(a, k, r, cfg)? * x)
}

pub fn imaginary_power(a: &SectorialOperator, s: f64, cfg: &QuadConfig) -> Result<CMatrix> {
    Ok(extended_calculus(a, &ScalarSymbol::z_ipow(s), cfg)?.value)
}

/// Shift used for group-law triples (s, t, s + t).
const GROUP_STEP: f64 = 0.7;

/// Growth of the imaginary powers over `s_values`: sup ‖A^{is}‖e^{−μ|s|},
/// sup ‖A^{is}‖ and the group-law residual ‖A^{is}A^{it} − A^{i(s+t)}‖.
pub fn group_growth_scan(a: &SectorialOperator, mu: f64, s_values: &[f64], cfg: &QuadConfig) -> Result<Report> {
    if !(mu > a.omega_est()) {
        return Err(Error::InvalidParam(format!(
            "μ = {mu} must exceed the type angle {:.6}",
            a.omega_est()
        )));
    }
    if s_values.is_empty() {
        return Err(Error::InvalidParam("empty s range".into()));
    }
    let mut symbols = vec![ScalarSymbol::z_ipow(GROUP_STEP)];
    for &s in s_values {
        symbols.push(ScalarSymbol::z_ipow(s));
        symbols.push(ScalarSymbol::z_ipow(s + GROUP_STEP));
    }
    let refs: Vec<&ScalarSymbol> = symbols.iter().collect();
    let out = extended_calculus_batch(a, &refs, cfg)?;
    let step = &out.value[0];
    let mut sup_weighted = 0.0f64;
    let mut sup_plain = 0.0f64;
    let mut group = 0.0f64;
    for (j, &s) in s_values.iter().enumerate() {
        let p = &out.value[1 + 2 * j];
        let q = &out.value[2 + 2 * j];
        let nrm = norm2(p);
        sup_plain = sup_plain.max(nrm);
        sup_weighted = sup_weighted.max(nrm * (-mu * s.abs()).exp());
        group = group.max(norm2(&(p * step - q)) / norm2(q).max(1.0));
    }
    let tol = 1e-6;
    Ok(Report::new("group_growth", a.label(), tol, group <= tol && sup_weighted.is_finite())
        .param("mu", mu)
        .param("s_min", s_values.iter().copied().fold(f64::INFINITY, f64::min))
        .param("s_max", s_values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .constant("sup_weighted_norm", sup_weighted)
        .constant("sup_norm", sup_plain)
        .residual("group_law", group)
        .with_grid(&out.grid))
}
