//! Square-function norms through a Gram matrix, equivalence constants, the
//! logarithmic gap and admissibility integrals.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::contour::{calculus_shift, contour_angle, fractional_power, log_power_matrix, Contour, ResolventTable};
use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eigen, hermitian_part, identity, pencil_extremes, rel_diff, solve, solve_vec, CMatrix, CVector, C64,
};
use crate::operator::{check_dim, SectorialOperator};
use crate::quadrature::{adaptive, extend_range, Converged, QuadConfig, RadialGrid, Sweep};
use crate::report::Report;
use crate::symbols::ScalarSymbol;

/// Hermitian PSD matrix G with ‖x‖²_A = x*Gx.
#[derive(Clone, Debug)]
pub struct GramOperator {
    pub matrix: CMatrix,
    pub psi_name: String,
    pub t_grid: RadialGrid,
    pub contour: Contour,
}

/// Best constants m‖x‖ ≤ ‖x‖_A ≤ M‖x‖.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub m: f64,
    pub big_m: f64,
    pub kappa: f64,
}

/// t values per chunk in the parallel t-loop; chunks are summed in order.
const T_CHUNK: usize = 64;

struct GramRanges {
    t: (f64, f64),
    z: (f64, f64),
    theta: f64,
}

fn gram_ranges(a: &SectorialOperator, psi: &ScalarSymbol, cfg: &QuadConfig) -> Result<GramRanges> {
    let s = psi.psi_exponent().ok_or_else(|| {
        Error::InvalidParam(format!("symbol '{}' has no declared Ψ-class exponent", psi.name()))
    })?;
    let theta = contour_angle(a, psi.sup_angle())?;
    let (lo, hi) = a.spectral_radii();
    let decades = (1.0 / cfg.tail_tol()).ln();
    // |ψ(tλ)|² ~ e^{−2s|log tλ|} in both directions.
    let lt = (decades / (2.0 * s)).max(14.0);
    // The z-integrand of ψ_t has a bump near |z| ~ 1/t, which the z-range must cover.
    let lz = (lt + 10.0).max(2.0 * decades);
    let mut z = (lo.ln() - lz, hi.ln() + lz);
    if let Some(u) = cfg.u_min {
        z.0 = u;
    }
    if let Some(u) = cfg.u_max {
        z.1 = u;
    }
    if z.1 - z.0 > cfg.max_width {
        return Err(Error::InvalidParam(format!(
            "Gram contour range {:.1} exceeds the configured maximum width {:.1}",
            z.1 - z.0,
            cfg.max_width
        )));
    }
    Ok(GramRanges {
        t: (-hi.ln() - lt, -lo.ln() + lt),
        z,
        theta,
    })
}

/// Column-stacked kernels, n² × J.
fn stack_kernels(table: &ResolventTable, n: usize) -> CMatrix {
    let ks = table.kernels();
    let mut out = CMatrix::zeros(n * n, ks.len());
    for (j, k) in ks.iter().enumerate() {
        out.column_mut(j).copy_from_slice(k.as_slice());
    }
    out
}

/// ψ_t(A) for every t in `ts`, as columns of an n² × T matrix.
fn psi_t_columns(table: &ResolventTable, stacked: &CMatrix, psi: &ScalarSymbol, ts: &[f64], n: usize) -> CMatrix {
    let nodes = table.nodes();
    let phi = CMatrix::from_fn(nodes.len(), ts.len(), |j, k| psi.eval(nodes[j] * ts[k]));
    let mut cols = stacked * phi;
    let mu = table.mu();
    for (k, &t) in ts.iter().enumerate() {
        let f_mu = psi.eval(c(t * mu, 0.0));
        for d in 0..n {
            cols[(d * n + d, k)] += f_mu;
        }
    }
    cols
}

fn as_square(col: nalgebra::DVectorView<'_, C64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, col.as_slice())
}

/// ∫ ψ_t(B)* ψ_t(A) dt/t on fixed grids, with B = A unless a second table is given.
fn pairing_sweep(
    left: Option<(&ResolventTable, &CMatrix)>,
    right: (&ResolventTable, &CMatrix),
    psi: &ScalarSymbol,
    t_grid: &RadialGrid,
    n: usize,
) -> Sweep<CMatrix> {
    let ts = t_grid.radii();
    let ws = t_grid.weights();
    let chunks: Vec<(CMatrix, f64)> = ts
        .par_chunks(T_CHUNK)
        .zip(ws.par_chunks(T_CHUNK))
        .map(|(tc, wc)| {
            let rcols = psi_t_columns(right.0, right.1, psi, tc, n);
            let lcols = left.map(|(tab, st)| psi_t_columns(tab, st, psi, tc, n));
            let mut acc = CMatrix::zeros(n, n);
            let mut scale = 0.0;
            for (k, &w) in wc.iter().enumerate() {
                let p = as_square(rcols.column(k), n);
                let q = match &lcols {
                    Some(l) => as_square(l.column(k), n),
                    None => p.clone(),
                };
                acc += q.adjoint() * &p * c(w, 0.0);
                scale += w * crate::linalg::frobenius(&p) * crate::linalg::frobenius(&q);
            }
            (acc, scale)
        })
        .collect();
    let mut total = CMatrix::zeros(n, n);
    let mut scale = 0.0;
    for (m, s) in chunks {
        total += m;
        scale += s;
    }
    Sweep { value: total, scale }
}

struct PairingResult {
    value: CMatrix,
    t_grid: RadialGrid,
    contour: Contour,
}

fn pairing_adaptive(
    a: &SectorialOperator,
    b: Option<&SectorialOperator>,
    psi: &ScalarSymbol,
    cfg: &QuadConfig,
) -> Result<PairingResult> {
    cfg.validate()?;
    let ranges = gram_ranges(a, psi, cfg)?;
    if let Some(b) = b {
        // The second operator must live on the same contour.
        contour_angle(b, psi.sup_angle())?;
        if b.omega_est() >= ranges.theta {
            return Err(Error::InvalidParam("adjoint type angle exceeds the contour angle".into()));
        }
    }
    let n = a.dim();
    let mu = calculus_shift(a);
    let start = match cfg.n0 {
        Some(n0) => RadialGrid::new(ranges.t.0, ranges.t.1, n0)?,
        None => RadialGrid::with_density(ranges.t.0, ranges.t.1, crate::quadrature::GL_ORDER as f64)?,
    };
    let mut last_contour = None;
    let conv: Converged<CMatrix> = adaptive(cfg, start, |tg| {
        let zg = RadialGrid::with_density(ranges.z.0, ranges.z.1, tg.density())?;
        let contour = Contour::new(ranges.theta, zg)?;
        let ta = ResolventTable::build(a.matrix(), &contour, mu)?;
        let sa = stack_kernels(&ta, n);
        let sweep = match b {
            None => pairing_sweep(None, (&ta, &sa), psi, tg, n),
            Some(b) => {
                let tb = ResolventTable::build(b.matrix(), &contour, mu)?;
                let sb = stack_kernels(&tb, n);
                pairing_sweep(Some((&tb, &sb)), (&ta, &sa), psi, tg, n)
            }
        };
        last_contour = Some(contour);
        Ok(sweep)
    })?;
    Ok(PairingResult {
        value: conv.value,
        t_grid: conv.grid,
        contour: last_contour.expect("at least one sweep"),
    })
}

/// G = ∫ ψ_t(A)*ψ_t(A) dt/t, with every ψ_t(A) drawn from one shared resolvent table.
pub fn gram_operator(a: &SectorialOperator, psi: &ScalarSymbol, cfg: &QuadConfig) -> Result<GramOperator> {
    let r = pairing_adaptive(a, None, psi, cfg)?;
    Ok(GramOperator {
        matrix: hermitian_part(&r.value),
        psi_name: psi.name().to_string(),
        t_grid: r.t_grid,
        contour: r.contour,
    })
}

/// Gram matrix on fixed t- and contour grids, no adaptivity.
pub fn gram_on_grids(a: &SectorialOperator, psi: &ScalarSymbol, t_grid: &RadialGrid, contour: &Contour) -> Result<CMatrix> {
    let n = a.dim();
    let table = ResolventTable::build(a.matrix(), contour, calculus_shift(a))?;
    let st = stack_kernels(&table, n);
    Ok(hermitian_part(&pairing_sweep(None, (&table, &st), psi, t_grid, n).value))
}

/// P = ∫ ψ_t(A*)*ψ_t(A) dt/t, so that ∫⟨ψ_t(A)x, ψ_t(A*)y⟩dt/t = y*Px.
pub fn pairing_operator(a: &SectorialOperator, psi: &ScalarSymbol, cfg: &QuadConfig) -> Result<CMatrix> {
    let adj = a.adjoint()?;
    Ok(pairing_adaptive(a, Some(&adj), psi, cfg)?.value)
}

/// √(x*Gx), clamped at zero.
pub fn square_norm(g: &GramOperator, x: &CVector) -> f64 {
    quad_form(&g.matrix, x).max(0.0).sqrt()
}

fn quad_form(g: &CMatrix, x: &CVector) -> f64 {
    (x.adjoint() * g * x)[(0, 0)].re
}

/// Relative floor below which the smallest Gram eigenvalue counts as zero.
const GRAM_DEGENERACY: f64 = 1e-12;

pub fn equivalence_constants(g: &GramOperator) -> Result<GapReport> {
    gap_of(&g.matrix)
}

pub fn gap_of(g: &CMatrix) -> Result<GapReport> {
    let (vals, _) = hermitian_eigen(g);
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    if !(lo > GRAM_DEGENERACY * hi.abs()) {
        return Err(Error::DegenerateGram(lo));
    }
    let m = lo.sqrt();
    let big_m = hi.sqrt();
    Ok(GapReport {
        m,
        big_m,
        kappa: big_m / m,
    })
}

/// Denser quadrature settings for refinement checks.
pub fn refined_config(cfg: &QuadConfig) -> QuadConfig {
    QuadConfig {
        tol: (cfg.tol * 0.1).max(1e-13),
        ..cfg.clone()
    }
}

/// Equivalence of the square-function norms built from two generators.
pub fn psi_independence_check(
    a: &SectorialOperator,
    psi1: &ScalarSymbol,
    psi2: &ScalarSymbol,
    cfg: &QuadConfig,
) -> Result<Report> {
    let g1 = gram_operator(a, psi1, cfg)?;
    let g2 = gram_operator(a, psi2, cfg)?;
    let (lo, hi) = pencil_extremes(&g1.matrix, &g2.matrix)?;
    let kappa = (hi / lo).sqrt();
    let fine = refined_config(cfg);
    let f1 = gram_operator(a, psi1, &fine)?;
    let f2 = gram_operator(a, psi2, &fine)?;
    let (flo, fhi) = pencil_extremes(&f1.matrix, &f2.matrix)?;
    let fkappa = (fhi / flo).sqrt();
    let drift = (fkappa - kappa).abs() / fkappa;
    let tol = 1e-6;
    Ok(Report::new("psi_independence", a.label(), tol, kappa.is_finite() && drift <= tol)
        .param("psi1", psi1.name())
        .param("psi2", psi2.name())
        .constant("ratio_min", lo)
        .constant("ratio_max", hi)
        .constant("kappa", fkappa)
        .residual("refinement_drift", drift)
        .with_grid(&f1.t_grid))
}

/// ∫‖√A(r + A)⁻¹x‖² dr, the boundary L² norm of the observation map on the negative axis.
pub fn observation_l2_sq(a: &SectorialOperator, x: &CVector, cfg: &QuadConfig) -> Result<f64> {
    let sqrt_a = fractional_power(a, 0.5, cfg)?;
    let y = &sqrt_a * x;
    let n = a.dim();
    let m = a.matrix().clone();
    let f = move |r: f64| -> f64 {
        match solve_vec(&(&m + identity(n) * c(r, 0.0)), &y) {
            Ok(v) => r * v.norm_squared(),
            Err(_) => f64::INFINITY,
        }
    };
    half_line_integral(a, cfg, 0.0, &f)
}

/// ∫ f(r) dr/r over (0, ∞) with the spectral annulus as the starting range.
fn half_line_integral(a: &SectorialOperator, cfg: &QuadConfig, shift: f64, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<f64> {
    let (lo, hi) = a.spectral_radii();
    let (mut u0, mut u1) = cfg.range(lo, hi);
    u0 += shift;
    u1 += shift;
    if cfg.extend_tails {
        (u0, u1) = extend_range(u0, u1, cfg.tail_tol(), cfg.max_width, cfg.u_min.is_none(), cfg.u_max.is_none(), |u| {
            f(u.exp()).abs()
        });
    }
    let start = cfg.initial_grid(u0, u1)?;
    let conv = adaptive(cfg, start, |g| {
        let vals: Vec<f64> = g.radii().par_iter().map(|&r| f(r)).collect();
        let mut v = 0.0;
        let mut s = 0.0;
        for (fv, w) in vals.iter().zip(g.weights()) {
            v += w * fv;
            s += w * fv.abs();
        }
        Ok(Sweep { value: v, scale: s })
    })?;
    Ok(conv.value)
}

/// ∫‖ψ_t(A)x‖²dt/t against ∫‖√A(−r − A)⁻¹x‖²dr with ψ(z) = √z/(1+z).
pub fn mcintosh_identity_check(a: &SectorialOperator, x: &CVector, cfg: &QuadConfig) -> Result<Report> {
    Ok(mcintosh_identity_batch(a, std::slice::from_ref(x), cfg)?.remove(0))
}

/// One report per vector, all sharing a single Gram matrix.
pub fn mcintosh_identity_batch(a: &SectorialOperator, xs: &[CVector], cfg: &QuadConfig) -> Result<Vec<Report>> {
    for x in xs {
        check_dim(a, x)?;
    }
    let g = gram_operator(a, &ScalarSymbol::sqrt_over_1p(), cfg)?;
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        let lhs = quad_form(&g.matrix, x);
        let rhs = observation_l2_sq(a, x, cfg)?;
        let diff = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { lhs.abs() };
        let tol = 1e-4;
        out.push(
            Report::new("mcintosh_identity", a.label(), tol, diff <= tol)
                .constant("square_norm_sq", lhs)
                .constant("boundary_l2_sq", rhs)
                .residual("relative_difference", diff)
                .with_grid(&g.t_grid),
        );
    }
    Ok(out)
}

/// Deterministic unit vectors: the canonical basis plus `count` seeded random ones.
pub fn sample_vectors(n: usize, count: usize, seed: u64) -> Vec<CVector> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<CVector> = (0..n)
        .map(|k| {
            let mut e = CVector::zeros(n);
            e[k] = c(1.0, 0.0);
            e
        })
        .collect();
    for _ in 0..count {
        let v = CVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im)
        });
        let nv = v.norm();
        out.push(v / c(nv, 0.0));
    }
    out
}

/// Two-sided constants of ‖Λ^{−r}x‖ ≲ ‖x‖_A ≲ ‖Λ^r x‖:
/// `c_lower` = sup ‖Λ^{−r}x‖/‖x‖_A and `c_upper` = sup ‖x‖_A/‖Λ^r x‖.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogGapConstants {
    pub c_lower: f64,
    pub c_upper: f64,
}

pub fn log_gap_constants(g: &CMatrix, l: &CMatrix) -> Result<LogGapConstants> {
    let ll = l.adjoint() * l;
    let (_, lower_sq) = pencil_extremes(&ll, g)?;
    let (vals, _) = hermitian_eigen(&(l.adjoint() * g * l));
    Ok(LogGapConstants {
        c_lower: lower_sq.max(0.0).sqrt(),
        c_upper: vals[vals.len() - 1].max(0.0).sqrt(),
    })
}

fn check_branch(k: i32, r: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParam("branch k = 0 is excluded".into()));
    }
    if !(r > 0.5) {
        return Err(Error::InvalidParam(format!("r must exceed 1/2 for the logarithmic gap, got {r}")));
    }
    Ok(())
}

/// Operator-level and sampled log-gap constants, plus their drift when the
/// quadrature is refined.
pub fn log_gap_check(
    a: &SectorialOperator,
    k: i32,
    r: f64,
    samples: &[CVector],
    cfg: &QuadConfig,
) -> Result<Report> {
    Ok(log_gap_batch(a, &[(k, r)], samples, cfg)?.remove(0))
}

/// [`log_gap_check`] for several (k, r), sharing the Gram matrices.
pub fn log_gap_batch(a: &SectorialOperator, branches: &[(i32, f64)], samples: &[CVector], cfg: &QuadConfig) -> Result<Vec<Report>> {
    for &(k, r) in branches {
        check_branch(k, r)?;
    }
    for x in samples {
        check_dim(a, x)?;
    }
    let psi = ScalarSymbol::sqrt_over_1p();
    let g = gram_operator(a, &psi, cfg)?;
    let fine_cfg = refined_config(cfg);
    let gf = gram_operator(a, &psi, &fine_cfg)?;
    let kappa = gap_of(&gf.matrix).map(|g| g.kappa).unwrap_or(f64::INFINITY);
    let mut out = Vec::with_capacity(branches.len());
    for &(k, r) in branches {
        let l = log_power_matrix(a, k, r, cfg)?;
        let base = log_gap_constants(&g.matrix, &l)?;
        let lf = log_power_matrix(a, k, r, &fine_cfg)?;
        let fine = log_gap_constants(&gf.matrix, &lf)?;
        let drift = ((fine.c_lower - base.c_lower).abs() / fine.c_lower)
            .max((fine.c_upper - base.c_upper).abs() / fine.c_upper);

        let mut emp_lower = 0.0f64;
        let mut emp_upper = 0.0f64;
        for x in samples {
            let xa = quad_form(&gf.matrix, x).max(0.0).sqrt();
            let lx = &lf * x;
            if xa > 0.0 {
                emp_lower = emp_lower.max(lx.norm() / xa);
            }
            // y = Λ^r x ranges over everything as x does, so sample x = Λ^{−r}y.
            let ya = quad_form(&gf.matrix, &lx).max(0.0).sqrt();
            emp_upper = emp_upper.max(ya / x.norm());
        }
        let tol = 1e-2;
        let finite = fine.c_lower.is_finite() && fine.c_upper.is_finite();
        let consistent = emp_lower <= fine.c_lower * (1.0 + 1e-8) && emp_upper <= fine.c_upper * (1.0 + 1e-8);
        out.push(
            Report::new("log_gap", a.label(), tol, finite && consistent && drift <= tol)
                .param("k", k)
                .param("r", r)
                .param("samples", samples.len())
                .constant("c_lower", fine.c_lower)
                .constant("c_upper", fine.c_upper)
                .constant("c_lower_sampled", emp_lower)
                .constant("c_upper_sampled", emp_upper)
                .constant("kappa", kappa)
                .residual("refinement_drift", drift)
                .with_grid(&gf.t_grid),
        );
    }
    Ok(out)
}

/// Observation operator used by the admissibility integrals.
pub fn admissibility_observer(a: &SectorialOperator, weight: Option<(i32, f64)>, cfg: &QuadConfig) -> Result<CMatrix> {
    let sqrt_a = fractional_power(a, 0.5, cfg)?;
    match weight {
        None => Ok(sqrt_a),
        Some((k, r)) => {
            if k == 0 {
                return Err(Error::InvalidParam("branch k = 0 is excluded".into()));
            }
            if !(r > 0.0) {
                return Err(Error::InvalidParam(format!("weight exponent must be positive, got {r}")));
            }
            Ok(log_power_matrix(a, k, r, cfg)? * sqrt_a)
        }
    }
}

fn check_semigroup(a: &SectorialOperator) -> Result<()> {
    if !(a.omega_est() < PI / 2.0) {
        return Err(Error::InvalidParam(format!(
            "type angle {:.6} must be below π/2 for e^{{−tA}}",
            a.omega_est()
        )));
    }
    Ok(())
}

/// ∫₀^∞ ‖C e^{−tA}x‖² dt with C = √A or Λ_k(A)^{−r}√A.
pub fn admissibility_integral(
    a: &SectorialOperator,
    weight: Option<(i32, f64)>,
    x: &CVector,
    cfg: &QuadConfig,
) -> Result<f64> {
    check_semigroup(a)?;
    check_dim(a, x)?;
    let cm = admissibility_observer(a, weight, cfg)?;
    let m = a.matrix().clone();
    let x = x.clone();
    let f = move |t: f64| -> f64 {
        let e = (&m * c(-t, 0.0)).exp();
        t * (&cm * (e * &x)).norm_squared()
    };
    // The integrand lives on t ~ 1/|λ|; start the range there.
    let (lo, hi) = a.spectral_radii();
    let shift = -(lo * hi).ln();
    half_line_integral(a, cfg, shift, &f)
}

/// Q = ∫₀^∞ e^{−tA*}C*C e^{−tA} dt by quadrature; λ_max(Q) is the admissibility constant.
pub fn admissibility_gramian(a: &SectorialOperator, weight: Option<(i32, f64)>, cfg: &QuadConfig) -> Result<Converged<CMatrix>> {
    check_semigroup(a)?;
    let cm = admissibility_observer(a, weight, cfg)?;
    let cc = cm.adjoint() * &cm;
    let m = a.matrix().clone();
    let (lo, hi) = a.spectral_radii();
    let shift = -(lo * hi).ln();
    let integrand = |t: f64| -> CMatrix {
        let e = (&m * c(-t, 0.0)).exp();
        e.adjoint() * &cc * e * c(t, 0.0)
    };
    let (mut u0, mut u1) = cfg.range(lo, hi);
    u0 += shift;
    u1 += shift;
    if cfg.extend_tails {
        (u0, u1) = extend_range(u0, u1, cfg.tail_tol(), cfg.max_width, cfg.u_min.is_none(), cfg.u_max.is_none(), |u| {
            crate::linalg::frobenius(&integrand(u.exp()))
        });
    }
    let start = cfg.initial_grid(u0, u1)?;
    let n = a.dim();
    adaptive(cfg, start, |g| {
        let parts: Vec<CMatrix> = g
            .radii()
            .par_iter()
            .zip(g.weights().par_iter())
            .map(|(&t, &w)| integrand(t) * c(w, 0.0))
            .collect();
        let mut q = CMatrix::zeros(n, n);
        let mut s = 0.0;
        for p in parts {
            s += crate::linalg::frobenius(&p);
            q += p;
        }
        Ok(Sweep { value: hermitian_part(&q), scale: s })
    })
}

/// K = λ_max(Q) from quadrature against the Lyapunov solution, its drift under
/// refinement, and ∫‖Ce^{−tA}x‖²dt ≤ K‖x‖² on the samples.
pub fn admissibility_check(
    a: &SectorialOperator,
    weight: Option<(i32, f64)>,
    samples: &[CVector],
    cfg: &QuadConfig,
) -> Result<Report> {
    let q = admissibility_gramian(a, weight, cfg)?;
    let qf = admissibility_gramian(a, weight, &refined_config(cfg))?;
    let n = a.dim();
    let k = hermitian_eigen(&q.value).0[n - 1];
    let kf = hermitian_eigen(&qf.value).0[n - 1];
    let drift = (k - kf).abs() / kf;
    let cm = admissibility_observer(a, weight, cfg)?;
    let oracle = rel_diff(&qf.value, &lyapunov_gramian(a.matrix(), &cm)?);
    let mut ratio = 0.0f64;
    for x in samples {
        check_dim(a, x)?;
        let v = admissibility_integral(a, weight, x, cfg)?;
        ratio = ratio.max(v / (kf * x.norm_squared()));
    }
    let tol = 1e-6;
    let mut rep = Report::new("admissibility", a.label(), tol, drift <= tol && oracle <= tol && ratio <= 1.0 + 1e-8)
        .param("samples", samples.len())
        .constant("K", kf)
        .constant("max_integral_over_bound", ratio)
        .residual("refinement_drift", drift)
        .residual("lyapunov_difference", oracle)
        .with_grid(&qf.grid);
    if let Some((k, r)) = weight {
        rep = rep.param("k", k).param("r", r);
    }
    Ok(rep)
}

/// Solve A*Q + QA = C*C through the Kronecker form; the exact observability Gramian.
pub fn lyapunov_gramian(a: &CMatrix, cm: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let rhs = cm.adjoint() * cm;
    let ah = a.adjoint();
    let id = identity(n);
    // vec(A*Q) = (I ⊗ A*) vec Q, vec(QA) = (Aᵀ ⊗ I) vec Q, column-major vec.
    let big = id.kronecker(&ah) + a.transpose().kronecker(&id);
    let v = CMatrix::from_column_slice(n * n, 1, rhs.as_slice());
    let q = solve(&big, &v)?;
    Ok(hermitian_part(&CMatrix::from_column_slice(n, n, q.as_slice())))
}

/// ⟨x, y⟩ in the H_A/H_{A*} pairing against ⟨𝒪x, 𝒪_*y⟩ on the negative axis.
pub fn duality_check(a: &SectorialOperator, x: &CVector, y: &CVector, cfg: &QuadConfig) -> Result<Report> {
    Ok(duality_batch(a, &[(x.clone(), y.clone())], cfg)?.remove(0))
}

/// [`duality_check`] for several (x, y) pairs sharing one pairing operator.
pub fn duality_batch(a: &SectorialOperator, pairs: &[(CVector, CVector)], cfg: &QuadConfig) -> Result<Vec<Report>> {
    for (x, y) in pairs {
        check_dim(a, x)?;
        check_dim(a, y)?;
    }
    let psi = ScalarSymbol::sqrt_over_1p();
    let p = pairing_operator(a, &psi, cfg)?;
    let g = gram_operator(a, &psi, cfg)?;
    let adj = a.adjoint()?;
    let sa = fractional_power(a, 0.5, cfg)?;
    let sb = fractional_power(&adj, 0.5, cfg)?;
    let n = a.dim();
    let mut out = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let lhs = (y.adjoint() * &p * x)[(0, 0)];
        let (ax, by) = (&sa * x, &sb * y);
        let m = a.matrix().clone();
        let mh = adj.matrix().clone();
        let ev = |r: f64| -> C64 {
            let u = solve_vec(&(&m + identity(n) * c(r, 0.0)), &ax);
            let v = solve_vec(&(&mh + identity(n) * c(r, 0.0)), &by);
            match (u, v) {
                (Ok(u), Ok(v)) => (v.adjoint() * u)[(0, 0)] * r,
                _ => c(f64::NAN, f64::NAN),
            }
        };
        let re = half_line_integral(a, cfg, 0.0, &|r| ev(r).re)?;
        let im = half_line_integral(a, cfg, 0.0, &|r| ev(r).im)?;
        let rhs = c(re, im);
        let scale = x.norm() * y.norm();
        let denom = if rhs.norm() >= 1e-3 * scale { rhs.norm() } else { scale };
        let diff = if denom > 0.0 { (lhs - rhs).norm() / denom } else { 0.0 };
        let gram_pairing = (y.adjoint() * &g.matrix * x)[(0, 0)];
        let tol = 1e-4;
        out.push(
            Report::new("duality", a.label(), tol, diff <= tol)
                .constant("lhs_re", lhs.re)
                .constant("lhs_im", lhs.im)
                .constant("rhs_re", rhs.re)
                .constant("rhs_im", rhs.im)
                .constant("self_gram_pairing_re", gram_pairing.re)
                .constant("self_gram_pairing_im", gram_pairing.im)
                .residual("relative_difference", diff)
                .with_grid(&g.t_grid),
        );
    }
    Ok(out)
}
