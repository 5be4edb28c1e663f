//! Scalar symbols fed to the functional calculus, their registry, Ψ-class
//! norms and the scalar extension checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c, C64, I};
use crate::quadrature::RadialGrid;
use crate::report::Report;

pub type ScalarFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Principal logarithm with argument in [−π, π).
pub fn log_principal(z: C64) -> C64 {
    let mut arg = z.arg();
    if arg >= PI {
        arg -= 2.0 * PI;
    }
    c(z.norm().ln(), arg)
}

/// Principal power z^a = exp(a Log z); 0^a = 0 for Re a > 0.
pub fn pow_principal(z: C64, a: C64) -> C64 {
    if z == C64::new(0.0, 0.0) {
        return if a.re > 0.0 { C64::new(0.0, 0.0) } else { C64::new(f64::NAN, f64::NAN) };
    }
    (a * log_principal(z)).exp()
}

pub fn pow_real(z: C64, a: f64) -> C64 {
    pow_principal(z, c(a, 0.0))
}

/// A scalar analytic function on a sector, with its declared Ψ-class exponent.
#[derive(Clone)]
pub struct ScalarSymbol {
    name: String,
    f: ScalarFn,
    psi_exponent: Option<f64>,
    sup_angle: f64,
}

impl fmt::Debug for ScalarSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarSymbol")
            .field("name", &self.name)
            .field("psi_exponent", &self.psi_exponent)
            .field("sup_angle", &self.sup_angle)
            .finish()
    }
}

impl ScalarSymbol {
    pub fn new<F>(name: impl Into<String>, f: F, psi_exponent: Option<f64>, sup_angle: f64) -> Self
    where
        F: Fn(C64) -> C64 + Send + Sync + 'static,
    {
        ScalarSymbol {
            name: name.into(),
            f: Arc::new(f),
            psi_exponent,
            sup_angle,
        }
    }

    #[inline]
    pub fn eval(&self, z: C64) -> C64 {
        (self.f)(z)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn psi_exponent(&self) -> Option<f64> {
        self.psi_exponent
    }

    pub fn sup_angle(&self) -> f64 {
        self.sup_angle
    }

    pub fn is_psi(&self) -> bool {
        self.psi_exponent.is_some()
    }

    /// √z/(1+z), the default square-function generator.
    pub fn sqrt_over_1p() -> Self {
        Self::new("sqrt_over_1p", |z| pow_real(z, 0.5) / (1.0 + z), Some(0.5), PI)
    }

    /// z/(1+z²); poles at ±i limit it to the right half-plane.
    pub fn z_over_1pz2() -> Self {
        Self::new("z_over_1pz2", |z| z / (1.0 + z * z), Some(1.0), PI / 2.0)
    }

    /// φ(z) = z/(1+z)².
    pub fn phi() -> Self {
        Self::new("phi", phi, Some(1.0), PI)
    }

    pub fn z_pow(alpha: f64) -> Self {
        Self::new(format!("z_pow:{alpha}"), move |z| pow_real(z, alpha), None, PI)
    }

    pub fn log() -> Self {
        Self::new("log", log_principal, None, PI)
    }

    /// z^{is}.
    pub fn z_ipow(s: f64) -> Self {
        Self::new(format!("z_ipow:{s}"), move |z| pow_principal(z, c(0.0, s)), None, PI)
    }

    /// √(2z)·e^{−z}.
    pub fn sqrt2z_exp() -> Self {
        Self::new(
            "sqrt2z_exp",
            |z| pow_real(2.0 * z, 0.5) * (-z).exp(),
            Some(0.5),
            PI / 2.0,
        )
    }

    /// Λ_k(z)^{−r} with Λ_k(z) = Log z + 2kπi.
    pub fn log_power(k: i32, r: f64) -> Self {
        let shift = c(0.0, 2.0 * PI * k as f64);
        Self::new(
            format!("log_power:{k},{r}"),
            move |z| pow_real(log_principal(z) + shift, -r),
            None,
            PI,
        )
    }

    pub fn constant(value: C64) -> Self {
        Self::new(format!("const:{value}"), move |_| value, None, PI)
    }

    /// Pointwise product; the Ψ exponent is the sum when either factor is bounded
    /// and the other is Ψ-class, which is all the calculus needs.
    pub fn times(&self, other: &ScalarSymbol) -> ScalarSymbol {
        let (f, g) = (self.f.clone(), other.f.clone());
        let exponent = match (self.psi_exponent, other.psi_exponent) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        ScalarSymbol {
            name: format!("{}*{}", self.name, other.name),
            f: Arc::new(move |z| f(z) * g(z)),
            psi_exponent: exponent,
            sup_angle: self.sup_angle.min(other.sup_angle),
        }
    }

    /// ψ_t(z) = ψ(tz).
    pub fn dilate(&self, t: f64) -> ScalarSymbol {
        let f = self.f.clone();
        ScalarSymbol {
            name: format!("{}(t={t})", self.name),
            f: Arc::new(move |z| f(t * z)),
            psi_exponent: self.psi_exponent,
            sup_angle: self.sup_angle,
        }
    }

    /// Look up a registry name such as `z_pow:0.5` or `z_ipow:-1.5`.
    pub fn from_name(name: &str) -> Result<Self> {
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad numeric argument in symbol '{name}'")))
        };
        match name.split_once(':') {
            None => match name {
                "sqrt_over_1p" => Ok(Self::sqrt_over_1p()),
                "z_over_1pz2" => Ok(Self::z_over_1pz2()),
                "phi" => Ok(Self::phi()),
                "log" => Ok(Self::log()),
                "sqrt2z_exp" => Ok(Self::sqrt2z_exp()),
                _ => Err(Error::Parse(format!("unknown symbol '{name}'"))),
            },
            Some(("z_pow", a)) => Ok(Self::z_pow(parse(a)?)),
            Some(("z_ipow", s)) => Ok(Self::z_ipow(parse(s)?)),
            Some(("log_power", rest)) => {
                let (k, r) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("expected log_power:k,r in '{name}'")))?;
                let k = k
                    .trim()
                    .parse::<i32>()
                    .map_err(|_| Error::Parse(format!("bad branch index in '{name}'")))?;
                Ok(Self::log_power(k, parse(r)?))
            }
            _ => Err(Error::Parse(format!("unknown symbol '{name}'"))),
        }
    }
}

pub fn phi(z: C64) -> C64 {
    z / ((1.0 + z) * (1.0 + z))
}

/// Registry names accepted by [`ScalarSymbol::from_name`] without arguments.
pub const REGISTRY: &[&str] = &["sqrt_over_1p", "z_over_1pz2", "phi", "z_pow:{alpha}", "log", "z_ipow:{s}"];

fn psi_weight(w: C64, s: f64) -> f64 {
    let r = w.norm();
    (1.0 + r.powf(2.0 * s)) / r.powf(s)
}

/// Golden-section refinement of a maximum of `f` on [a, b].
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = f1.max(f2);
    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
        best = best.max(f1).max(f2);
    }
    best
}

/// Sup of `h(u)` over the log nodes with a golden-section polish around the best node.
fn scan_sup<F: Fn(f64) -> f64>(us: &[f64], h: F) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for (k, &u) in us.iter().enumerate() {
        let v = h(u);
        if v.is_nan() {
            continue;
        }
        if v > best {
            best = v;
            arg = k;
        }
    }
    if !best.is_finite() || us.len() < 3 {
        return best;
    }
    let a = us[arg.saturating_sub(1)];
    let b = us[(arg + 1).min(us.len() - 1)];
    best.max(golden_max(&h, a, b, 60))
}

/// Numeric ‖f‖_{Ψ_s} = sup (1+|w|^{2s})/|w|^s·|f(w)| over the rays arg w = ±θ and w > 0.
/// Returns +∞ when widening the grid keeps raising the sup.
pub fn psi_class_norm(f: &ScalarSymbol, s: f64, theta: f64, grid: &RadialGrid) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParam(format!("Ψ exponent must be positive, got {s}")));
    }
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::InvalidParam(format!("sector angle must lie in (0, π], got {theta}")));
    }
    let sup_on = |g: &RadialGrid| -> f64 {
        let mut best = 0.0f64;
        for dir in [c(0.0, theta).exp(), c(0.0, -theta).exp(), c(1.0, 0.0)] {
            let v = scan_sup(g.log_nodes(), |u| {
                let w = dir * u.exp();
                psi_weight(w, s) * f.eval(w).norm()
            });
            if v.is_nan() {
                return f64::NAN;
            }
            best = best.max(v);
        }
        best
    };
    let base = sup_on(grid);
    let wide = grid.with_range(grid.u_min() - 8.0, grid.u_max() + 8.0)?;
    let widened = sup_on(&wide);
    if !base.is_finite() || !widened.is_finite() || widened > 1.5 * base.max(f64::MIN_POSITIVE) && widened > 1e-300 {
        return Ok(f64::INFINITY);
    }
    Ok(widened)
}

/// γ_{α,z}(w) = α(w^α + z^α)/(w^α − z^α).
pub fn gamma_alpha(alpha: f64, z: C64, w: C64) -> C64 {
    let wa = pow_real(w, alpha);
    let za = pow_real(z, alpha);
    alpha * (wa + za) / (wa - za)
}

/// η_z(w) = γ_{α,z}(w) − γ_{1,z}(w) + (1−α)(w−1)/(w+1).
pub fn eta(alpha: f64, z: C64, w: C64) -> C64 {
    gamma_alpha(alpha, z, w) - gamma_alpha(1.0, z, w) + (1.0 - alpha) * (w - 1.0) / (w + 1.0)
}

/// Relative closeness below which w^α ≈ z^α and the node is skipped.
pub const ETA_POLE_TOL: f64 = 1e-8;

/// Ψ_β norm of η_z on a grid: (norm, skipped node count).
fn eta_norm(alpha: f64, beta: f64, mu: f64, z: C64, grid: &RadialGrid) -> (f64, usize) {
    let za = pow_real(z, alpha);
    let mut best = 0.0f64;
    let mut skipped = 0usize;
    for dir in [c(0.0, mu).exp(), c(0.0, -mu).exp(), c(1.0, 0.0)] {
        for &r in grid.radii() {
            let w = dir * r;
            let wa = pow_real(w, alpha);
            let near = |p: C64, q: C64| (p - q).norm() < ETA_POLE_TOL * p.norm().max(q.norm());
            if near(wa, za) || near(w, z) {
                skipped += 1;
                continue;
            }
            let v = psi_weight(w, beta) * eta(alpha, z, w).norm();
            if v.is_finite() {
                best = best.max(v);
            }
        }
    }
    (best, skipped)
}

/// Empirical constant C in ‖η_z‖_{Ψ_β} ≤ C(|z|^α + |z|^{−α}) over the sample points.
pub fn eta_extension_check(alpha: f64, mu: f64, z_samples: &[C64], w_grid: &RadialGrid) -> Result<Report> {
    if !(alpha > 0.0) || !(mu > 0.0 && mu < PI) || !(alpha * mu < PI) {
        return Err(Error::InvalidParam(format!(
            "need α > 0, 0 < μ < π and αμ < π, got α = {alpha}, μ = {mu}"
        )));
    }
    for z in z_samples {
        if *z == c(0.0, 0.0) || z.arg().abs() >= mu {
            return Err(Error::InvalidParam(format!("sample {z} is not inside the open sector of angle {mu}")));
        }
    }
    let beta = alpha.min(0.5);
    let fine = w_grid.refined();
    let mut max_ratio = 0.0f64;
    let mut max_ratio_fine = 0.0f64;
    let mut max_norm = 0.0f64;
    let mut skipped = 0usize;
    for &z in z_samples {
        let scale = z.norm().powf(alpha) + z.norm().powf(-alpha);
        let (n0, s0) = eta_norm(alpha, beta, mu, z, w_grid);
        let (n1, s1) = eta_norm(alpha, beta, mu, z, &fine);
        skipped += s0 + s1;
        max_norm = max_norm.max(n1);
        max_ratio = max_ratio.max(n0 / scale);
        max_ratio_fine = max_ratio_fine.max(n1 / scale);
    }
    let drift = if max_ratio_fine > 0.0 {
        (max_ratio_fine - max_ratio).abs() / max_ratio_fine
    } else {
        0.0
    };

    // Residue of γ_{α,z} at w = z is 2z.
    let mut residue_err = 0.0f64;
    for &z in z_samples {
        let h = 1e-7 * z.norm();
        let mut est = c(0.0, 0.0);
        for dir in [c(1.0, 0.0), c(-1.0, 0.0), I, -I] {
            let w = z + h * dir;
            est += (w - z) * gamma_alpha(alpha, z, w);
        }
        est /= 4.0;
        residue_err = residue_err.max((est - 2.0 * z).norm() / (2.0 * z.norm()));
    }

    let tol = 1e-2;
    let mut constants = BTreeMap::new();
    constants.insert("beta".into(), beta);
    constants.insert("empirical_c".into(), max_ratio_fine);
    constants.insert("max_psi_beta_norm".into(), max_norm);
    constants.insert("skipped_nodes".into(), skipped as f64);
    let mut residuals = BTreeMap::new();
    residuals.insert("refinement_drift".into(), drift);
    residuals.insert("residue_relative_error".into(), residue_err);
    let pass = max_ratio_fine.is_finite() && drift <= tol && residue_err <= 1e-6;
    let mut rep = Report::new("eta_extension", "scalar", tol, pass);
    rep.params.insert("alpha".into(), alpha.into());
    rep.params.insert("mu".into(), mu.into());
    rep.params.insert("samples".into(), (z_samples.len() as f64).into());
    rep.residuals = residuals;
    rep.constants = constants;
    rep.grid = Some(w_grid.clone().into());
    if skipped > 0 {
        rep.notes.push(format!("{skipped} nodes skipped near w^α = z^α"));
    }
    Ok(rep)
}
