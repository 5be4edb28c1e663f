//! Composite Gauss–Legendre quadrature in u = log r and the adaptive driver.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMatrix, CVector, C64};

/// Nodes per Gauss–Legendre panel.
pub const GL_ORDER: usize = 16;

fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let order = NonZeroUsize::new(GL_ORDER).expect("nonzero order");
        let mut pairs = GaussLegendre::new(order).as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pairs
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
struct GridParams {
    u_min: f64,
    u_max: f64,
    n_nodes: usize,
}

/// Quadrature grid for ∫ f(r) dr/r = ∫ f(e^u) du over [u_min, u_max].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct RadialGrid {
    u_min: f64,
    u_max: f64,
    n_nodes: usize,
    log_nodes: Vec<f64>,
    radii: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<GridParams> for RadialGrid {
    type Error = Error;
    fn try_from(p: GridParams) -> Result<Self> {
        RadialGrid::new(p.u_min, p.u_max, p.n_nodes)
    }
}

impl From<RadialGrid> for GridParams {
    fn from(g: RadialGrid) -> Self {
        GridParams {
            u_min: g.u_min,
            u_max: g.u_max,
            n_nodes: g.n_nodes,
        }
    }
}

impl RadialGrid {
    /// `n_nodes` is rounded up to a whole number of panels.
    pub fn new(u_min: f64, u_max: f64, n_nodes: usize) -> Result<Self> {
        if !(u_min.is_finite() && u_max.is_finite() && u_min < u_max) {
            return Err(Error::InvalidParam(format!(
                "radial grid needs u_min < u_max, got [{u_min}, {u_max}]"
            )));
        }
        let panels = n_nodes.div_ceil(GL_ORDER).max(1);
        let h = (u_max - u_min) / panels as f64;
        let rule = gl_rule();
        let mut log_nodes = Vec::with_capacity(panels * GL_ORDER);
        let mut weights = Vec::with_capacity(panels * GL_ORDER);
        for p in 0..panels {
            let a = u_min + p as f64 * h;
            for &(x, w) in rule {
                log_nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        let radii = log_nodes.iter().map(|u| u.exp()).collect();
        Ok(RadialGrid {
            u_min,
            u_max,
            n_nodes: panels * GL_ORDER,
            log_nodes,
            radii,
            weights,
        })
    }

    /// Grid with roughly `per_unit` nodes per unit of log-radius.
    pub fn with_density(u_min: f64, u_max: f64, per_unit: f64) -> Result<Self> {
        let n = ((u_max - u_min) * per_unit).ceil().max(GL_ORDER as f64) as usize;
        Self::new(u_min, u_max, n)
    }

    pub fn refined(&self) -> Self {
        Self::new(self.u_min, self.u_max, 2 * self.n_nodes).expect("valid grid")
    }

    pub fn with_range(&self, u_min: f64, u_max: f64) -> Result<Self> {
        let density = self.density();
        Self::with_density(u_min, u_max, density)
    }

    pub fn density(&self) -> f64 {
        self.n_nodes as f64 / (self.u_max - self.u_min)
    }

    pub fn u_min(&self) -> f64 {
        self.u_min
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn log_nodes(&self) -> &[f64] {
        &self.log_nodes
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫ f(r) dr/r over the grid range.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.radii
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * f(r))
            .sum()
    }
}

/// Quadrature settings shared by every contour and half-line integral.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct QuadConfig {
    /// Fixed lower end of the log-radius range; default is spectrum-based.
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    /// Initial node count; default is one panel per unit of log-radius.
    pub n0: Option<usize>,
    pub tol: f64,
    pub max_doublings: usize,
    /// Distance in u added beyond the spectral annulus on each side.
    pub margin: f64,
    /// Grow the range while the integrand is still visible at the ends.
    pub extend_tails: bool,
    pub max_width: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            u_min: None,
            u_max: None,
            n0: None,
            tol: 1e-9,
            max_doublings: 6,
            margin: 14.0,
            extend_tails: true,
            max_width: 400.0,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        QuadConfig {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParam(format!("tolerance must lie in (0,1), got {}", self.tol)));
        }
        if let (Some(a), Some(b)) = (self.u_min, self.u_max) {
            if !(a < b) {
                return Err(Error::InvalidParam(format!("quad.u_min {a} must be below quad.u_max {b}")));
            }
        }
        Ok(())
    }

    /// Log-radius range covering an annulus ρ_min ≤ |z| ≤ ρ_max plus the margin.
    pub fn range(&self, rho_min: f64, rho_max: f64) -> (f64, f64) {
        (
            self.u_min.unwrap_or(rho_min.ln() - self.margin),
            self.u_max.unwrap_or(rho_max.ln() + self.margin),
        )
    }

    pub fn initial_grid(&self, u_min: f64, u_max: f64) -> Result<RadialGrid> {
        match self.n0 {
            Some(n) => RadialGrid::new(u_min, u_max, n),
            None => RadialGrid::with_density(u_min, u_max, GL_ORDER as f64),
        }
    }

    /// Relative size of the integrand at the range ends that is still worth covering.
    pub fn tail_tol(&self) -> f64 {
        self.tol * 1e-2
    }

    /// Grid for the range [rho_min, rho_max] extended while `probe` is not negligible.
    pub fn grid_for<P: Fn(f64) -> f64>(&self, rho_min: f64, rho_max: f64, probe: P) -> Result<RadialGrid> {
        let (mut lo, mut hi) = self.range(rho_min, rho_max);
        if self.extend_tails {
            (lo, hi) = extend_range(
                lo,
                hi,
                self.tail_tol(),
                self.max_width,
                self.u_min.is_none(),
                self.u_max.is_none(),
                probe,
            );
        }
        self.initial_grid(lo, hi)
    }
}

/// Push the ends of [lo, hi] outward in steps of 4 while `probe(u)` exceeds
/// `tail_tol` times its peak on the range, without exceeding `max_width`.
pub fn extend_range<P: Fn(f64) -> f64>(
    mut lo: f64,
    mut hi: f64,
    tail_tol: f64,
    max_width: f64,
    move_lo: bool,
    move_hi: bool,
    probe: P,
) -> (f64, f64) {
    let steps = ((hi - lo) / 0.5).ceil().max(2.0) as usize;
    let mut peak = 0.0f64;
    for k in 0..=steps {
        let v = probe(lo + (hi - lo) * k as f64 / steps as f64);
        if v.is_finite() {
            peak = peak.max(v);
        }
    }
    if peak == 0.0 {
        return (lo, hi);
    }
    const STEP: f64 = 4.0;
    while move_lo && hi - lo + STEP <= max_width {
        let v = probe(lo);
        if !(v > tail_tol * peak) {
            break;
        }
        lo -= STEP;
    }
    while move_hi && hi - lo + STEP <= max_width {
        let v = probe(hi);
        if !(v > tail_tol * peak) {
            break;
        }
        hi += STEP;
    }
    (lo, hi)
}

/// Values the adaptive driver can compare between refinements.
pub trait Quantity: Clone {
    fn magnitude(&self) -> f64;
    fn distance(&self, other: &Self) -> f64;
}

impl Quantity for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl Quantity for C64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl Quantity for CMatrix {
    fn magnitude(&self) -> f64 {
        frobenius(self)
    }
    fn distance(&self, other: &Self) -> f64 {
        frobenius(&(self - other))
    }
}

impl Quantity for CVector {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl<T: Quantity> Quantity for Vec<T> {
    fn magnitude(&self) -> f64 {
        self.iter().map(|q| q.magnitude().powi(2)).sum::<f64>().sqrt()
    }
    fn distance(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl<A: Quantity, B: Quantity> Quantity for (A, B) {
    fn magnitude(&self) -> f64 {
        self.0.magnitude().hypot(self.1.magnitude())
    }
    fn distance(&self, other: &Self) -> f64 {
        self.0.distance(&other.0).hypot(self.1.distance(&other.1))
    }
}

/// One quadrature sweep: the value and an absolute scale (typically Σ|w f|)
/// used as a floor when the value itself cancels to near zero.
pub struct Sweep<T> {
    pub value: T,
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct Converged<T> {
    pub value: T,
    pub grid: RadialGrid,
    pub doublings: usize,
    /// Relative change between the last two refinements.
    pub change: f64,
}

/// Fraction of the integrand scale used as the reference when the value cancels.
const CANCELLATION_FLOOR: f64 = 1e-3;

/// Double the grid until successive values agree to `cfg.tol`.
pub fn adaptive<T, F>(cfg: &QuadConfig, start: RadialGrid, mut sweep: F) -> Result<Converged<T>>
where
    T: Quantity,
    F: FnMut(&RadialGrid) -> Result<Sweep<T>>,
{
    let mut grid = start;
    let mut prev = sweep(&grid)?;
    let mut last_change = f64::INFINITY;
    for d in 1..=cfg.max_doublings {
        let next_grid = grid.refined();
        let cur = sweep(&next_grid)?;
        let diff = cur.value.distance(&prev.value);
        let reference = cur
            .value
            .magnitude()
            .max(CANCELLATION_FLOOR * cur.scale)
            .max(f64::MIN_POSITIVE);
        let change = if diff == 0.0 { 0.0 } else { diff / reference };
        if !change.is_finite() {
            return Err(Error::NonConvergence {
                doublings: d,
                last_norm: cur.value.magnitude(),
                prev_norm: prev.value.magnitude(),
                change,
            });
        }
        if change <= cfg.tol {
            return Ok(Converged {
                value: cur.value,
                grid: next_grid,
                doublings: d,
                change,
            });
        }
        last_change = change;
        prev = cur;
        grid = next_grid;
    }
    Err(Error::NonConvergence {
        doublings: cfg.max_doublings,
        last_norm: prev.value.magnitude(),
        prev_norm: prev.value.magnitude(),
        change: last_change,
    })
}
