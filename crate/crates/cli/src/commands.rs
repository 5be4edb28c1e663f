//! The five subcommands.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use sectoria::contour::{dunford_riesz_default, extended_calculus};
use sectoria::io::MatrixFile;
use sectoria::linalg::{c, rel_diff, C64};
use sectoria::model::{
    alpha_independence_check, char_fn_spectrum_check, default_battery, default_probes, factorization_values,
    kernel_check, obs_intertwining_check, pairing_residue_check, verify_factorization, w1_check, CharFn, EvalSet,
    DEFAULT_MARGIN,
};
use sectoria::spectral::eigen_decompose;
use sectoria::square::{
    admissibility_check, duality_batch, equivalence_constants, gram_operator, log_gap_batch, log_gap_constants,
    mcintosh_identity_batch, psi_independence_check, sample_vectors,
};
use sectoria::{Error, QuadConfig, Report, Result, ScalarSymbol, Sector, SectorialOperator};

use crate::config::RunConfig;

/// Relative agreement required between a computed f(A) and the spectral oracle.
const CALC_TOL: f64 = 1e-7;
/// Factorization tolerance used by the sweep table.
const SWEEP_FACTORIZATION_TOL: f64 = 1e-4;

#[derive(Serialize, Debug)]
pub struct Environment {
    pub seed: u64,
    pub threads: usize,
    pub quad: QuadConfig,
    pub version: &'static str,
}

#[derive(Serialize, Debug)]
pub struct SuiteReport {
    pub command: String,
    pub operator: String,
    pub pass: bool,
    pub timestamp: u64,
    pub environment: Environment,
    pub checks: Vec<Report>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        SuiteReport {
            command: command.into(),
            operator: cfg.operator_label(),
            pass: true,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            environment: Environment {
                seed: cfg.seed,
                threads: rayon::current_num_threads(),
                quad: cfg.quad.clone(),
                version: env!("CARGO_PKG_VERSION"),
            },
            checks: Vec::new(),
            outputs: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Adds a check; numerical failures become failed reports, invalid input propagates.
    fn push(&mut self, name: &str, label: &str, r: Result<Report>) -> Result<()> {
        let rep = match r {
            Ok(rep) => rep,
            Err(e) if e.is_invalid_input() => return Err(e),
            Err(e) => Report::new(name, label, 0.0, false).note(format!("error: {e}")),
        };
        self.pass &= rep.pass;
        self.checks.push(rep);
        Ok(())
    }

    fn push_all(&mut self, name: &str, label: &str, r: Result<Vec<Report>>) -> Result<()> {
        match r {
            Ok(v) => {
                for rep in v {
                    self.push(name, label, Ok(rep))?;
                }
                Ok(())
            }
            Err(e) => self.push(name, label, Err(e)),
        }
    }
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut a = cfg.operator()?;
    let mut suite = SuiteReport::new("certify", cfg);
    let theta = cfg.theta.unwrap_or(0.5 * (a.omega_est() + PI));
    let sector = Sector::new(theta)?;
    let grid = a.default_ray_grid();
    let rep = match a.certify(sector, &grid) {
        Ok(cth) => Report::new("sectoriality", a.label(), 0.0, cth.is_finite())
            .param("theta", theta)
            .constant("omega_est", a.omega_est())
            .constant("c_theta", cth)
            .constant("norm", a.norm())
            .with_grid(&grid),
        Err(Error::NotSectorial { theta, reason }) => Report::new("sectoriality", a.label(), 0.0, false)
            .param("theta", theta)
            .constant("omega_est", a.omega_est())
            .note(reason),
        Err(e) => return Err(e),
    };
    suite.push("sectoriality", a.label(), Ok(rep))?;
    // C_θ at a few more angles between ω and π for the table.
    let w = a.omega_est();
    for k in 1..=4 {
        let t = w + (PI - w) * k as f64 / 4.0;
        match a.certify(Sector::new(t)?, &grid) {
            Ok(_) | Err(Error::NotSectorial { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let table: Vec<Value> = a.c_theta().iter().map(|(t, cv)| json!({"theta": t, "c_theta": cv})).collect();
    suite.outputs.insert("omega_est".into(), json!(a.omega_est()));
    suite.outputs.insert("c_theta_table".into(), Value::Array(table));
    suite.outputs.insert(
        "spectrum".into(),
        Value::Array(a.spectrum().iter().map(|z| json!([z.re, z.im])).collect()),
    );
    Ok(suite)
}

pub fn cmd_calc(cfg: &RunConfig, symbol: Option<&str>) -> Result<SuiteReport> {
    let name = symbol
        .map(str::to_string)
        .or_else(|| cfg.symbol.clone())
        .ok_or_else(|| Error::InvalidParam("calc needs --symbol".into()))?;
    let f = ScalarSymbol::from_name(&name)?;
    let a = cfg.operator()?;
    let mut suite = SuiteReport::new("calc", cfg);
    let oracle = eigen_decompose(a.matrix()).map(|e| e.apply(|z| f.eval(z)));
    if oracle.is_none() {
        suite.notes.push("eigenvector basis too ill-conditioned; no spectral oracle".into());
    }
    let mut results = Vec::new();
    if f.is_psi() {
        results.push(("dunford_riesz", dunford_riesz_default(&a, &f, &cfg.quad)));
    }
    results.push(("extended_calculus", extended_calculus(&a, &f, &cfg.quad)));
    let mut values = Vec::new();
    for (route, r) in results {
        let check = format!("calc_{route}");
        let rep = r.map(|conv| {
            let mut rep = Report::new(check.as_str(), a.label(), CALC_TOL, true)
                .param("symbol", name.as_str())
                .constant("quadrature_change", conv.change)
                .with_grid(&conv.grid);
            if let Some(o) = &oracle {
                let d = rel_diff(&conv.value, o);
                rep = rep.residual("oracle_relative_difference", d);
                rep.pass = d <= CALC_TOL;
            }
            values.push(conv.value);
            rep
        });
        suite.push(&check, a.label(), rep)?;
    }
    if values.len() == 2 {
        let d = rel_diff(&values[0], &values[1]);
        let rep = Report::new("calc_route_agreement", a.label(), CALC_TOL, d <= CALC_TOL)
            .param("symbol", name.as_str())
            .residual("relative_difference", d);
        suite.push("calc_route_agreement", a.label(), Ok(rep))?;
    }
    if let Some(v) = values.last() {
        suite
            .outputs
            .insert("matrix".into(), serde_json::to_value(MatrixFile::from_matrix(v))?);
    }
    Ok(suite)
}

pub fn cmd_sqnorm(cfg: &RunConfig, symbol: Option<&str>) -> Result<SuiteReport> {
    let a = cfg.operator()?;
    let label = a.label().to_string();
    let psi = ScalarSymbol::from_name(symbol.or(cfg.symbol.as_deref()).unwrap_or("sqrt_over_1p"))?;
    if !psi.is_psi() {
        return Err(Error::InvalidParam(format!("'{}' is not a Ψ-class symbol", psi.name())));
    }
    let mut suite = SuiteReport::new("sqnorm", cfg);
    let samples = sample_vectors(a.dim(), 3, cfg.seed);

    let gram = gram_operator(&a, &psi, &cfg.quad).and_then(|g| {
        let gap = equivalence_constants(&g)?;
        Ok(Report::new("equivalence_constants", &label, 0.0, gap.kappa.is_finite())
            .param("psi", psi.name())
            .constant("m", gap.m)
            .constant("M", gap.big_m)
            .constant("kappa", gap.kappa)
            .with_grid(&g.t_grid))
    });
    suite.push("equivalence_constants", &label, gram)?;

    let other = if psi.name() == "phi" { ScalarSymbol::sqrt_over_1p() } else { ScalarSymbol::phi() };
    suite.push("psi_independence", &label, psi_independence_check(&a, &psi, &other, &cfg.quad))?;
    suite.push_all("mcintosh_identity", &label, mcintosh_identity_batch(&a, &samples, &cfg.quad))?;
    suite.push_all("log_gap", &label, log_gap_batch(&a, &cfg.branches(), &samples, &cfg.quad))?;
    if a.omega_est() < PI / 2.0 {
        for (k, r) in cfg.branches() {
            suite.push("admissibility", &label, admissibility_check(&a, Some((k, r)), &samples, &cfg.quad))?;
        }
    } else {
        suite.notes.push("admissibility skipped: type angle is not below π/2".into());
    }
    Ok(suite)
}

pub fn cmd_model(cfg: &RunConfig) -> Result<SuiteReport> {
    let a = cfg.operator()?;
    let label = a.label().to_string();
    let theta = cfg.model_theta(&a)?;
    let alphas = cfg.alphas(theta)?;
    let q = &cfg.quad;
    let eval = EvalSet::default_for(&a, theta)?;
    let battery = default_battery(a.dim(), theta);
    let mut suite = SuiteReport::new("model", cfg);
    suite.outputs.insert("theta".into(), json!(theta));
    suite.outputs.insert("alphas".into(), json!(alphas));

    for u in &battery {
        suite.push("factorization", &label, verify_factorization(&a, theta, alphas[0], u, &eval, q))?;
    }
    if alphas.len() >= 2 {
        suite.push(
            "alpha_independence",
            &label,
            alpha_independence_check(&a, theta, &alphas, &battery[0], &eval, q),
        )?;
    }
    for h in &battery {
        suite.push("kernel_membership", &label, kernel_check(&a, theta, alphas[0], h, q))?;
    }
    let spec = CharFn::new(&a, alphas[0], q).and_then(|cf| char_fn_spectrum_check(&cf, theta, &default_probes(&a, theta), 1e-3));
    suite.push("char_fn_spectrum", &label, spec)?;

    let xs = sample_vectors(a.dim(), 2, cfg.seed);
    let x = &xs[a.dim()];
    let lambda = c(-0.7, 0.15);
    let points: Vec<C64> = eval.exterior.clone();
    suite.push("obs_intertwining", &label, obs_intertwining_check(&a, x, lambda, &points, q))?;
    let ctr_lambda = c(0.0, 0.5 * (theta + PI)).exp() * 1.5;
    suite.push(
        "ctr_intertwining",
        &label,
        sectoria::model::ctr_intertwining_check(&a, theta, &battery[0], ctr_lambda, q),
    )?;
    let (k, r) = (cfg.k.unwrap_or(1), cfg.r.unwrap_or(1.0));
    suite.push("w1", &label, w1_check(&a, theta, k, r, x, q))?;
    let y = &xs[a.dim() + 1];
    let mu = c(0.0, 0.5 * (theta + PI)).exp() * 1.5;
    let nus = [c(0.0, 0.3 * theta).exp() * 0.8, c(0.0, -0.5 * theta).exp() * 2.0, mu.conj() * 1.7];
    suite.push("boundary_pairing", &label, pairing_residue_check(theta, x, y, mu, &nus, q))?;
    suite.push_all("duality", &label, duality_batch(&a, &[(x.clone(), y.clone())], q))?;
    Ok(suite)
}

/// One row of the sweep table.
struct SweepRow {
    axis: &'static str,
    value: f64,
    kappa: f64,
    m: f64,
    big_m: f64,
    c_lower: f64,
    c_upper: f64,
    factorization: f64,
}

impl SweepRow {
    fn pass(&self) -> bool {
        [self.kappa, self.c_lower, self.c_upper].iter().all(|v| v.is_finite())
            && self.factorization <= SWEEP_FACTORIZATION_TOL
    }
}

pub const SWEEP_HEADER: &str = "axis,value,kappa,m,M,c_lower,c_upper,factorization_residual,pass";

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn gap_columns(a: &SectorialOperator, k: i32, r: f64, q: &QuadConfig) -> Result<[f64; 5]> {
    let g = gram_operator(a, &ScalarSymbol::sqrt_over_1p(), q)?;
    let gap = equivalence_constants(&g)?;
    let l = sectoria::contour::log_power_matrix(a, k, r, q)?;
    let lg = log_gap_constants(&g.matrix, &l)?;
    Ok([gap.kappa, gap.m, gap.big_m, lg.c_lower, lg.c_upper])
}

fn factorization_column(a: &SectorialOperator, theta: f64, alpha: f64, q: &QuadConfig) -> Result<f64> {
    let points = EvalSet::default_for(a, theta)?.exterior;
    let mut worst = 0.0f64;
    for u in default_battery(a.dim(), theta).iter().take(a.dim()) {
        let f = factorization_values(a, theta, alpha, u, &points, DEFAULT_MARGIN, q)?;
        worst = f.residuals.iter().copied().fold(worst, f64::max);
    }
    Ok(worst)
}

/// Numerical failures turn into NaN cells; invalid input aborts the sweep.
fn soft<T>(r: Result<T>, fallback: T) -> Result<T> {
    match r {
        Ok(v) => Ok(v),
        Err(e) if e.is_invalid_input() => Err(e),
        Err(_) => Ok(fallback),
    }
}

pub fn cmd_sweep(cfg: &RunConfig, param: Option<String>, values: Option<Vec<f64>>, thetas: Option<Vec<f64>>) -> Result<(String, bool)> {
    let values = values.or_else(|| cfg.sweep.values.clone());
    let thetas = thetas.or_else(|| cfg.sweep.thetas.clone());
    let q = &cfg.quad;
    let (k, r) = (cfg.k.unwrap_or(1), cfg.r.unwrap_or(1.0));
    let alpha = cfg.alpha.as_ref().map(|a| a[0]).unwrap_or(0.5);
    let mut rows = Vec::new();
    match (values, thetas) {
        (Some(vals), None) => {
            if vals.is_empty() {
                return Err(Error::InvalidParam("empty sweep range".into()));
            }
            let param = param
                .or_else(|| cfg.sweep.param.clone())
                .ok_or_else(|| Error::InvalidParam("--values needs --param".into()))?;
            let base = cfg.family_spec()?;
            if !base.params.contains_key(&param) {
                return Err(Error::InvalidParam(format!(
                    "family {} has no parameter '{param}'",
                    base.family.as_str()
                )));
            }
            for v in vals {
                let a = sectoria::make_family(&base.clone().with(&param, v))?;
                let theta = cfg.model_theta(&a)?;
                let gaps = soft(gap_columns(&a, k, r, q), [f64::NAN; 5])?;
                let fact = soft(factorization_column(&a, theta, alpha, q), f64::NAN)?;
                rows.push(SweepRow {
                    axis: "param",
                    value: v,
                    kappa: gaps[0],
                    m: gaps[1],
                    big_m: gaps[2],
                    c_lower: gaps[3],
                    c_upper: gaps[4],
                    factorization: fact,
                });
            }
        }
        (None, Some(ths)) => {
            if ths.is_empty() {
                return Err(Error::InvalidParam("empty sweep range".into()));
            }
            let a = cfg.operator()?;
            for &t in &ths {
                if !(t > a.omega_est() && t < PI && alpha * t < PI) {
                    return Err(Error::InvalidParam(format!("θ = {t} must lie in (ω, π) with αθ < π")));
                }
            }
            let gaps = soft(gap_columns(&a, k, r, q), [f64::NAN; 5])?;
            for t in ths {
                let fact = soft(factorization_column(&a, t, alpha, q), f64::NAN)?;
                rows.push(SweepRow {
                    axis: "theta",
                    value: t,
                    kappa: gaps[0],
                    m: gaps[1],
                    big_m: gaps[2],
                    c_lower: gaps[3],
                    c_upper: gaps[4],
                    factorization: fact,
                });
            }
        }
        (Some(_), Some(_)) => return Err(Error::InvalidParam("give either --values or --thetas, not both".into())),
        (None, None) => return Err(Error::InvalidParam("sweep needs --values or --thetas".into())),
    }
    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push('\n');
    let mut all = true;
    for row in &rows {
        let p = row.pass();
        all &= p;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            row.axis,
            num(row.value),
            num(row.kappa),
            num(row.m),
            num(row.big_m),
            num(row.c_lower),
            num(row.c_upper),
            num(row.factorization),
            p
        );
    }
    Ok((csv, all))
}
