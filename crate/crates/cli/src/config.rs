//! Run configuration: a JSON file merged with command-line flags (flags win).

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use serde_json::Value;

use sectoria::io::{load_operator, OperatorInput};
use sectoria::{Error, FamilySpec, QuadConfig, Result, SectorialOperator};

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Operator matrix file ({"dim": n, "entries": [[re, im], ...]}) or family-spec JSON
    #[arg(long, conflicts_with = "family")]
    pub matrix: Option<PathBuf>,
    /// Built-in family in short form, e.g. jordan_shifted:3,1,4
    #[arg(long)]
    pub family: Option<String>,
    /// Sector angle for the model checks
    #[arg(long)]
    pub theta: Option<f64>,
    /// Comma-separated α values for δ_α
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Logarithm branch index
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<i32>,
    /// Logarithm power
    #[arg(long)]
    pub r: Option<f64>,
    /// Quadrature tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for random families and sample vectors
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (JSON report, or CSV for sweep); stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct SweepFile {
    pub param: Option<String>,
    pub values: Option<Vec<f64>>,
    pub thetas: Option<Vec<f64>>,
}

#[derive(Deserialize, Debug, Default, Clone)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    matrix: Option<PathBuf>,
    /// Short-form string or a full family spec object.
    family: Option<Value>,
    theta: Option<f64>,
    alpha: Option<Vec<f64>>,
    k: Option<i32>,
    r: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    symbol: Option<String>,
    quad: Option<QuadConfig>,
    sweep: Option<SweepFile>,
}

#[derive(Debug, Clone)]
pub enum OperatorSource {
    Matrix(PathBuf),
    ShortForm(String),
    Spec(FamilySpec),
}

/// Everything a subcommand needs after merging.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub operator: Option<OperatorSource>,
    pub theta: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub k: Option<i32>,
    pub r: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub symbol: Option<String>,
    pub quad: QuadConfig,
    pub sweep: SweepFile,
}

impl RunConfig {
    pub fn load(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str::<ConfigFile>(&text)?
            }
            None => ConfigFile::default(),
        };
        let operator = if let Some(m) = &args.matrix {
            Some(OperatorSource::Matrix(m.clone()))
        } else if let Some(f) = &args.family {
            Some(OperatorSource::ShortForm(f.clone()))
        } else if let Some(m) = &file.matrix {
            Some(OperatorSource::Matrix(m.clone()))
        } else {
            match &file.family {
                None => None,
                Some(Value::String(s)) => Some(OperatorSource::ShortForm(s.clone())),
                Some(v) => Some(OperatorSource::Spec(serde_json::from_value(v.clone())?)),
            }
        };
        let mut quad = file.quad.unwrap_or_default();
        if let Some(t) = args.tol.or(file.tol) {
            quad.tol = t;
        }
        quad.validate()?;
        let cfg = RunConfig {
            operator,
            theta: args.theta.or(file.theta),
            alpha: args.alpha.clone().or(file.alpha),
            k: args.k.or(file.k),
            r: args.r.or(file.r),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out),
            symbol: file.symbol,
            quad,
            sweep: file.sweep.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.theta {
            if !(t > 0.0 && t < PI) {
                return Err(Error::InvalidParam(format!("--theta must lie in (0, π), got {t}")));
            }
        }
        if let Some(al) = &self.alpha {
            if al.is_empty() || al.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return Err(Error::InvalidParam("--alpha values must be positive".into()));
            }
        }
        if let Some(r) = self.r {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidParam(format!("--r must be positive, got {r}")));
            }
        }
        Ok(())
    }

    pub fn family_spec(&self) -> Result<FamilySpec> {
        match &self.operator {
            Some(OperatorSource::ShortForm(s)) => FamilySpec::parse_short(s, self.seed),
            Some(OperatorSource::Spec(s)) => Ok(s.clone()),
            Some(OperatorSource::Matrix(_)) => Err(Error::InvalidParam("this command needs --family, not --matrix".into())),
            None => Err(Error::InvalidParam("no operator given; use --matrix or --family".into())),
        }
    }

    pub fn operator(&self) -> Result<SectorialOperator> {
        match &self.operator {
            Some(OperatorSource::Matrix(p)) => load_operator(&OperatorInput::File(p.clone())),
            Some(_) => load_operator(&OperatorInput::Family(self.family_spec()?)),
            None => Err(Error::InvalidParam("no operator given; use --matrix or --family".into())),
        }
    }

    pub fn operator_label(&self) -> String {
        match &self.operator {
            Some(OperatorSource::Matrix(p)) => format!("file:{}", p.display()),
            Some(_) => self.family_spec().map(|s| s.label()).unwrap_or_else(|_| "invalid".into()),
            None => "none".into(),
        }
    }

    /// θ for the model checks: the flag, else 2.0 when it clears ω, else the midpoint of (ω, π).
    pub fn model_theta(&self, a: &SectorialOperator) -> Result<f64> {
        let theta = match self.theta {
            Some(t) => t,
            None if a.omega_est() < 1.9 => 2.0,
            None => 0.5 * (a.omega_est() + PI),
        };
        if !(theta > a.omega_est()) {
            return Err(Error::InvalidParam(format!(
                "θ = {theta} must exceed the type angle {:.6}",
                a.omega_est()
            )));
        }
        Ok(theta)
    }

    /// α values for δ_α checks, each with αθ < π/2.
    pub fn alphas(&self, theta: f64) -> Result<Vec<f64>> {
        let al = self.alpha.clone().unwrap_or_else(|| {
            [0.3, 0.5]
                .into_iter()
                .filter(|a| a * theta < PI / 2.0)
                .chain(std::iter::once(0.45 * PI / theta))
                .take(2)
                .collect()
        });
        for a in &al {
            if !(a * theta < PI / 2.0) {
                return Err(Error::InvalidParam(format!("α·θ = {:.6} must stay below π/2", a * theta)));
            }
        }
        Ok(al)
    }

    /// (k, r) pairs: the flags when given, else the default triple.
    pub fn branches(&self) -> Vec<(i32, f64)> {
        match (self.k, self.r) {
            (None, None) => vec![(1, 0.6), (1, 1.0), (-1, 1.0)],
            (k, r) => vec![(k.unwrap_or(1), r.unwrap_or(1.0))],
        }
    }
}
