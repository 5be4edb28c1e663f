//! Deterministic operator families used as the test corpus.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{c, diag, identity, inverse, CMatrix, C64};
use crate::operator::SectorialOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    PositiveDiagonal,
    ComplexDiagonal,
    JordanShifted,
    ConjugatedAccretive,
    RandomAccretive,
}

impl FamilyName {
    pub const ALL: [FamilyName; 5] = [
        FamilyName::PositiveDiagonal,
        FamilyName::ComplexDiagonal,
        FamilyName::JordanShifted,
        FamilyName::ConjugatedAccretive,
        FamilyName::RandomAccretive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyName::PositiveDiagonal => "positive_diagonal",
            FamilyName::ComplexDiagonal => "complex_diagonal",
            FamilyName::JordanShifted => "jordan_shifted",
            FamilyName::ConjugatedAccretive => "conjugated_accretive",
            FamilyName::RandomAccretive => "random_accretive",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        FamilyName::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown family '{s}'")))
    }
}

/// `{"family": name, "params": {...}, "seed": int}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: FamilyName,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: FamilyName) -> Self {
        FamilySpec {
            family,
            params: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn positive_diagonal(values: &[f64]) -> Self {
        Self::new(FamilyName::PositiveDiagonal).with("values", values.to_vec())
    }

    /// Eigenvalues given as (re, im) pairs.
    pub fn complex_diagonal(values: &[(f64, f64)]) -> Self {
        let v: Vec<Vec<f64>> = values.iter().map(|&(a, b)| vec![a, b]).collect();
        Self::new(FamilyName::ComplexDiagonal).with("values", v)
    }

    pub fn jordan_shifted(n: usize, lambda: f64, eps: f64) -> Self {
        Self::new(FamilyName::JordanShifted)
            .with("n", n)
            .with("lambda", lambda)
            .with("eps", eps)
    }

    pub fn conjugated_accretive(seed: u64) -> Self {
        Self::new(FamilyName::ConjugatedAccretive).seed(seed)
    }

    pub fn random_accretive(dim: usize, seed: u64) -> Self {
        Self::new(FamilyName::RandomAccretive).with("dim", dim).seed(seed)
    }

    /// Short form used on the command line: `name` or `name:a,b,...`.
    ///
    /// positive_diagonal:1,2,3 · complex_diagonal:r@arg,... · jordan_shifted:n,λ,ε ·
    /// conjugated_accretive[:dim] · random_accretive[:dim]
    pub fn parse_short(s: &str, seed: u64) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, a),
            None => (s, ""),
        };
        let family = FamilyName::parse(name.trim())?;
        let nums = |a: &str| -> Result<Vec<f64>> {
            a.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number '{t}' in family '{s}'")))
                })
                .collect()
        };
        let spec = match family {
            FamilyName::PositiveDiagonal => Self::positive_diagonal(&nums(args)?),
            FamilyName::ComplexDiagonal => {
                let mut vals = Vec::new();
                for t in args.split(',').filter(|t| !t.trim().is_empty()) {
                    let (r, a) = t
                        .split_once('@')
                        .ok_or_else(|| Error::Parse(format!("expected modulus@arg, got '{t}'")))?;
                    let r: f64 = r.trim().parse().map_err(|_| Error::Parse(format!("bad modulus '{r}'")))?;
                    let a: f64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad argument '{a}'")))?;
                    vals.push((r * a.cos(), r * a.sin()));
                }
                Self::complex_diagonal(&vals)
            }
            FamilyName::JordanShifted => {
                let v = nums(args)?;
                if v.len() != 3 {
                    return Err(Error::Parse(format!("jordan_shifted needs n,λ,ε, got '{args}'")));
                }
                if v[0] < 1.0 || v[0].fract() != 0.0 {
                    return Err(Error::InvalidParam(format!("block size must be a positive integer, got {}", v[0])));
                }
                Self::jordan_shifted(v[0] as usize, v[1], v[2])
            }
            FamilyName::ConjugatedAccretive | FamilyName::RandomAccretive => {
                let v = nums(args)?;
                let mut spec = Self::new(family);
                if let Some(&d) = v.first() {
                    if d < 1.0 || d.fract() != 0.0 {
                        return Err(Error::InvalidParam(format!("dimension must be a positive integer, got {d}")));
                    }
                    spec = spec.with("dim", d as usize);
                }
                spec
            }
        };
        Ok(spec.seed(seed))
    }

    pub fn label(&self) -> String {
        let mut parts: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if matches!(self.family, FamilyName::ConjugatedAccretive | FamilyName::RandomAccretive) {
            parts.push(format!("seed={}", self.seed));
        }
        format!("{}({})", self.family.as_str(), parts.join(", "))
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::InvalidParam(format!("parameter '{key}' must be a number"))),
        }
    }

    fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .filter(|&d| d >= 1)
                .map(|d| Some(d as usize))
                .ok_or_else(|| Error::InvalidParam(format!("parameter '{key}' must be a positive integer"))),
        }
    }

    /// The matrix alone, without sectoriality checks.
    pub fn matrix(&self) -> Result<CMatrix> {
        match self.family {
            FamilyName::PositiveDiagonal => {
                let vals = self
                    .params
                    .get("values")
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| Error::InvalidParam("positive_diagonal needs 'values'".into()))?;
                let mut out = Vec::with_capacity(vals.len());
                for v in vals {
                    let x = v
                        .as_f64()
                        .ok_or_else(|| Error::InvalidParam("diagonal values must be numbers".into()))?;
                    if !(x > 0.0 && x.is_finite()) {
                        return Err(Error::InvalidParam(format!("positive_diagonal value {x} is not positive")));
                    }
                    out.push(c(x, 0.0));
                }
                if out.is_empty() {
                    return Err(Error::InvalidParam("positive_diagonal needs at least one value".into()));
                }
                Ok(diag(&out))
            }
            FamilyName::ComplexDiagonal => {
                let vals = self
                    .params
                    .get("values")
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| Error::InvalidParam("complex_diagonal needs 'values'".into()))?;
                let mut out = Vec::with_capacity(vals.len());
                for v in vals {
                    let pair = v
                        .as_array()
                        .filter(|p| p.len() == 2)
                        .and_then(|p| Some(c(p[0].as_f64()?, p[1].as_f64()?)))
                        .ok_or_else(|| Error::InvalidParam("complex values must be [re, im] pairs".into()))?;
                    out.push(pair);
                }
                if out.is_empty() {
                    return Err(Error::InvalidParam("complex_diagonal needs at least one value".into()));
                }
                Ok(diag(&out))
            }
            FamilyName::JordanShifted => {
                let n = self.get_usize("n")?.unwrap_or(2);
                let lambda = self.get_f64("lambda")?.unwrap_or(1.0);
                let eps = self.get_f64("eps")?.unwrap_or(1.0);
                let mut m = identity(n) * c(lambda, 0.0);
                for k in 0..n.saturating_sub(1) {
                    m[(k, k + 1)] = c(eps, 0.0);
                }
                Ok(m)
            }
            FamilyName::ConjugatedAccretive => {
                let n = self.get_usize("dim")?.unwrap_or(4);
                let angle = self.get_f64("angle")?.unwrap_or(PI / 3.0);
                if !(angle >= 0.0 && angle < PI) {
                    return Err(Error::InvalidParam(format!("angle must lie in [0, π), got {angle}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let d: Vec<C64> = (0..n)
                    .map(|k| {
                        let modulus = rng.gen_range(0.5..2.0);
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        c(0.0, sign * angle).exp() * modulus
                    })
                    .collect();
                let s = similarity(n);
                Ok(&s * diag(&d) * inverse(&s)?)
            }
            FamilyName::RandomAccretive => {
                let n = self.get_usize("dim")?.unwrap_or(4);
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut gauss = || -> C64 {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
                };
                let b = CMatrix::from_fn(n, n, |_, _| gauss());
                let k = CMatrix::from_fn(n, n, |_, _| gauss());
                let scale = 1.0 / n as f64;
                let p = &b * b.adjoint() * c(scale, 0.0) + identity(n) * c(0.5, 0.0);
                let h = (&k + k.adjoint()) * c(0.5 / (n as f64).sqrt(), 0.0);
                Ok(p + h * c(0.0, 1.0))
            }
        }
    }
}

/// Fixed unit upper-triangular similarity with 2 above the diagonal.
fn similarity(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(1.0, 0.0)
        } else if j > i {
            c(2.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn make_family(spec: &FamilySpec) -> Result<SectorialOperator> {
    SectorialOperator::new(spec.matrix()?, spec.label())
}
