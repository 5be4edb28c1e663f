//! Matrix and operator-spec files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::families::{make_family, FamilySpec};
use crate::linalg::{c, CMatrix, CVector};
use crate::operator::SectorialOperator;

/// `{"dim": n, "entries": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.dim == 0 {
            return Err(Error::Empty);
        }
        if self.entries.len() != self.dim * self.dim {
            // Report the closest rectangular shape when one exists.
            let cols = if self.entries.len() % self.dim == 0 {
                self.entries.len() / self.dim
            } else {
                0
            };
            return Err(Error::NonSquare {
                rows: self.dim,
                cols,
            });
        }
        let vals: Vec<_> = self.entries.iter().map(|p| c(p[0], p[1])).collect();
        let m = CMatrix::from_row_slice(self.dim, self.dim, &vals);
        crate::linalg::validate_square(&m)?;
        Ok(m)
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixFile {
            dim: m.nrows(),
            entries,
        }
    }
}

/// Where an operator comes from.
#[derive(Clone, Debug)]
pub enum OperatorInput {
    /// JSON file holding either a matrix or a family spec.
    File(PathBuf),
    Inline(CMatrix),
    Family(FamilySpec),
}

impl OperatorInput {
    pub fn describe(&self) -> String {
        match self {
            OperatorInput::File(p) => format!("file:{}", p.display()),
            OperatorInput::Inline(m) => format!("inline({}x{})", m.nrows(), m.ncols()),
            OperatorInput::Family(f) => f.label(),
        }
    }
}

pub fn load_operator(input: &OperatorInput) -> Result<SectorialOperator> {
    match input {
        OperatorInput::Inline(m) => SectorialOperator::new(m.clone(), input.describe()),
        OperatorInput::Family(spec) => make_family(spec),
        OperatorInput::File(path) => {
            let value: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            if value.get("family").is_some() {
                let spec: FamilySpec = serde_json::from_value(value)?;
                make_family(&spec)
            } else {
                let mf: MatrixFile = serde_json::from_value(value)?;
                SectorialOperator::new(mf.to_matrix()?, input.describe())
            }
        }
    }
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(&MatrixFile::from_matrix(m))?;
    crate::report::write_atomic(path, &bytes)
}

/// Vectors travel as lists of [re, im] pairs.
pub fn vector_from_pairs(pairs: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(pairs.len(), pairs.iter().map(|p| c(p[0], p[1])))
}

pub fn vector_to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}
