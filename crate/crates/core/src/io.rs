//! JSON schema shared by the CLI and the tests.
//!
//! A complex scalar is `[re, im]` (a bare number is read as real), a matrix
//! is a row-major array of rows, a density matrix is
//! `{"dim": n, "entries": matrix}`, a POVM is a list of matrices, a channel
//! is `{"dim": n, "kraus": [matrix, ...]}` and an ensemble is
//! `{"weights": [...], "states": [density, ...]}`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channels::{Ensemble, KrausChannel};
use crate::linalg::CMatrix;
use crate::measurement::Povm;
use crate::states::DensityMatrix;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: crate::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarJson {
    Complex([f64; 2]),
    Real(f64),
}

impl From<ScalarJson> for Complex64 {
    fn from(s: ScalarJson) -> Self {
        match s {
            ScalarJson::Complex([re, im]) => Complex64::new(re, im),
            ScalarJson::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub type MatrixJson = Vec<Vec<ScalarJson>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityJson {
    pub dim: usize,
    pub entries: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub dim: usize,
    pub kraus: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleJson {
    pub weights: Vec<f64>,
    pub states: Vec<DensityJson>,
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| ScalarJson::Complex([m[(i, j)].re, m[(i, j)].im]))
                .collect()
        })
        .collect()
}

/// Square matrix of side `dim`; `what` names the object in errors.
pub fn matrix_from_json(rows: &MatrixJson, dim: usize, what: &str) -> crate::Result<CMatrix> {
    if rows.len() != dim {
        return Err(crate::Error::DimMismatch {
            expected: dim,
            found: rows.len(),
        });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(crate::Error::InvalidParameter(format!(
                "{what}: row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
        for (j, &x) in row.iter().enumerate() {
            m[(i, j)] = x.into();
        }
    }
    Ok(m)
}

pub fn density_to_json(rho: &DensityMatrix) -> DensityJson {
    DensityJson {
        dim: rho.dim(),
        entries: matrix_to_json(rho.matrix()),
    }
}

pub fn density_from_json(d: &DensityJson) -> crate::Result<DensityMatrix> {
    DensityMatrix::new(matrix_from_json(&d.entries, d.dim, "entries")?)
}

pub fn povm_to_json(povm: &Povm) -> Vec<MatrixJson> {
    povm.effects().iter().map(|e| matrix_to_json(e.matrix())).collect()
}

pub fn povm_from_json(effects: &[MatrixJson]) -> crate::Result<Povm> {
    let dim = effects.first().map_or(0, Vec::len);
    let mats = effects
        .iter()
        .enumerate()
        .map(|(k, e)| matrix_from_json(e, dim, &format!("effect {k}")))
        .collect::<crate::Result<Vec<_>>>()?;
    Povm::new(mats)
}

pub fn channel_to_json(ch: &KrausChannel) -> ChannelJson {
    ChannelJson {
        dim: ch.dim(),
        kraus: ch.kraus_ops().iter().map(matrix_to_json).collect(),
    }
}

pub fn channel_from_json(c: &ChannelJson) -> crate::Result<KrausChannel> {
    let ops = c
        .kraus
        .iter()
        .enumerate()
        .map(|(k, m)| matrix_from_json(m, c.dim, &format!("kraus {k}")))
        .collect::<crate::Result<Vec<_>>>()?;
    KrausChannel::new(ops)
}

pub fn ensemble_from_json(e: &EnsembleJson) -> crate::Result<Ensemble> {
    let states = e
        .states
        .iter()
        .map(density_from_json)
        .collect::<crate::Result<Vec<_>>>()?;
    Ensemble::new(e.weights.clone(), states)
}

/// Parse `text` as `T`, naming the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| InputError::Parse {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_json(&text, path)
}

fn invalid(path: &Path) -> impl FnOnce(crate::Error) -> InputError + '_ {
    move |source| InputError::Invalid {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_density(path: &Path) -> Result<DensityMatrix, InputError> {
    density_from_json(&read_json(path)?).map_err(invalid(path))
}

pub fn read_povm(path: &Path) -> Result<Povm, InputError> {
    let effects: Vec<MatrixJson> = read_json(path)?;
    povm_from_json(&effects).map_err(invalid(path))
}

pub fn read_channel(path: &Path) -> Result<KrausChannel, InputError> {
    channel_from_json(&read_json(path)?).map_err(invalid(path))
}

pub fn read_ensemble(path: &Path) -> Result<Ensemble, InputError> {
    ensemble_from_json(&read_json(path)?).map_err(invalid(path))
}
