//! JSON documents for states and attack models.
//!
//! A state:
//!
//! ```json
//! {"dims": [2], "matrix": [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]]}
//! ```
//!
//! `matrix` lists rows, each entry a `[re, im]` pair. An attack:
//!
//! ```json
//! {"eps": 0.1, "dims": [2, 2], "sigma_e": {"00": [...], "01": [...], "10": [...], "11": [...]}}
//! ```
//!
//! `dims` is the factorization of `E (x) T` with `T` last (always 2). Exactly
//! one of `sigma_e` (unsymmetrized states on `E`, symmetrized on load) or
//! `rho_et` (symmetrized states on `E (x) T`) must be present.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::AttackModel;
use crate::qmath::{ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub dims: Vec<usize>,
    pub matrix: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackDoc {
    pub eps: f64,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_e: Option<BTreeMap<String, Rows>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_et: Option<BTreeMap<String, Rows>>,
}

const KEYS: [&str; 4] = ["00", "01", "10", "11"];

fn rows_to_matrix<T: Real>(rows: &Rows) -> Result<ComplexMatrix<T>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix must be square and nonempty".into()));
    }
    let data = rows
        .iter()
        .flatten()
        .map(|&[re, im]| Complex::new(T::lit(re), T::lit(im)))
        .collect();
    ComplexMatrix::from_vec(n, n, data)
}

fn matrix_to_rows<T: Real>(m: &ComplexMatrix<T>) -> Rows {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m[(r, c)].re.as_f64(), m[(r, c)].im.as_f64()]).collect())
        .collect()
}

impl StateDoc {
    pub fn to_state<T: Real>(&self) -> Result<DensityMatrix<T>> {
        DensityMatrix::new(rows_to_matrix(&self.matrix)?, self.dims.clone())
    }

    pub fn from_state<T: Real>(rho: &DensityMatrix<T>) -> Self {
        Self {
            dims: rho.dims().to_vec(),
            matrix: matrix_to_rows(rho.matrix()),
        }
    }
}

impl AttackDoc {
    pub fn to_attack<T: Real>(&self) -> Result<AttackModel<T>> {
        if self.dims.len() < 2 || *self.dims.last().unwrap() != 2 {
            return Err(Error::Parse(format!("attack dims {:?} must end with the T register (2)", self.dims)));
        }
        let load = |map: &BTreeMap<String, Rows>, dims: &[usize]| -> Result<[DensityMatrix<T>; 4]> {
            if map.len() != 4 || KEYS.iter().any(|k| !map.contains_key(*k)) {
                return Err(Error::Parse("attack states must be keyed exactly \"00\", \"01\", \"10\", \"11\"".into()));
            }
            let states: Vec<DensityMatrix<T>> = KEYS
                .iter()
                .map(|k| DensityMatrix::new(rows_to_matrix(&map[*k])?, dims.to_vec()))
                .collect::<Result<_>>()?;
            Ok(states.try_into().expect("four keys"))
        };
        let eps = T::lit(self.eps);
        match (&self.sigma_e, &self.rho_et) {
            (Some(s), None) => AttackModel::from_conditional_states(eps, &load(s, &self.dims[..self.dims.len() - 1])?),
            (None, Some(r)) => AttackModel::new(eps, load(r, &self.dims)?),
            _ => Err(Error::Parse("attack document needs exactly one of \"sigma_e\" or \"rho_et\"".into())),
        }
    }

    /// Document holding the symmetrized states.
    pub fn from_attack<T: Real>(a: &AttackModel<T>) -> Self {
        let map = KEYS
            .iter()
            .zip(a.states())
            .map(|(k, s)| (k.to_string(), matrix_to_rows(s.matrix())))
            .collect();
        Self {
            eps: a.eps().as_f64(),
            dims: a.states()[0].dims().to_vec(),
            sigma_e: None,
            rho_et: Some(map),
        }
    }
}

pub fn parse_state<T: Real>(text: &str) -> Result<DensityMatrix<T>> {
    serde_json::from_str::<StateDoc>(text)?.to_state()
}

pub fn read_state<T: Real>(path: impl AsRef<Path>) -> Result<DensityMatrix<T>> {
    parse_state(&std::fs::read_to_string(path)?)
}

pub fn parse_attack<T: Real>(text: &str) -> Result<AttackModel<T>> {
    serde_json::from_str::<AttackDoc>(text)?.to_attack()
}

pub fn read_attack<T: Real>(path: impl AsRef<Path>) -> Result<AttackModel<T>> {
    parse_attack(&std::fs::read_to_string(path)?)
}

pub fn attack_to_json<T: Real>(a: &AttackModel<T>) -> String {
    serde_json::to_string_pretty(&AttackDoc::from_attack(a)).expect("attack document serializes")
}

pub fn state_to_json<T: Real>(rho: &DensityMatrix<T>) -> String {
    serde_json::to_string_pretty(&StateDoc::from_state(rho)).expect("state document serializes")
}
