//! Bipartite pure-state families and their operator representation.
//!
//! A state `psi` in `C^dA (x) C^dB` is stored A-major: amplitude of
//! `|a>|b>` lives at index `a * dB + b`. Reading the same amplitudes as a
//! `dA x dB` matrix gives the operator `X : H_B -> H_A` with
//! `psi = sum_i (X f_i) (x) f_i`, where `f_i` is the computational basis of B.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, CMatrix, CVector, InnerProduct, NumericsError, C64};

pub const DEFAULT_ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatesError {
    #[error("could not parse state file: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "states are not orthonormal: worst pair ({first}, {second}) has overlap magnitude {overlap:.6}"
    )]
    NotOrthonormal {
        first: usize,
        second: usize,
        overlap: f64,
    },
    #[error("a family needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// On-disk layout of a state file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub dim_a: usize,
    pub dim_b: usize,
    pub states: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub ortho_tol: f64,
    /// Gram-Schmidt the family instead of rejecting it.
    pub reorthonormalize: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            ortho_tol: DEFAULT_ORTHO_TOL,
            reorthonormalize: false,
        }
    }
}

/// A validated orthonormal family `psi_1..psi_M`.
#[derive(Debug, Clone)]
pub struct StateFamily {
    dim_a: usize,
    dim_b: usize,
    states: Vec<CVector>,
    labels: Vec<String>,
    reorthonormalized: bool,
}

impl StateFamily {
    pub fn new(
        dim_a: usize,
        dim_b: usize,
        states: Vec<CVector>,
        labels: Option<Vec<String>>,
        opts: LoadOptions,
    ) -> Result<Self, StatesError> {
        if dim_a == 0 || dim_b == 0 {
            return Err(StatesError::DimensionMismatch(format!(
                "dimensions must be positive, got dim_a={dim_a}, dim_b={dim_b}"
            )));
        }
        if states.len() < 2 {
            return Err(StatesError::TooFewStates(states.len()));
        }
        let len = dim_a * dim_b;
        for (l, s) in states.iter().enumerate() {
            if s.len() != len {
                return Err(StatesError::DimensionMismatch(format!(
                    "state {} has {} amplitudes, expected dim_a*dim_b = {len}",
                    l + 1,
                    s.len()
                )));
            }
            if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(StatesError::Parse(format!(
                    "state {} has non-finite amplitudes",
                    l + 1
                )));
            }
        }
        let labels = match labels {
            Some(labels) => {
                if labels.len() != states.len() {
                    return Err(StatesError::InvalidLabels(format!(
                        "{} labels for {} states",
                        labels.len(),
                        states.len()
                    )));
                }
                for (i, a) in labels.iter().enumerate() {
                    if a.is_empty() || a == crate::protocol::INCONCLUSIVE {
                        return Err(StatesError::InvalidLabels(format!("reserved label {a:?}")));
                    }
                    if labels[..i].contains(a) {
                        return Err(StatesError::InvalidLabels(format!("duplicate label {a:?}")));
                    }
                }
                labels
            }
            None => (1..=states.len()).map(|l| format!("psi_{l}")).collect(),
        };

        let (states, reorthonormalized) = if opts.reorthonormalize {
            let gs =
                numerics::gram_schmidt(&states, InnerProduct::Complex, numerics::DEFAULT_RANK_TOL);
            if gs.rank < states.len() {
                let (first, second, overlap) = worst_overlap(&states);
                return Err(StatesError::NotOrthonormal {
                    first,
                    second,
                    overlap,
                });
            }
            (gs.basis, true)
        } else {
            (states, false)
        };

        let (first, second, _) = worst_overlap(&states);
        let dev = overlap_deviation(&states, first - 1, second - 1);
        if dev > opts.ortho_tol {
            return Err(StatesError::NotOrthonormal {
                first,
                second,
                overlap: states[first - 1].dotc(&states[second - 1]).norm(),
            });
        }
        Ok(Self {
            dim_a,
            dim_b,
            states,
            labels,
            reorthonormalized,
        })
    }

    pub fn from_file(file: StateFile, opts: LoadOptions) -> Result<Self, StatesError> {
        let states = file
            .states
            .iter()
            .map(|amps| {
                CVector::from_iterator(amps.len(), amps.iter().map(|[re, im]| C64::new(*re, *im)))
            })
            .collect();
        Self::new(file.dim_a, file.dim_b, states, file.labels, opts)
    }

    pub fn to_file(&self) -> StateFile {
        StateFile {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            states: self
                .states
                .iter()
                .map(|s| s.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            labels: Some(self.labels.clone()),
        }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }
    pub fn dim_b(&self) -> usize {
        self.dim_b
    }
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn states(&self) -> &[CVector] {
        &self.states
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
    pub fn reorthonormalized(&self) -> bool {
        self.reorthonormalized
    }

    pub fn operators(&self) -> OperatorRep {
        OperatorRep {
            matrices: self
                .states
                .iter()
                .map(|s| to_operator(s, self.dim_a, self.dim_b).expect("validated dims"))
                .collect(),
        }
    }
}

fn overlap_deviation(states: &[CVector], i: usize, j: usize) -> f64 {
    let target = if i == j { 1.0 } else { 0.0 };
    (states[i].dotc(&states[j]) - C64::new(target, 0.0)).norm()
}

/// 1-based pair with the largest deviation from `delta_ij`, with its overlap magnitude.
fn worst_overlap(states: &[CVector]) -> (usize, usize, f64) {
    let mut worst = (0, 0, -1.0_f64);
    for i in 0..states.len() {
        for j in i..states.len() {
            let dev = overlap_deviation(states, i, j);
            if dev > worst.2 {
                worst = (i, j, dev);
            }
        }
    }
    let overlap = states[worst.0].dotc(&states[worst.1]).norm();
    (worst.0 + 1, worst.1 + 1, overlap)
}

/// Parse and validate a JSON state file.
pub fn load_family<R: Read>(source: R, opts: LoadOptions) -> Result<StateFamily, StatesError> {
    let file: StateFile =
        serde_json::from_reader(source).map_err(|e| StatesError::Parse(e.to_string()))?;
    StateFamily::from_file(file, opts)
}

/// The matrices `X_l`, each `dA x dB`.
#[derive(Debug, Clone)]
pub struct OperatorRep {
    pub matrices: Vec<CMatrix>,
}

impl OperatorRep {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
    pub fn dim_b(&self) -> usize {
        self.matrices.first().map_or(0, |x| x.ncols())
    }

    /// `xi_k^l = X_l g` for every state.
    pub fn conditional_states(&self, g: &CVector) -> Vec<CVector> {
        self.matrices.iter().map(|x| x * g).collect()
    }
}

pub fn to_operator(psi: &CVector, dim_a: usize, dim_b: usize) -> Result<CMatrix, StatesError> {
    if psi.len() != dim_a * dim_b {
        return Err(StatesError::DimensionMismatch(format!(
            "vector of length {} cannot be reshaped to {dim_a}x{dim_b}",
            psi.len()
        )));
    }
    Ok(CMatrix::from_row_slice(dim_a, dim_b, psi.as_slice()))
}

pub fn from_operator(x: &CMatrix) -> CVector {
    CVector::from_iterator(x.nrows() * x.ncols(), x.transpose().iter().copied())
}

/// Per-state Schmidt probabilities, descending, `min(dA, dB)` entries each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtProfile {
    pub per_state: Vec<Vec<f64>>,
}

impl SchmidtProfile {
    /// Sum of the `n` largest coefficients of state `l` (fewer if the profile is shorter).
    pub fn head_sum(&self, l: usize, n: usize) -> f64 {
        self.per_state[l].iter().take(n).fold(0.0, |acc, p| acc + p)
    }
}

pub fn schmidt_profile(family: &StateFamily) -> Result<SchmidtProfile, StatesError> {
    let rep = family.operators();
    let per_state = rep
        .matrices
        .iter()
        .map(|x| Ok(numerics::svd(x)?.singulars.iter().map(|s| s * s).collect()))
        .collect::<Result<Vec<Vec<f64>>, NumericsError>>()?;
    Ok(SchmidtProfile { per_state })
}

/// Complex conjugation with respect to the computational basis of B.
pub fn conjugate_j(v: &CVector) -> CVector {
    v.conjugate()
}
