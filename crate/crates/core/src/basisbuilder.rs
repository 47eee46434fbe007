//! Builds an orthonormal basis `g_1..g_dB` of `H_B` whose members (past the
//! leading error slots) satisfy `<g_k, A_i g_k> = 0` for every operator.
//!
//! Each step compresses the operators onto the orthogonal complement of the
//! vectors chosen so far, finds a zero vector there, lifts it back, and
//! shrinks the complement. Compression preserves tracelessness, because the
//! chosen vectors contribute nothing to the trace.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::jnr::{self, JnrError, ZeroFinderOptions, ZeroMethod};
use crate::numerics::{self, CMatrix, CVector};

#[derive(Debug, Clone)]
pub struct DistinguishingBasis {
    /// `g_1..g_dB`; the first `error_slots` carry no zero guarantee.
    pub vectors: Vec<CVector>,
    pub error_slots: usize,
    /// `sqrt(sum_i <g_k, A_i g_k>^2)` per vector, in ambient coordinates.
    pub residuals: Vec<f64>,
    /// `None` for error slots.
    pub methods: Vec<Option<ZeroMethod>>,
    /// After step `k`: largest `|Tr|` of the operators compressed onto what remains.
    pub trace_history: Vec<f64>,
    /// The last zero vector was the leftover one-dimensional complement, taken without a search.
    pub unsolved_final: bool,
    /// Produced in best-effort mode, without a convexity guarantee.
    pub best_effort: bool,
}

impl DistinguishingBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.vectors)
    }

    /// Vectors carrying the zero guarantee.
    pub fn zero_vectors(&self) -> &[CVector] {
        &self.vectors[self.error_slots..]
    }
}

#[derive(Debug, Error, Clone)]
pub enum BuildError {
    #[error("{0} operators: no convexity guarantee for the basis construction")]
    Unsupported(usize),
    #[error("zero-vector search failed after {} basis vectors: {source}", .partial.len())]
    SearchFailed {
        partial: Vec<CVector>,
        #[source]
        source: JnrError,
    },
    #[error("lifted vector {index} has ambient residual {residual:e}")]
    Drift { index: usize, residual: f64 },
}

/// Number of leading slots without a zero guarantee, for `n` operators on a `dim`-dimensional space.
pub fn error_slots_for(n: usize, dim: usize) -> Option<usize> {
    match n {
        0..=2 => Some(0),
        3 => Some(2.min(dim)),
        _ => None,
    }
}

/// Matrices of `<b_j, A_i b_k>` over the orthonormal columns of `complement`.
pub fn compress(ops: &[CMatrix], complement: &CMatrix) -> Vec<CMatrix> {
    let adj = complement.adjoint();
    ops.iter()
        .map(|a| {
            let c = &adj * a * complement;
            (&c + c.adjoint()).scale(0.5)
        })
        .collect()
}

pub fn build_distinguishing_basis<R: Rng + ?Sized>(
    ops: &[CMatrix],
    dim_b: usize,
    opts: &ZeroFinderOptions,
    rng: &mut R,
) -> Result<DistinguishingBasis, BuildError> {
    let n = ops.len();
    let best_effort = n >= 4;
    let n_p = match error_slots_for(n, dim_b) {
        Some(p) => p,
        None if opts.best_effort => 0,
        None => return Err(BuildError::Unsupported(n)),
    };
    let drift_tol = opts.zero_tol * 10.0;

    let mut chosen: Vec<CVector> = Vec::with_capacity(dim_b);
    let mut methods = Vec::with_capacity(dim_b);
    let mut trace_history = Vec::new();
    let mut unsolved_final = false;
    let mut complement = CMatrix::identity(dim_b, dim_b);

    while complement.ncols() > n_p {
        let r = complement.ncols();
        if r == 1 && n <= 2 {
            // compressed traces telescope to zero, so the leftover vector already works
            let g = complement.column(0).into_owned();
            chosen.push(g);
            methods.push(Some(ZeroMethod::Dim1Trace));
            complement = CMatrix::zeros(dim_b, 0);
            unsolved_final = true;
            break;
        }
        let compressed = compress(ops, &complement);
        let found = match jnr::find_zero_vector(&compressed, r, opts, rng) {
            Ok(found) => found,
            // leave the rest as error slots
            Err(JnrError::SearchFailed { .. }) if best_effort => break,
            Err(source) => {
                return Err(BuildError::SearchFailed {
                    partial: chosen,
                    source,
                })
            }
        };
        let mut g = &complement * &found.vector;
        for _ in 0..2 {
            for c in &chosen {
                g -= c * c.dotc(&g);
            }
        }
        let norm = g.norm();
        g.unscale_mut(norm);
        let ambient = jnr::residual(ops, &g);
        if ambient > drift_tol {
            return Err(BuildError::Drift {
                index: chosen.len() + 1,
                residual: ambient,
            });
        }
        chosen.push(g);
        methods.push(Some(found.method));
        complement = &complement * numerics::complement_basis(&found.vector);
        if complement.ncols() > 0 {
            let remaining = compress(ops, &complement);
            trace_history.push(
                remaining
                    .iter()
                    .map(|a| a.trace().norm())
                    .fold(0.0, f64::max),
            );
        }
    }

    let error_slots = complement.ncols();
    let mut vectors: Vec<CVector> = (0..error_slots)
        .map(|j| complement.column(j).into_owned())
        .collect();
    vectors.extend(chosen);
    let mut all_methods = vec![None; error_slots];
    all_methods.extend(methods);
    let residuals = vectors.iter().map(|g| jnr::residual(ops, g)).collect();
    Ok(DistinguishingBasis {
        vectors,
        error_slots,
        residuals,
        methods: all_methods,
        trace_history,
        unsolved_final,
        best_effort,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisReport {
    /// Largest `|<g_k, A_i g_k>|` over guaranteed slots.
    pub max_residual: f64,
    pub gram_deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn verify_basis(ops: &[CMatrix], basis: &DistinguishingBasis, tol: f64) -> BasisReport {
    let max_residual = basis
        .zero_vectors()
        .iter()
        .flat_map(|g| {
            ops.iter()
                .map(move |a| numerics::quadratic_form(a, g).norm())
        })
        .fold(0.0_f64, f64::max);
    let gram_deviation = if basis.vectors.is_empty() {
        0.0
    } else {
        numerics::orthonormality_deviation(&basis.as_matrix())
    };
    BasisReport {
        max_residual,
        gram_deviation,
        tol,
        pass: max_residual <= tol && gram_deviation <= tol,
    }
}
