//! The real space `K` of traceless Hermitian operators on `H_B` spanned by
//! `X_m* X_l + X_l* X_m` and `i (X_m* X_l - X_l* X_m)` for `m != l`.

use serde::Serialize;

use crate::numerics::{self, hermiticity_deviation, CMatrix, CVector, InnerProduct, C64};
use crate::states::OperatorRep;

/// Default relative rank cutoff when extracting a basis of `K`.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Table of `G[m][l] = X_m* X_l`.
#[derive(Debug, Clone)]
pub struct GramTable {
    entries: Vec<Vec<CMatrix>>,
}

impl GramTable {
    pub fn get(&self, m: usize, l: usize) -> &CMatrix {
        &self.entries[m][l]
    }
    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn gram_operators(rep: &OperatorRep) -> GramTable {
    let entries = rep
        .matrices
        .iter()
        .map(|xm| {
            let xm_adj = xm.adjoint();
            rep.matrices.iter().map(|xl| &xm_adj * xl).collect()
        })
        .collect();
    GramTable { entries }
}

/// The `M(M-1)` raw generators, ordered by pair `(m, l)` with `m < l`:
/// symmetric part first, then antisymmetric part.
pub fn generators(gram: &GramTable) -> Vec<CMatrix> {
    let i = C64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(gram.len() * gram.len().saturating_sub(1));
    for m in 0..gram.len() {
        for l in (m + 1)..gram.len() {
            let (gml, glm) = (gram.get(m, l), gram.get(l, m));
            out.push(gml + glm);
            out.push((gml - glm) * i);
        }
    }
    out
}

/// HS-orthonormal basis `A_1..A_N` of `K`.
#[derive(Debug, Clone)]
pub struct KSpaceBasis {
    pub operators: Vec<CMatrix>,
    pub generator_count: usize,
    pub rank_tol: f64,
    /// Residual norms within 10x of the cutoff (either side), relative to the largest generator.
    pub near_threshold: Vec<f64>,
}

impl KSpaceBasis {
    pub fn dim(&self) -> usize {
        self.operators.len()
    }

    pub fn has_near_threshold_rank(&self) -> bool {
        !self.near_threshold.is_empty()
    }

    /// Coordinates `<z, A_i z>` of a single vector.
    pub fn forms(&self, z: &CVector) -> Vec<f64> {
        self.operators
            .iter()
            .map(|a| numerics::quadratic_form(a, z).re)
            .collect()
    }
}

pub fn build_kspace(rep: &OperatorRep, rank_tol: f64) -> KSpaceBasis {
    let gens = generators(&gram_operators(rep));
    let dim_b = rep.dim_b();
    let generator_count = gens.len();
    // generators of unit states have HS norm at most 2; below rank_tol they are all numerical zero
    let scale = gens.iter().map(|g| g.norm()).fold(0.0_f64, f64::max);
    if gens.is_empty() || scale < rank_tol {
        return KSpaceBasis {
            operators: Vec::new(),
            generator_count,
            rank_tol,
            near_threshold: Vec::new(),
        };
    }
    let gs = numerics::gram_schmidt(&gens, InnerProduct::Real, rank_tol);
    let near_threshold = if scale > 0.0 {
        gs.residual_norms
            .iter()
            .map(|r| r / scale)
            .filter(|r| *r > rank_tol / 10.0 && *r < rank_tol * 10.0)
            .collect()
    } else {
        Vec::new()
    };
    // re-symmetrize to scrub rounding noise in the anti-Hermitian part
    let operators = gs
        .basis
        .into_iter()
        .map(|a| {
            debug_assert_eq!(a.nrows(), dim_b);
            (&a + a.adjoint()).scale(0.5)
        })
        .collect();
    KSpaceBasis {
        operators,
        generator_count,
        rank_tol,
        near_threshold,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TracelessReport {
    pub traces: Vec<f64>,
    pub hermiticity: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

pub fn verify_traceless(operators: &[CMatrix], tol: f64) -> TracelessReport {
    let traces: Vec<f64> = operators.iter().map(|a| a.trace().norm()).collect();
    let hermiticity: Vec<f64> = operators.iter().map(hermiticity_deviation).collect();
    let pass = traces.iter().chain(&hermiticity).all(|r| *r <= tol);
    TracelessReport {
        traces,
        hermiticity,
        tol,
        pass,
    }
}

/// Largest `|<X_l g, X_m g>|` over `l != m`: zero exactly when `g` separates the family.
pub fn cross_overlap(rep: &OperatorRep, g: &CVector) -> f64 {
    let xi = rep.conditional_states(g);
    let mut worst = 0.0_f64;
    for l in 0..xi.len() {
        for m in (l + 1)..xi.len() {
            worst = worst.max(xi[l].dotc(&xi[m]).norm());
        }
    }
    worst
}
