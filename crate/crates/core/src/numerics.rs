//! Dense complex linear algebra used throughout the pipeline.
//!
//! Matrices and vectors are `nalgebra` dynamic types over `Complex64`. The
//! eigen- and singular-value routines wrap `nalgebra`'s decompositions and
//! add the conventions the rest of the crate relies on: descending order,
//! stable tie-breaking, and explicit error values instead of `Option`.

use nalgebra::{allocator::Allocator, DefaultAllocator, Dim, OMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;

/// Entrywise tolerance on `|A - A*|` accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Default relative rank cutoff for [`gram_schmidt`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not Hermitian (max entrywise deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("{routine} did not converge")]
    NoConvergence { routine: &'static str },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
}

pub type Result<T, E = NumericsError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector of `values[j]`.
    pub vectors: CMatrix,
}

#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k` with orthonormal columns, `k = min(rows, cols)`.
    pub left: CMatrix,
    /// Non-negative, descending.
    pub singulars: Vec<f64>,
    /// `cols x k` with orthonormal columns.
    pub right: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.left.clone();
        for (j, s) in self.singulars.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.adjoint()
    }
}

/// Largest entrywise modulus of `A - A*`.
pub fn hermiticity_deviation(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Indices that sort `values` descending; equal values keep their input order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    let deviation = hermiticity_deviation(a);
    if deviation > HERMITIAN_TOL {
        return Err(NumericsError::NotHermitian { deviation });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_ITERATIONS).ok_or(
        NumericsError::NoConvergence {
            routine: "hermitian_eig",
        },
    )?;
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&raw);
    let n = a.nrows();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen {
        values: order.iter().map(|&j| raw[j]).collect(),
        vectors,
    })
}

/// Thin singular value decomposition `X = U diag(s) V*`.
pub fn svd(x: &CMatrix) -> Result<Svd> {
    let k = x.nrows().min(x.ncols());
    let dec = SVD::try_new(x.clone(), true, true, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(NumericsError::NoConvergence { routine: "svd" })?;
    let (u, v_t) = match (dec.u, dec.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(NumericsError::NoConvergence { routine: "svd" }),
    };
    let raw: Vec<f64> = dec.singular_values.iter().copied().collect();
    let order = descending_order(&raw);
    let v = v_t.adjoint();
    let mut left = CMatrix::zeros(x.nrows(), k);
    let mut right = CMatrix::zeros(x.ncols(), k);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &v.column(src));
    }
    Ok(Svd {
        left,
        singulars: order.iter().map(|&j| raw[j].max(0.0)).collect(),
        right,
    })
}

/// Hilbert-Schmidt inner product `Tr(A* B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(NumericsError::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(a.dotc(b))
}

/// `<z, A z>` with the physics convention (antilinear in the first slot).
pub fn quadratic_form(a: &CMatrix, z: &CVector) -> C64 {
    z.dotc(&(a * z))
}

/// Which inner product [`gram_schmidt`] orthonormalizes against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerProduct {
    /// `<u, v> = sum conj(u_i) v_i` (Hilbert-Schmidt for matrices).
    Complex,
    /// `Re <u, v>`; spans are taken over the reals.
    Real,
}

#[derive(Debug, Clone)]
pub struct Orthonormalized<T> {
    pub basis: Vec<T>,
    pub rank: usize,
    /// Norm left after projecting out earlier members, one per input.
    pub residual_norms: Vec<f64>,
    /// Absolute cutoff actually applied (`rank_tol` times the largest input norm).
    pub abs_tol: f64,
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// `rank_tol` is relative to the largest input norm; inputs whose residual
/// falls below it are dropped.
pub fn gram_schmidt<R: Dim, C: Dim>(
    items: &[OMatrix<C64, R, C>],
    kind: InnerProduct,
    rank_tol: f64,
) -> Orthonormalized<OMatrix<C64, R, C>>
where
    DefaultAllocator: Allocator<R, C>,
{
    let scale = items.iter().map(|m| m.norm()).fold(0.0_f64, f64::max);
    let abs_tol = rank_tol * scale;
    let mut basis: Vec<OMatrix<C64, R, C>> = Vec::new();
    let mut residual_norms = Vec::with_capacity(items.len());
    for item in items {
        let mut w = item.clone();
        for _ in 0..2 {
            for u in &basis {
                let c = match kind {
                    InnerProduct::Complex => u.dotc(&w),
                    InnerProduct::Real => C64::new(u.dotc(&w).re, 0.0),
                };
                w -= u * c;
            }
        }
        let norm = w.norm();
        residual_norms.push(norm);
        if scale > 0.0 && norm >= abs_tol {
            w.unscale_mut(norm);
            basis.push(w);
        }
    }
    Orthonormalized {
        rank: basis.len(),
        basis,
        residual_norms,
        abs_tol,
    }
}

/// Haar-random unit vector: i.i.d. standard complex Gaussians, normalized.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    assert!(dim >= 1, "random_unit_vector needs dim >= 1");
    loop {
        let v = CVector::from_iterator(
            dim,
            (0..dim).map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im)
            }),
        );
        let n = v.norm();
        if n > 1e-300 {
            return v.unscale(n);
        }
    }
}

/// Haar-random unitary: orthonormalized Gaussian columns.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    loop {
        let cols: Vec<CVector> = (0..dim).map(|_| random_unit_vector(dim, rng)).collect();
        let gs = gram_schmidt(&cols, InnerProduct::Complex, 1e-6);
        if gs.rank == dim {
            return CMatrix::from_columns(&gs.basis);
        }
    }
}

/// Largest entrywise deviation of the Gram matrix of `columns` from identity.
pub fn orthonormality_deviation(columns: &CMatrix) -> f64 {
    let gram = columns.adjoint() * columns;
    let n = gram.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Orthonormal basis (as columns) of the complement of unit `v` in `C^n`.
///
/// Columns `2..n` of the Householder reflector that maps `v` onto a multiple of `e_1`.
pub fn complement_basis(v: &CVector) -> CMatrix {
    let n = v.len();
    let phase = if v[0].norm() > 0.0 {
        v[0] / v[0].norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let mut w = v.clone();
    // w = v - alpha e_1 with alpha = -phase |v|, so no cancellation in w[0]
    w[0] += phase * v.norm();
    let w_norm2 = w.norm_squared();
    let mut q = CMatrix::zeros(n, n.saturating_sub(1));
    for j in 1..n {
        // H e_j = e_j - 2 w (w* e_j) / |w|^2
        let coef = w[j].conj() * (2.0 / w_norm2);
        let mut col = w.scale(-1.0) * coef;
        col[j] += C64::new(1.0, 0.0);
        q.set_column(j - 1, &col);
    }
    q
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
