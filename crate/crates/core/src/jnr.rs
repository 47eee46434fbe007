//! Joint numerical range of a tuple of Hermitian operators and a
//! constructive finder for unit vectors `z` with `<z, A_i z> = 0` for all `i`.
//!
//! For a traceless tuple the origin lies in the joint numerical range
//! whenever that range is convex: always for one or two operators
//! (Toeplitz-Hausdorff), and for three operators once the space has
//! dimension at least three. The finder turns that existence statement into
//! a procedure:
//!
//! * `N = 1`: mix a positive and a negative eigenvector.
//! * `N = 2`: the diagonal of `B = A_1 + i A_2` sums to zero in any basis, so
//!   the origin is a convex combination of at most three diagonal entries.
//!   Each combination step is a 2x2 numerical range problem with an exact
//!   solution.
//! * `N >= 3`: Gauss-Newton on the sphere from several Haar-random starts.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{self, hermiticity_deviation, CMatrix, CVector, NumericsError, C64};

pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
pub const DEFAULT_STARTS: usize = 32;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;
/// Precondition on `|Tr A_i|`, relative to `max(1, |A_i|_F)`.
pub const TRACE_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-10;
const EIGEN_ZERO_TOL: f64 = 1e-12;
const TARGET_MARGIN: f64 = 1e-9;
const GRID: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JnrError {
    #[error("vector is not unit (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("operator shapes do not match the {dim}-dimensional space")]
    ShapeMismatch { dim: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("zero-vector search failed: best residual {residual:e}")]
    SearchFailed { best: CVector, residual: f64 },
    #[error("target {target} lies outside the numerical range")]
    TargetOutsideRange { target: C64 },
    #[error("origin is not in the convex hull (distance {distance:e})")]
    NotInHull { distance: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T, E = JnrError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JnrPoint {
    pub coords: Vec<f64>,
}

/// How a zero vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroMethod {
    /// No operators: any unit vector works.
    NoConstraints,
    /// One-dimensional space; the value is the (vanishing) trace.
    Dim1Trace,
    EigPair,
    Caratheodory2,
    Optimize3,
}

#[derive(Debug, Clone)]
pub struct ZeroVectorResult {
    pub vector: CVector,
    /// `sqrt(sum_i <z, A_i z>^2)`.
    pub residual: f64,
    pub method: ZeroMethod,
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroFinderOptions {
    pub zero_tol: f64,
    pub starts: usize,
    pub max_iterations: usize,
    /// Allow `N >= 4`, where no convexity guarantee backs the search.
    pub best_effort: bool,
}

impl Default for ZeroFinderOptions {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
            starts: DEFAULT_STARTS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            best_effort: false,
        }
    }
}

fn forms(ops: &[CMatrix], z: &CVector) -> Vec<f64> {
    ops.iter()
        .map(|a| numerics::quadratic_form(a, z).re)
        .collect()
}

/// `sqrt(sum_i <z, A_i z>^2)` without unit-norm validation.
pub fn residual(ops: &[CMatrix], z: &CVector) -> f64 {
    forms(ops, z).iter().map(|q| q * q).sum::<f64>().sqrt()
}

fn check_shapes(ops: &[CMatrix], dim: usize) -> Result<()> {
    if ops.iter().any(|a| a.shape() != (dim, dim)) {
        return Err(JnrError::ShapeMismatch { dim });
    }
    Ok(())
}

pub fn evaluate_point(ops: &[CMatrix], z: &CVector) -> Result<JnrPoint> {
    check_shapes(ops, z.len())?;
    let norm = z.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(JnrError::NotUnit { norm });
    }
    for a in ops {
        let deviation = hermiticity_deviation(a);
        if deviation > numerics::HERMITIAN_TOL * a.norm().max(1.0) {
            return Err(NumericsError::NotHermitian { deviation }.into());
        }
    }
    Ok(JnrPoint {
        coords: forms(ops, z),
    })
}

/// Points of the joint numerical range restricted to the span of the
/// (orthonormal) columns of `subspace`, from Haar-random unit vectors.
pub fn sample_range<R: Rng + ?Sized>(
    ops: &[CMatrix],
    subspace: &CMatrix,
    count: usize,
    rng: &mut R,
) -> Result<Vec<JnrPoint>> {
    check_shapes(ops, subspace.nrows())?;
    let r = subspace.ncols();
    (0..count)
        .map(|_| {
            let z = subspace * numerics::random_unit_vector(r, rng);
            Ok(JnrPoint {
                coords: forms(ops, &z),
            })
        })
        .collect()
}

/// Writes points as CSV with header `x1,...,xN`.
pub fn write_csv<W: Write>(points: &[JnrPoint], n: usize, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=n).map(|i| format!("x{i}")))?;
    for p in points {
        w.write_record(p.coords.iter().map(|x| x.to_string()))?;
    }
    w.flush()
}

/// Finds a unit `z` in `C^dim` with `<z, A_i z> = 0` for every operator.
pub fn find_zero_vector<R: Rng + ?Sized>(
    ops: &[CMatrix],
    dim: usize,
    opts: &ZeroFinderOptions,
    rng: &mut R,
) -> Result<ZeroVectorResult> {
    if dim == 0 {
        return Err(JnrError::PreconditionViolated("empty space".into()));
    }
    check_shapes(ops, dim)?;
    for (i, a) in ops.iter().enumerate() {
        let scale = a.norm().max(1.0);
        let deviation = hermiticity_deviation(a);
        if deviation > numerics::HERMITIAN_TOL * scale {
            return Err(NumericsError::NotHermitian { deviation }.into());
        }
        let trace = a.trace().norm();
        if trace > TRACE_TOL * scale {
            return Err(JnrError::PreconditionViolated(format!(
                "operator {} has trace {trace:e}",
                i + 1
            )));
        }
    }
    let n = ops.len();
    if n == 3 && dim <= 2 {
        return Err(JnrError::PreconditionViolated(
            "three operators need a space of dimension at least 3".into(),
        ));
    }
    if n >= 4 && !opts.best_effort {
        return Err(JnrError::PreconditionViolated(format!(
            "{n} operators: no convexity guarantee (enable best-effort to search anyway)"
        )));
    }

    let first = || {
        let mut e = CVector::zeros(dim);
        e[0] = C64::new(1.0, 0.0);
        e
    };
    let (candidate, method) = if n == 0 {
        (first(), ZeroMethod::NoConstraints)
    } else if dim == 1 {
        (first(), ZeroMethod::Dim1Trace)
    } else if n == 1 {
        (eig_pair_zero(&ops[0])?, ZeroMethod::EigPair)
    } else if n == 2 {
        (pair_zero(&ops[0], &ops[1])?, ZeroMethod::Caratheodory2)
    } else {
        return multistart(ops, dim, opts, rng);
    };

    let res = residual(ops, &candidate);
    if res <= opts.zero_tol || method == ZeroMethod::Dim1Trace {
        return Ok(ZeroVectorResult {
            vector: candidate,
            residual: res,
            method,
        });
    }
    let (vector, residual) = refine(ops, candidate, opts.max_iterations, opts.zero_tol);
    if residual <= opts.zero_tol {
        Ok(ZeroVectorResult {
            vector,
            residual,
            method,
        })
    } else {
        Err(JnrError::SearchFailed {
            best: vector,
            residual,
        })
    }
}

/// `cos(t) v_+ + sin(t) v_-` balancing the extreme eigenvalues.
fn eig_pair_zero(a: &CMatrix) -> Result<CVector> {
    let eig = numerics::hermitian_eig(a)?;
    let d = eig.values.len();
    if let Some(j) = eig.values.iter().position(|v| v.abs() <= EIGEN_ZERO_TOL) {
        return Ok(eig.vectors.column(j).into_owned());
    }
    let (plus, minus) = (eig.values[0], eig.values[d - 1]);
    if plus <= 0.0 || minus >= 0.0 {
        // only reachable through trace error; hand the closest eigenvector to refinement
        let j = if plus.abs() < minus.abs() { 0 } else { d - 1 };
        return Ok(eig.vectors.column(j).into_owned());
    }
    let total = plus - minus;
    let (c, s) = ((-minus / total).sqrt(), (plus / total).sqrt());
    Ok(eig.vectors.column(0) * C64::new(c, 0.0) + eig.vectors.column(d - 1) * C64::new(s, 0.0))
}

fn pair_zero(a1: &CMatrix, a2: &CMatrix) -> Result<CVector> {
    let dim = a1.nrows();
    let i = C64::new(0.0, 1.0);
    let mut b = a1 + a2 * i;
    // shift to an exactly trace-free B; refinement absorbs the difference
    let shift = b.trace() / dim as f64;
    for k in 0..dim {
        b[(k, k)] -= shift;
    }
    let points: Vec<[f64; 2]> = (0..dim).map(|k| [b[(k, k)].re, b[(k, k)].im]).collect();
    let sel = caratheodory_select(&points)?;
    let unit = |k: usize| {
        let mut e = CVector::zeros(dim);
        e[k] = C64::new(1.0, 0.0);
        e
    };
    match sel.indices.as_slice() {
        [k] => Ok(unit(*k)),
        [j, k] => Ok(two_point_zero(
            &b,
            &unit(*j),
            &unit(*k),
            C64::new(0.0, 0.0),
        )?),
        [a_, b_, c_] => {
            let idx = [*a_, *b_, *c_];
            let lam = &sel.weights;
            // pair whose segment passes nearest the origin goes first
            let pairs = [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)];
            let (p, q, r) = pairs
                .iter()
                .copied()
                .min_by(|x, y| {
                    segment_distance(points[idx[x.0]], points[idx[x.1]])
                        .total_cmp(&segment_distance(points[idx[y.0]], points[idx[y.1]]))
                })
                .expect("three pairs");
            let w_pq = lam[p] + lam[q];
            let target = (b[(idx[p], idx[p])] * lam[p] + b[(idx[q], idx[q])] * lam[q]) / w_pq;
            let y = two_point_zero(&b, &unit(idx[p]), &unit(idx[q]), target)?;
            Ok(two_point_zero(&b, &y, &unit(idx[r]), C64::new(0.0, 0.0))?)
        }
        _ => unreachable!("selection has 1..=3 indices"),
    }
}

/// Solves `<z, B z> = target` inside `span{u, v}` (orthonormal `u`, `v`).
fn two_point_zero(b: &CMatrix, u: &CVector, v: &CVector, target: C64) -> Result<CVector> {
    let (bu, bv) = (b * u, b * v);
    let b2 = CMatrix::from_row_slice(2, 2, &[u.dotc(&bu), u.dotc(&bv), v.dotc(&bu), v.dotc(&bv)]);
    let y = solve_2x2_target(&b2, target)?;
    Ok(u * y[0] + v * y[1])
}

fn segment_distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (-(p[0] * d[0] + p[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] + t * d[0]).hypot(p[1] + t * d[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaratheodorySelection {
    pub indices: Vec<usize>,
    /// Convex weights matching `indices`.
    pub weights: Vec<f64>,
    /// Every point was numerically zero; a single index was returned.
    pub degenerate: bool,
}

/// At most three of `points` whose convex hull contains the origin, with weights.
pub fn caratheodory_select(points: &[[f64; 2]]) -> Result<CaratheodorySelection> {
    if points.is_empty() {
        return Err(JnrError::PreconditionViolated("no points".into()));
    }
    let norm = |p: [f64; 2]| p[0].hypot(p[1]);
    let scale = points.iter().map(|p| norm(*p)).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Ok(CaratheodorySelection {
            indices: vec![0],
            weights: vec![1.0],
            degenerate: true,
        });
    }
    let tol = 1e-10 * scale;

    let (k_min, d_min) = points.iter().enumerate().map(|(k, p)| (k, norm(*p))).fold(
        (0, f64::INFINITY),
        |best, cur| if cur.1 < best.1 { cur } else { best },
    );
    if d_min <= tol {
        return Ok(CaratheodorySelection {
            indices: vec![k_min],
            weights: vec![1.0],
            degenerate: false,
        });
    }

    let mut best_pair: Option<(usize, usize, f64, f64)> = None;
    for j in 0..points.len() {
        for k in (j + 1)..points.len() {
            let (p, q) = (points[j], points[k]);
            let d = [q[0] - p[0], q[1] - p[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            if len2 == 0.0 {
                continue;
            }
            let t = (-(p[0] * d[0] + p[1] * d[1]) / len2).clamp(0.0, 1.0);
            let dist = (p[0] + t * d[0]).hypot(p[1] + t * d[1]);
            if best_pair.is_none_or(|b| dist < b.2) {
                best_pair = Some((j, k, dist, t));
            }
        }
    }
    if let Some((j, k, dist, t)) = best_pair {
        if dist <= tol {
            return Ok(CaratheodorySelection {
                indices: vec![j, k],
                weights: vec![1.0 - t, t],
                degenerate: false,
            });
        }
    }

    let cross = |p: [f64; 2], q: [f64; 2]| p[0] * q[1] - p[1] * q[0];
    let mut best_tri: Option<([usize; 3], [f64; 3], f64)> = None;
    for a in 0..points.len() {
        for b in (a + 1)..points.len() {
            for c in (b + 1)..points.len() {
                let (pa, pb, pc) = (points[a], points[b], points[c]);
                let area = cross(pa, pb) + cross(pb, pc) + cross(pc, pa);
                if area.abs() <= f64::EPSILON * scale * scale {
                    continue;
                }
                let lam = [
                    cross(pb, pc) / area,
                    cross(pc, pa) / area,
                    cross(pa, pb) / area,
                ];
                let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
                if best_tri.is_none_or(|t| worst > t.2) {
                    best_tri = Some(([a, b, c], lam, worst));
                }
            }
        }
    }
    if let Some((idx, lam, worst)) = best_tri {
        if worst >= -1e-12 {
            let clamped = lam.map(|l| l.max(0.0));
            let total: f64 = clamped.iter().sum();
            return Ok(CaratheodorySelection {
                indices: idx.to_vec(),
                weights: clamped.iter().map(|l| l / total).collect(),
                degenerate: false,
            });
        }
    }
    Err(JnrError::NotInHull {
        distance: best_pair.map_or(d_min, |p| p.2.min(d_min)),
    })
}

fn f_2x2(b: &CMatrix, t: f64, phi: f64) -> C64 {
    let (c, s) = (t.cos(), t.sin());
    let e = C64::from_polar(1.0, phi);
    b[(0, 0)] * (c * c) + b[(1, 1)] * (s * s) + (b[(0, 1)] * e + b[(1, 0)] * e.conj()) * (c * s)
}

fn z_2x2(t: f64, phi: f64) -> CVector {
    CVector::from_vec(vec![C64::new(t.cos(), 0.0), C64::from_polar(t.sin(), phi)])
}

/// Whether `w` lies in the (elliptical) numerical range of a 2x2 matrix, up to `margin`.
fn in_2x2_range(b: &CMatrix, w: C64, margin: f64) -> bool {
    let center = (b[(0, 0)] + b[(1, 1)]) * 0.5;
    let half_gap = (b[(0, 0)] - b[(1, 1)]) * 0.5;
    let root = (half_gap * half_gap + b[(0, 1)] * b[(1, 0)]).sqrt();
    let (l1, l2) = (center + root, center - root);
    let minor2 = (b.norm_squared() - l1.norm_sqr() - l2.norm_sqr()).max(0.0);
    let major = ((l1 - l2).norm_sqr() + minor2).sqrt();
    (w - l1).norm() + (w - l2).norm() <= major + margin
}

/// Unit `z` in `C^2` with `<z, B z> = w` for `w` in the numerical range of `B`.
///
/// Targets on the segment between the diagonal entries have a closed form;
/// other targets go through a 64x64 grid over `z = (cos t, sin t e^{i phi})`
/// followed by damped Newton on the two real equations.
pub fn solve_2x2_target(b: &CMatrix, w: C64) -> Result<CVector> {
    if b.shape() != (2, 2) {
        return Err(JnrError::ShapeMismatch { dim: 2 });
    }
    let scale = b.norm().max(1.0);
    if !in_2x2_range(b, w, TARGET_MARGIN * scale) {
        return Err(JnrError::TargetOutsideRange { target: w });
    }
    let tol = 1e-10 * scale;
    let (b11, b22) = (b[(0, 0)], b[(1, 1)]);
    if (w - b11).norm() <= 1e-14 * scale {
        return Ok(z_2x2(0.0, 0.0));
    }
    if (w - b22).norm() <= 1e-14 * scale {
        return Ok(z_2x2(std::f64::consts::FRAC_PI_2, 0.0));
    }
    let delta = b11 - b22;
    if delta.norm() > 0.0 {
        let mu = ((w - b22) * delta.conj()).re / delta.norm_sqr();
        let off_segment = (b22 + delta * mu - w).norm();
        if (-1e-12..=1.0 + 1e-12).contains(&mu) && off_segment <= 1e-12 * scale {
            let z = segment_target(b, mu.clamp(0.0, 1.0));
            if (numerics::quadratic_form(b, &z) - w).norm() <= tol {
                return Ok(z);
            }
        }
    }
    grid_newton_target(b, w, tol)
}

/// Exact solution for `w = mu b11 + (1 - mu) b22`.
fn segment_target(b: &CMatrix, mu: f64) -> CVector {
    let delta = b[(0, 0)] - b[(1, 1)];
    let alpha = b[(0, 1)] / delta;
    let beta = b[(1, 0)] / delta;
    // phase that makes (b12 e^{i phi} + b21 e^{-i phi}) / delta real
    let phi = (-(alpha.im + beta.im)).atan2(alpha.re - beta.re);
    let e = C64::from_polar(1.0, phi);
    let kappa = (alpha * e + beta * e.conj()).re;
    // cos 2t + kappa sin 2t = 2 mu - 1
    let radius = (1.0 + kappa * kappa).sqrt();
    let offset = kappa.atan2(1.0);
    let t = 0.5 * (offset + ((2.0 * mu - 1.0) / radius).clamp(-1.0, 1.0).acos());
    z_2x2(t, phi)
}

fn grid_newton_target(b: &CMatrix, w: C64, tol: f64) -> Result<CVector> {
    use std::f64::consts::{FRAC_PI_2, TAU};
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..GRID {
        let t = FRAC_PI_2 * i as f64 / (GRID - 1) as f64;
        for j in 0..GRID {
            let phi = TAU * j as f64 / GRID as f64;
            let r = (f_2x2(b, t, phi) - w).norm();
            if r < best.2 {
                best = (t, phi, r);
            }
        }
    }
    let (mut t, mut phi, mut r) = best;
    let mut damping = 1e-12;
    for _ in 0..200 {
        if r <= tol * 1e-3 {
            break;
        }
        let (c, s) = (t.cos(), t.sin());
        let e = C64::from_polar(1.0, phi);
        let g = b[(0, 1)] * e + b[(1, 0)] * e.conj();
        let d_t = (b[(1, 1)] - b[(0, 0)]) * (2.0 * s * c) + g * (c * c - s * s);
        let d_phi = (b[(0, 1)] * e - b[(1, 0)] * e.conj()) * C64::new(0.0, c * s);
        let res = f_2x2(b, t, phi) - w;
        let jac = nalgebra::Matrix2::new(d_t.re, d_phi.re, d_t.im, d_phi.im);
        let rhs = nalgebra::Vector2::new(-res.re, -res.im);
        let jtj = jac.transpose() * jac;
        let jtr = jac.transpose() * rhs;
        let mut accepted = false;
        for _ in 0..40 {
            let lhs = jtj + nalgebra::Matrix2::identity() * damping * (1.0 + jtj.trace());
            if let Some(step) = lhs.lu().solve(&jtr) {
                let (nt, nphi) = (t + step[0], phi + step[1]);
                let nr = (f_2x2(b, nt, nphi) - w).norm();
                if nr < r {
                    (t, phi, r) = (nt, nphi, nr);
                    damping = (damping * 0.1).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    if r <= tol {
        Ok(z_2x2(t, phi))
    } else {
        Err(JnrError::TargetOutsideRange { target: w })
    }
}

/// Damped Gauss-Newton on `q_i(z) = <z, A_i z> = 0` over the unit sphere.
///
/// Steps are minimum-norm in the tangent directions `A_i z - q_i z`, then
/// retracted by normalization.
pub fn refine(ops: &[CMatrix], start: CVector, max_iterations: usize, tol: f64) -> (CVector, f64) {
    let n = ops.len();
    let mut z = start.unscale(start.norm());
    let mut q = forms(ops, &z);
    let mut r = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut damping = 1e-14;
    for _ in 0..max_iterations {
        if r <= tol * 1e-2 {
            break;
        }
        let tangents: Vec<CVector> = ops
            .iter()
            .zip(&q)
            .map(|(a, qi)| a * &z - z.scale(*qi))
            .collect();
        let gram = DMatrix::from_fn(n, n, |i, k| 2.0 * tangents[i].dotc(&tangents[k]).re);
        let rhs = nalgebra::DVector::from_iterator(n, q.iter().map(|x| -x));
        let scale = gram.trace().max(f64::MIN_POSITIVE);
        let mut accepted = false;
        for _ in 0..40 {
            let lhs = &gram + DMatrix::identity(n, n) * (damping * scale);
            if let Some(chol) = lhs.cholesky() {
                let coef = chol.solve(&rhs);
                let mut step = CVector::zeros(z.len());
                for (k, t) in tangents.iter().enumerate() {
                    step += t.scale(coef[k]);
                }
                let cand = &z + step;
                let cand = cand.unscale(cand.norm());
                let cq = forms(ops, &cand);
                let cr = cq.iter().map(|x| x * x).sum::<f64>().sqrt();
                if cr < r {
                    (z, q, r) = (cand, cq, cr);
                    damping = (damping * 0.1).max(1e-16);
                    accepted = true;
                    break;
                }
            }
            damping = (damping * 10.0).max(1e-16);
        }
        if !accepted {
            break;
        }
    }
    (z, r)
}

fn multistart<R: Rng + ?Sized>(
    ops: &[CMatrix],
    dim: usize,
    opts: &ZeroFinderOptions,
    rng: &mut R,
) -> Result<ZeroVectorResult> {
    let base: u64 = rng.random();
    let mut best: Option<(CVector, f64)> = None;
    // a zero of the first two forms makes a good first start
    let mut warm = pair_zero(&ops[0], &ops[1]).ok();
    for start in 0..opts.starts {
        let z0 = warm.take().unwrap_or_else(|| {
            let mut stream = ChaCha8Rng::seed_from_u64(base);
            stream.set_stream(start as u64);
            numerics::random_unit_vector(dim, &mut stream)
        });
        let (z, r) = refine(ops, z0, opts.max_iterations, opts.zero_tol);
        if best.as_ref().is_none_or(|b| r < b.1) {
            best = Some((z, r));
        }
        if r <= opts.zero_tol {
            break;
        }
    }
    let (vector, residual) = best.unwrap_or_else(|| {
        let mut e = CVector::zeros(dim);
        e[0] = C64::new(1.0, 0.0);
        let r = self::residual(ops, &e);
        (e, r)
    });
    if residual <= opts.zero_tol {
        Ok(ZeroVectorResult {
            vector,
            residual,
            method: ZeroMethod::Optimize3,
        })
    } else {
        Err(JnrError::SearchFailed {
            best: vector,
            residual,
        })
    }
}

/// Signed margin of the origin with respect to the convex hull of 2-D points:
/// positive inside (distance to the nearest edge line), negative outside.
pub fn origin_hull_margin(points: &[[f64; 2]]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    match hull.len() {
        0 => f64::NEG_INFINITY,
        1 => -hull[0][0].hypot(hull[0][1]),
        2 => -segment_distance(hull[0], hull[1]),
        n => (0..n)
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % n]);
                cross(a, b, [0.0, 0.0]) / (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(f64::INFINITY, f64::min),
    }
}
