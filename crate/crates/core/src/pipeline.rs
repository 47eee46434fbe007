//! End-to-end wiring: family to K-space to basis to protocol, plus the
//! analysis report the CLI prints.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::basisbuilder::{self, BuildError, DistinguishingBasis};
use crate::jnr::{self, ZeroFinderOptions};
use crate::kspace::{self, KSpaceBasis};
use crate::protocol::{
    self, BoundReport, Protocol, ProtocolError, ProtocolMeta, SchmidtBound, Tolerances,
};
use crate::simulator::SimulationError;
use crate::states::{self, LoadOptions, StateFamily, StatesError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_SEARCH_FAILED: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub zero_tol: f64,
    pub ortho_tol: f64,
    pub rank_tol: f64,
    pub support_tol: f64,
    pub seed: u64,
    pub reorthonormalize: bool,
    pub best_effort: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            zero_tol: t.zero_tol,
            ortho_tol: t.ortho_tol,
            rank_tol: t.rank_tol,
            support_tol: t.support_tol,
            seed: 0,
            reorthonormalize: false,
            best_effort: false,
        }
    }
}

impl PipelineOptions {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            ortho_tol: self.ortho_tol,
            reorthonormalize: self.reorthonormalize,
        }
    }

    pub fn zero_finder(&self) -> ZeroFinderOptions {
        ZeroFinderOptions {
            zero_tol: self.zero_tol,
            best_effort: self.best_effort,
            ..ZeroFinderOptions::default()
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            zero_tol: self.zero_tol,
            ortho_tol: self.ortho_tol,
            rank_tol: self.rank_tol,
            support_tol: self.support_tol,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    States(#[from] StatesError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Unsupported(_) | PipelineError::Build(BuildError::Unsupported(_)) => {
                EXIT_UNSUPPORTED
            }
            PipelineError::Build(_) => EXIT_SEARCH_FAILED,
            _ => EXIT_INVALID_INPUT,
        }
    }
}

/// Which distinguishability guarantee applies, decided by `N = dim K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `N <= 2`: perfect discrimination.
    Deterministic,
    /// `N = 3`: conclusive discrimination with the Schmidt lower bound.
    Conclusive,
    /// `N >= 4`: no guarantee.
    None,
}

impl Regime {
    pub fn of(n: usize) -> Self {
        match n {
            0..=2 => Regime::Deterministic,
            3 => Regime::Conclusive,
            _ => Regime::None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub dim_a: usize,
    pub dim_b: usize,
    pub m: usize,
    pub n: usize,
    pub regime: Regime,
    /// Error slots; absent when no guarantee applies and nothing was compiled.
    pub n_p: Option<usize>,
    pub schmidt_profile: Vec<Vec<f64>>,
    pub schmidt_bound: Option<f64>,
    pub error_masses: Option<Vec<f64>>,
    pub success_lower_bound: Option<f64>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub warnings: Vec<String>,
}

pub fn load_family_file(
    path: &std::path::Path,
    opts: &PipelineOptions,
) -> Result<StateFamily, PipelineError> {
    let file = std::fs::File::open(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(states::load_family(
        std::io::BufReader::new(file),
        opts.load_options(),
    )?)
}

pub fn kspace_of(family: &StateFamily, opts: &PipelineOptions) -> KSpaceBasis {
    kspace::build_kspace(&family.operators(), opts.rank_tol)
}

pub fn build_basis(
    k: &KSpaceBasis,
    dim_b: usize,
    opts: &PipelineOptions,
) -> Result<DistinguishingBasis, BuildError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    basisbuilder::build_distinguishing_basis(&k.operators, dim_b, &opts.zero_finder(), &mut rng)
}

fn family_warnings(family: &StateFamily, k: &KSpaceBasis) -> Vec<String> {
    let mut warnings = Vec::new();
    if family.reorthonormalized() {
        warnings.push("input states were re-orthonormalized".to_string());
    }
    if k.has_near_threshold_rank() {
        warnings.push(format!(
            "dim K is sensitive to the rank tolerance: residuals {:?} are within 10x of {:e}",
            k.near_threshold, k.rank_tol
        ));
    }
    warnings
}

pub fn analyze(
    family: &StateFamily,
    opts: &PipelineOptions,
) -> Result<AnalysisReport, PipelineError> {
    let rep = family.operators();
    let k = kspace::build_kspace(&rep, opts.rank_tol);
    let regime = Regime::of(k.dim());
    let mut warnings = family_warnings(family, &k);
    let profile = states::schmidt_profile(family)?;

    let basis = if regime != Regime::None || opts.best_effort {
        match build_basis(&k, family.dim_b(), opts) {
            Ok(b) => Some(b),
            Err(e) => {
                warnings.push(format!("basis construction failed: {e}"));
                None
            }
        }
    } else {
        warnings.push(format!(
            "dim K = {} exceeds 3: no distinguishability guarantee applies; rerun with --best-effort to search anyway",
            k.dim()
        ));
        None
    };
    if basis.as_ref().is_some_and(|b| b.best_effort) {
        warnings
            .push("best-effort basis: no convexity guarantee backs the zero search".to_string());
    }

    let n_p = basis
        .as_ref()
        .map(|b| b.error_slots)
        .or_else(|| basisbuilder::error_slots_for(k.dim(), family.dim_b()));
    let schmidt: Option<SchmidtBound> = n_p
        .map(|p| {
            protocol::discrimination_bound(&profile, p.min(family.dim_a().min(family.dim_b())))
        })
        .transpose()?;
    let error_masses = basis.as_ref().map(|b| protocol::error_mass(&rep, b));
    let success_lower_bound = error_masses
        .as_ref()
        .map(|m| 1.0 - m.iter().copied().fold(0.0, f64::max));
    Ok(AnalysisReport {
        dim_a: family.dim_a(),
        dim_b: family.dim_b(),
        m: family.len(),
        n: k.dim(),
        regime,
        n_p,
        schmidt_profile: profile.per_state,
        schmidt_bound: schmidt.map(|s| s.bound),
        error_masses,
        success_lower_bound,
        tolerances: opts.tolerances(),
        seed: opts.seed,
        warnings,
    })
}

/// Verification figures printed after compiling.
#[derive(Debug, Clone, Serialize)]
pub struct CompileSummary {
    pub n: usize,
    pub regime: Regime,
    pub n_p: usize,
    pub error_slots: Vec<usize>,
    pub zero_slots: Vec<usize>,
    pub max_zero_residual: f64,
    pub basis_orthonormality: f64,
    pub reconstruction_error: f64,
    pub bound: BoundReport,
    pub best_effort: bool,
    pub warnings: Vec<String>,
}

pub fn compile(
    family: &StateFamily,
    opts: &PipelineOptions,
) -> Result<(Protocol, CompileSummary), PipelineError> {
    let rep = family.operators();
    let k = kspace::build_kspace(&rep, opts.rank_tol);
    let regime = Regime::of(k.dim());
    if regime == Regime::None && !opts.best_effort {
        return Err(PipelineError::Unsupported(format!(
            "dim K = {} exceeds 3: no distinguishability guarantee applies (use --best-effort to search anyway)",
            k.dim()
        )));
    }
    let mut warnings = family_warnings(family, &k);
    let basis = build_basis(&k, family.dim_b(), opts)?;
    if basis.best_effort {
        warnings
            .push("best-effort basis: no convexity guarantee backs the zero search".to_string());
    }
    let check = basisbuilder::verify_basis(&k.operators, &basis, protocol::VERIFY_TOL);
    let meta = ProtocolMeta {
        seed: opts.seed,
        tolerances: opts.tolerances(),
    };
    let compiled = protocol::compile_protocol(family, &rep, &basis, meta)?;
    let profile = states::schmidt_profile(family)?;
    let n_p = basis.error_slots.min(family.dim_a().min(family.dim_b()));
    let schmidt = protocol::discrimination_bound(&profile, n_p)?;
    let bound = protocol::bound_report(schmidt, protocol::error_mass(&rep, &basis), 1e-8);
    let summary = CompileSummary {
        n: k.dim(),
        regime,
        n_p: basis.error_slots,
        error_slots: (1..=basis.error_slots).collect(),
        zero_slots: (basis.error_slots + 1..=basis.dim()).collect(),
        max_zero_residual: check.max_residual,
        basis_orthonormality: check.gram_deviation,
        reconstruction_error: protocol::reconstruction_error(family, &basis),
        bound,
        best_effort: basis.best_effort,
        warnings,
    };
    Ok((compiled, summary))
}

/// Joint-numerical-range samples of `(A_1..A_N)` over all of `H_B`.
pub fn jnr_sample(
    family: &StateFamily,
    samples: usize,
    opts: &PipelineOptions,
) -> Result<(usize, Vec<jnr::JnrPoint>), PipelineError> {
    let k = kspace_of(family, opts);
    if k.dim() == 0 {
        return Err(PipelineError::Unsupported(
            "dim K = 0: there are no operators to sample".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let identity = crate::numerics::CMatrix::identity(family.dim_b(), family.dim_b());
    let points = jnr::sample_range(&k.operators, &identity, samples, &mut rng)
        .map_err(|e| PipelineError::Unsupported(e.to_string()))?;
    Ok((k.dim(), points))
}
