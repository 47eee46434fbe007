//! Two-round LOCC protocol: Bob measures in `{e_k = J g_k}` and announces
//! `k`; Alice measures the normalized conditional states `xi_k^l = X_l g_k`
//! and names the state. Outcomes in the leading error slots are inconclusive.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basisbuilder::DistinguishingBasis;
use crate::kspace;
use crate::numerics::{self, CMatrix, CVector, C64};
use crate::states::{self, OperatorRep, SchmidtProfile, StateFamily};

/// Verdict for outcomes that do not identify a state. Reserved as a label.
pub const INCONCLUSIVE: &str = "INCONCLUSIVE";
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;
/// Cross-overlap and orthonormality tolerance for accepting a basis or protocol file.
pub const VERIFY_TOL: f64 = 1e-8;
const BOB_ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("basis not verified: {0}")]
    BasisNotVerified(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid protocol: {0}")]
    Invalid(String),
    #[error("could not parse protocol file: {0}")]
    Parse(String),
}

/// One of Alice's projectors for a given Bob outcome.
#[derive(Debug, Clone)]
pub struct AliceBranch {
    pub label: String,
    pub vector: CVector,
}

/// Tolerances in force when the protocol was compiled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub ortho_tol: f64,
    pub rank_tol: f64,
    pub support_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero_tol: crate::jnr::DEFAULT_ZERO_TOL,
            ortho_tol: states::DEFAULT_ORTHO_TOL,
            rank_tol: kspace::DEFAULT_RANK_TOL,
            support_tol: DEFAULT_SUPPORT_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMeta {
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone)]
pub struct Protocol {
    dim_a: usize,
    dim_b: usize,
    n_p: usize,
    labels: Vec<String>,
    bob_basis: Vec<CVector>,
    branches: Vec<Vec<AliceBranch>>,
    meta: ProtocolMeta,
}

/// Alice's result after Bob announced `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceOutcome {
    Branch(usize),
    /// `1 - sum of branch projectors`.
    Remainder,
}

impl Protocol {
    pub fn dim_a(&self) -> usize {
        self.dim_a
    }
    pub fn dim_b(&self) -> usize {
        self.dim_b
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn bob_basis(&self) -> &[CVector] {
        &self.bob_basis
    }
    pub fn branches(&self, k: usize) -> &[AliceBranch] {
        &self.branches[k]
    }
    pub fn meta(&self) -> &ProtocolMeta {
        &self.meta
    }

    /// `g_k = J e_k`, the vector Alice's branches were built from.
    pub fn basis_vector(&self, k: usize) -> CVector {
        states::conjugate_j(&self.bob_basis[k])
    }

    pub fn is_error_slot(&self, k: usize) -> bool {
        k < self.n_p
    }

    pub fn decide(&self, k: usize, outcome: AliceOutcome) -> &str {
        match outcome {
            AliceOutcome::Branch(j) if !self.is_error_slot(k) => &self.branches[k][j].label,
            _ => INCONCLUSIVE,
        }
    }

    /// Largest `|<v_i, v_j> - delta_ij|` among Alice's vectors for outcome `k`.
    pub fn branch_deviation(&self, k: usize) -> f64 {
        let vs: Vec<CVector> = self.branches[k].iter().map(|b| b.vector.clone()).collect();
        if vs.is_empty() {
            return 0.0;
        }
        numerics::orthonormality_deviation(&CMatrix::from_columns(&vs))
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        let invalid = |msg: String| Err(ProtocolError::Invalid(msg));
        if self.dim_a == 0 || self.dim_b == 0 {
            return invalid("dimensions must be positive".into());
        }
        if self.n_p > self.dim_b {
            return invalid(format!("n_p = {} exceeds dim_b = {}", self.n_p, self.dim_b));
        }
        if self.bob_basis.len() != self.dim_b || self.branches.len() != self.dim_b {
            return invalid(format!("expected {} Bob outcomes", self.dim_b));
        }
        if self.bob_basis.iter().any(|e| e.len() != self.dim_b) {
            return invalid("Bob basis vector of wrong length".into());
        }
        let dev = numerics::orthonormality_deviation(&CMatrix::from_columns(&self.bob_basis));
        if dev > BOB_ORTHO_TOL {
            return invalid(format!("Bob basis deviates from orthonormal by {dev:e}"));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &self.labels {
            if l.is_empty() || l == INCONCLUSIVE || !seen.insert(l.as_str()) {
                return invalid(format!("bad or duplicate label {l:?}"));
            }
        }
        for (k, bs) in self.branches.iter().enumerate() {
            if self.is_error_slot(k) && !bs.is_empty() {
                return invalid(format!("error slot {} carries branches", k + 1));
            }
            let mut used = std::collections::HashSet::new();
            for b in bs {
                if !seen.contains(b.label.as_str()) || !used.insert(b.label.as_str()) {
                    return invalid(format!(
                        "outcome {}: unknown or repeated label {:?}",
                        k + 1,
                        b.label
                    ));
                }
                if b.vector.len() != self.dim_a {
                    return invalid(format!("outcome {}: branch vector of wrong length", k + 1));
                }
            }
            let dev = self.branch_deviation(k);
            if dev > VERIFY_TOL {
                return invalid(format!(
                    "outcome {}: branches deviate from orthonormal by {dev:e}",
                    k + 1
                ));
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> ProtocolFile {
        let branches = self
            .branches
            .iter()
            .enumerate()
            .map(|(k, bs)| {
                let records = bs
                    .iter()
                    .map(|b| BranchRecord {
                        label: b.label.clone(),
                        vector: pairs(&b.vector),
                    })
                    .collect();
                ((k + 1).to_string(), records)
            })
            .collect();
        ProtocolFile {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            n_p: self.n_p,
            labels: self.labels.clone(),
            bob_basis: self.bob_basis.iter().map(pairs).collect(),
            branches,
            meta: self.meta,
        }
    }

    pub fn from_file(file: ProtocolFile) -> Result<Self, ProtocolError> {
        let mut branches = Vec::with_capacity(file.dim_b);
        for k in 1..=file.dim_b {
            let records = file.branches.get(&k.to_string()).ok_or_else(|| {
                ProtocolError::Invalid(format!("missing branches for outcome {k}"))
            })?;
            branches.push(
                records
                    .iter()
                    .map(|r| AliceBranch {
                        label: r.label.clone(),
                        vector: vector(&r.vector),
                    })
                    .collect(),
            );
        }
        if file.branches.len() != file.dim_b {
            return Err(ProtocolError::Invalid(format!(
                "expected outcome keys 1..{}, found {}",
                file.dim_b,
                file.branches.len()
            )));
        }
        let protocol = Protocol {
            dim_a: file.dim_a,
            dim_b: file.dim_b,
            n_p: file.n_p,
            labels: file.labels,
            bob_basis: file.bob_basis.iter().map(|v| vector(v)).collect(),
            branches,
            meta: file.meta,
        };
        protocol.validate()?;
        Ok(protocol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("protocol serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        let file: ProtocolFile =
            serde_json::from_str(text).map_err(|e| ProtocolError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    /// Checks that the protocol was built for a family with these dims and labels.
    pub fn check_compatible(&self, family: &StateFamily) -> Result<(), ProtocolError> {
        if family.dim_a() != self.dim_a || family.dim_b() != self.dim_b {
            return Err(ProtocolError::DimensionMismatch(format!(
                "protocol is {}x{}, family is {}x{}",
                self.dim_a,
                self.dim_b,
                family.dim_a(),
                family.dim_b()
            )));
        }
        if family.labels() != self.labels.as_slice() {
            return Err(ProtocolError::DimensionMismatch(
                "protocol labels differ from the family's".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchRecord {
    pub label: String,
    pub vector: Vec<[f64; 2]>,
}

/// On-disk layout; `branches` is keyed by the 1-based Bob outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub dim_a: usize,
    pub dim_b: usize,
    pub n_p: usize,
    pub labels: Vec<String>,
    pub bob_basis: Vec<Vec<[f64; 2]>>,
    pub branches: IndexMap<String, Vec<BranchRecord>>,
    pub meta: ProtocolMeta,
}

fn pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn vector(p: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(p.len(), p.iter().map(|[re, im]| C64::new(*re, *im)))
}

pub fn compile_protocol(
    family: &StateFamily,
    rep: &OperatorRep,
    basis: &DistinguishingBasis,
    meta: ProtocolMeta,
) -> Result<Protocol, ProtocolError> {
    let dim_a = family.dim_a();
    let dim_b = family.dim_b();
    if basis.dim() != dim_b || rep.len() != family.len() {
        return Err(ProtocolError::DimensionMismatch(format!(
            "basis has {} vectors for dim_b = {dim_b}",
            basis.dim()
        )));
    }
    let dev = numerics::orthonormality_deviation(&basis.as_matrix());
    if dev > BOB_ORTHO_TOL {
        return Err(ProtocolError::BasisNotVerified(format!(
            "basis deviates from orthonormal by {dev:e}"
        )));
    }
    let support_tol = meta.tolerances.support_tol;
    let mut branches = Vec::with_capacity(dim_b);
    for (k, g) in basis.vectors.iter().enumerate() {
        if k < basis.error_slots {
            branches.push(Vec::new());
            continue;
        }
        let overlap = kspace::cross_overlap(rep, g);
        if overlap > VERIFY_TOL {
            return Err(ProtocolError::BasisNotVerified(format!(
                "outcome {}: conditional states overlap by {overlap:e}",
                k + 1
            )));
        }
        let xi = rep.conditional_states(g);
        let mut support: Vec<(usize, f64)> = xi
            .iter()
            .enumerate()
            .map(|(l, v)| (l, v.norm()))
            .filter(|(_, n)| *n > support_tol)
            .collect();
        support.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        // largest first: leakage into later branches is then bounded by the smaller norms
        let mut chosen: Vec<AliceBranch> = Vec::with_capacity(support.len());
        for (l, _) in support {
            let mut v = xi[l].clone();
            for _ in 0..2 {
                for b in &chosen {
                    v -= &b.vector * b.vector.dotc(&v);
                }
            }
            let n = v.norm();
            chosen.push(AliceBranch {
                label: family.labels()[l].clone(),
                vector: v.unscale(n),
            });
        }
        branches.push(chosen);
    }
    let protocol = Protocol {
        dim_a,
        dim_b,
        n_p: basis.error_slots,
        labels: family.labels().to_vec(),
        bob_basis: basis.vectors.iter().map(states::conjugate_j).collect(),
        branches,
        meta,
    };
    protocol.validate()?;
    Ok(protocol)
}

/// Largest `|psi_l - sum_k xi_k^l (x) e_k|` over the family.
pub fn reconstruction_error(family: &StateFamily, basis: &DistinguishingBasis) -> f64 {
    let rep = family.operators();
    let dim_b = family.dim_b();
    family
        .states()
        .iter()
        .zip(&rep.matrices)
        .map(|(psi, x)| {
            let mut sum = CVector::zeros(psi.len());
            for g in &basis.vectors {
                let xi = x * g;
                let e = states::conjugate_j(g);
                for a in 0..xi.len() {
                    for b in 0..dim_b {
                        sum[a * dim_b + b] += xi[a] * e[b];
                    }
                }
            }
            (psi - sum).norm()
        })
        .fold(0.0, f64::max)
}

/// Per-state `sum_{k <= n_p} |X_l g_k|^2`.
pub fn error_mass(rep: &OperatorRep, basis: &DistinguishingBasis) -> Vec<f64> {
    rep.matrices
        .iter()
        .map(|x| {
            basis.vectors[..basis.error_slots]
                .iter()
                .map(|g| (x * g).norm_squared())
                .fold(0.0, |acc, p| acc + p)
                .min(1.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtBound {
    pub n_p: usize,
    /// `sum_{k <= n_p} p_k^l` per state.
    pub per_state: Vec<f64>,
    /// `1 - max_l per_state[l]`.
    pub bound: f64,
}

pub fn discrimination_bound(
    profile: &SchmidtProfile,
    n_p: usize,
) -> Result<SchmidtBound, ProtocolError> {
    let schmidt_rank = profile.per_state.first().map_or(0, Vec::len);
    if n_p > schmidt_rank {
        return Err(ProtocolError::Invalid(format!(
            "n_p = {n_p} exceeds min(dim_a, dim_b) = {schmidt_rank}"
        )));
    }
    let per_state: Vec<f64> = (0..profile.per_state.len())
        .map(|l| {
            if n_p == 0 {
                0.0
            } else {
                profile.head_sum(l, n_p).min(1.0)
            }
        })
        .collect();
    let bound = 1.0 - per_state.iter().copied().fold(0.0, f64::max);
    Ok(SchmidtBound {
        n_p,
        per_state,
        bound,
    })
}

/// Error masses of a compiled basis set against the Schmidt bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub schmidt: SchmidtBound,
    pub error_mass: Vec<f64>,
    /// `1 - max_l error_mass[l]`.
    pub protocol_bound: f64,
    /// Every mass is within `tol` of its Schmidt bound.
    pub consistent: bool,
}

pub fn bound_report(schmidt: SchmidtBound, error_mass: Vec<f64>, tol: f64) -> BoundReport {
    let protocol_bound = 1.0 - error_mass.iter().copied().fold(0.0, f64::max);
    let consistent = error_mass
        .iter()
        .zip(&schmidt.per_state)
        .all(|(m, s)| *m >= -tol && *m <= s + tol);
    BoundReport {
        schmidt,
        error_mass,
        protocol_bound,
        consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basisbuilder::{build_distinguishing_basis, DistinguishingBasis};
    use crate::jnr::ZeroFinderOptions;
    use crate::states::fixtures::*;
    use crate::states::schmidt_profile;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn meta() -> ProtocolMeta {
        ProtocolMeta {
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }

    fn compiled(fam: &StateFamily, seed: u64) -> (DistinguishingBasis, Protocol) {
        let rep = fam.operators();
        let k = kspace::build_kspace(&rep, kspace::DEFAULT_RANK_TOL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = build_distinguishing_basis(
            &k.operators,
            fam.dim_b(),
            &ZeroFinderOptions::default(),
            &mut rng,
        )
        .unwrap();
        let p = compile_protocol(fam, &rep, &basis, meta()).unwrap();
        (basis, p)
    }

    fn random_family(m: usize, da: usize, db: usize, rng: &mut ChaCha8Rng) -> StateFamily {
        let u = numerics::random_unitary(da * db, rng);
        family(da, db, (0..m).map(|l| u.column(l).into_owned()).collect())
    }

    fn fixed_basis(vectors: Vec<CVector>, error_slots: usize) -> DistinguishingBasis {
        let n = vectors.len();
        DistinguishingBasis {
            vectors,
            error_slots,
            residuals: vec![0.0; n],
            methods: vec![None; n],
            trace_history: vec![],
            unsolved_final: false,
            best_effort: false,
        }
    }

    #[test]
    fn two_bell_states_with_hadamard_basis() {
        let fam = family(2, 2, vec![phi_plus(), phi_minus()]);
        let rep = fam.operators();
        let basis = fixed_basis(vec![amps(&[H, H]), amps(&[H, -H])], 0);
        let p = compile_protocol(&fam, &rep, &basis, meta()).unwrap();
        assert_eq!(p.bob_basis()[0], amps(&[H, H]));
        let xi = rep.conditional_states(&basis.vectors[0]);
        assert!((&xi[0] - amps(&[0.5, 0.5])).norm() < 1e-15);
        assert!((&xi[1] - amps(&[0.5, -0.5])).norm() < 1e-15);
        for k in 0..2 {
            let bs = p.branches(k);
            assert_eq!(bs.len(), 2);
            let xi = rep.conditional_states(&basis.vectors[k]);
            for b in bs {
                let l = fam.label_index(&b.label).unwrap();
                let expected = xi[l].unscale(xi[l].norm());
                assert!((b.vector.dotc(&expected).norm() - 1.0).abs() < 1e-14);
            }
            let flip = if k == 0 { 1.0 } else { -1.0 };
            assert!((bs[0].vector.dotc(&amps(&[H, flip * H])).norm() - 1.0).abs() < 1e-14);
        }
        assert!(reconstruction_error(&fam, &basis) < 1e-15);
    }

    #[test]
    fn disjoint_product_pair_uses_computational_basis() {
        let fam = family(2, 2, vec![amps(&[1., 0., 0., 0.]), amps(&[0., 0., 0., 1.])]);
        let (basis, p) = compiled(&fam, 0);
        assert_eq!(basis.as_matrix(), CMatrix::identity(2, 2));
        assert_eq!(p.branches(0).len(), 1);
        assert_eq!(p.branches(0)[0].label, "psi_1");
        assert_eq!(p.branches(1)[0].label, "psi_2");
    }

    #[test]
    fn three_bell_states_on_a_qubit_are_all_inconclusive() {
        let fam = family(2, 2, vec![phi_plus(), phi_minus(), psi_plus()]);
        let (basis, p) = compiled(&fam, 0);
        assert_eq!(p.n_p(), 2);
        for k in 0..2 {
            assert!(p.branches(k).is_empty());
            assert_eq!(p.decide(k, AliceOutcome::Remainder), INCONCLUSIVE);
        }
        let masses = error_mass(&fam.operators(), &basis);
        assert!(masses.iter().all(|m| (m - 1.0).abs() < 1e-12));
        let sb = discrimination_bound(&schmidt_profile(&fam).unwrap(), 2).unwrap();
        assert!(sb.bound.abs() <= 1e-12);
    }

    #[test]
    fn unverified_basis_is_rejected() {
        let fam = family(2, 2, vec![phi_plus(), phi_minus()]);
        let basis = fixed_basis(vec![amps(&[1., 0.]), amps(&[0., 1.])], 0);
        assert!(matches!(
            compile_protocol(&fam, &fam.operators(), &basis, meta()),
            Err(ProtocolError::BasisNotVerified(_))
        ));
    }

    #[test]
    fn bound_examples() {
        let profile = SchmidtProfile {
            per_state: vec![vec![0.4, 0.3, 0.2, 0.1]; 3],
        };
        assert!((discrimination_bound(&profile, 2).unwrap().bound - 0.3).abs() < 1e-15);
        assert_eq!(discrimination_bound(&profile, 0).unwrap().bound, 1.0);
        assert!(discrimination_bound(&profile, 5).is_err());
        let bell = SchmidtProfile {
            per_state: vec![vec![0.5, 0.5]; 3],
        };
        assert_eq!(discrimination_bound(&bell, 2).unwrap().bound, 0.0);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let fam = family(2, 2, vec![phi_plus(), phi_minus()]);
        let (_, p) = compiled(&fam, 3);
        let text = p.to_json();
        let q = Protocol::from_json(&text).unwrap();
        assert_eq!(q.to_json(), text);
        let file: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = file["branches"].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["1", "2"]);

        let mut broken = p.to_file();
        broken.bob_basis[0][0] = [2.0, 0.0];
        assert!(Protocol::from_file(broken).is_err());
        let mut broken = p.to_file();
        broken.branches[0][0].label = "nobody".into();
        assert!(Protocol::from_file(broken).is_err());
        assert!(matches!(
            Protocol::from_json("{"),
            Err(ProtocolError::Parse(_))
        ));

        let other = family(2, 2, vec![phi_plus(), psi_plus()]);
        assert!(p.check_compatible(&fam).is_ok());
        let relabeled = StateFamily::new(
            2,
            2,
            other.states().to_vec(),
            Some(vec!["a".into(), "b".into()]),
            Default::default(),
        )
        .unwrap();
        assert!(p.check_compatible(&relabeled).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]

        #[test]
        fn compiled_protocol_invariants(seed in any::<u64>(), m in 2usize..4, da in 2usize..5, db in 2usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fam = random_family(m, da, db, &mut rng);
            let rep = fam.operators();
            let k = kspace::build_kspace(&rep, kspace::DEFAULT_RANK_TOL);
            prop_assume!(k.dim() <= 3);
            let (basis, p) = compiled(&fam, seed);
            prop_assert!(reconstruction_error(&fam, &basis) <= 1e-10);
            prop_assert_eq!(p.n_p(), if k.dim() == 3 { 2.min(db) } else { 0 });
            for kk in p.n_p()..db {
                prop_assert!(p.branch_deviation(kk) <= 1e-8);
                // projector sum is a projector, so its complement completes the identity
                let vs: Vec<CVector> = p.branches(kk).iter().map(|b| b.vector.clone()).collect();
                if !vs.is_empty() {
                    let v = CMatrix::from_columns(&vs);
                    let proj = &v * v.adjoint();
                    prop_assert!((&proj * &proj - &proj).norm() <= 1e-8);
                }
                let bs = p.branches(kk);
                for i in 0..bs.len() {
                    for j in (i + 1)..bs.len() {
                        prop_assert!(bs[i].vector.dotc(&bs[j].vector).norm_sqr() <= 1e-16);
                    }
                }
            }
            let masses = error_mass(&rep, &basis);
            let sb = discrimination_bound(&schmidt_profile(&fam).unwrap(), p.n_p()).unwrap();
            let report = bound_report(sb.clone(), masses, 1e-8);
            prop_assert!(report.consistent);
            prop_assert!(report.protocol_bound >= sb.bound - 1e-8);
            if m == 2 {
                prop_assert_eq!(p.n_p(), 0);
            }
        }
    }
}
