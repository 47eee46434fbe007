//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use locc_core::basisbuilder::build_distinguishing_basis;
use locc_core::jnr::{self, ZeroFinderOptions};
use locc_core::kspace;
use locc_core::numerics::{self, CMatrix, CVector, C64};
use locc_core::pipeline::{self, PipelineOptions, Regime};
use locc_core::protocol;
use locc_core::simulator;
use locc_core::states::{self, LoadOptions, StateFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn load(name: &str) -> StateFamily {
    let f = std::fs::File::open(data(name)).unwrap();
    states::load_family(f, LoadOptions::default()).unwrap()
}

/// Traceless Hermitian `U diag(lambda) U*` with Gaussian spectrum, unit HS norm.
fn random_traceless(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let u = numerics::random_unitary(d, rng);
    let mut lambda: Vec<f64> = (0..d)
        .map(|_| rng.sample(rand_distr::StandardNormal))
        .collect();
    let mean = lambda.iter().sum::<f64>() / d as f64;
    lambda.iter_mut().for_each(|x| *x -= mean);
    let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(
        d,
        lambda.iter().map(|x| C64::new(x / norm, 0.0)),
    ));
    let a = &u * diag * u.adjoint();
    (&a + a.adjoint()).scale(0.5)
}

fn random_family(m: usize, da: usize, db: usize, rng: &mut ChaCha8Rng) -> StateFamily {
    let u = numerics::random_unitary(da * db, rng);
    StateFamily::new(
        da,
        db,
        (0..m).map(|l| u.column(l).into_owned()).collect(),
        None,
        LoadOptions::default(),
    )
    .unwrap()
}

fn deterministic_end_to_end() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 10_000;
    for i in 0..50 {
        let (da, db) = (rng.random_range(2..=6), rng.random_range(2..=6));
        let fam = random_family(2, da, db, &mut rng);
        let opts = PipelineOptions {
            seed: i,
            ..PipelineOptions::default()
        };
        let (p, summary) =
            pipeline::compile(&fam, &opts).map_err(|e| format!("instance {i}: {e}"))?;
        check(
            summary.regime == Regime::Deterministic && p.n_p() == 0,
            || format!("instance {i}: N = {}, n_p = {}", summary.n, p.n_p()),
        )?;
        for l in 0..2 {
            let d = simulator::outcome_distribution(&p, &fam, l).map_err(|e| e.to_string())?;
            check(
                d.success() >= 1.0 - 1e-9
                    && d.misidentification() <= 1e-9
                    && d.inconclusive() <= 1e-9,
                || format!("instance {i} state {l}: success {:e}", 1.0 - d.success()),
            )?;
            let s = simulator::simulate(&p, &fam, l, trials, i).map_err(|e| e.to_string())?;
            check(
                s.misidentifications() == 0 && s.inconclusives() == 0,
                || format!("instance {i} state {l}: {:?}", s.verdicts),
            )?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs <= 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "50 pairs, certain success, 10^4 trials each, {secs:.2} s"
    ))
}

/// Parametrizes unit vectors of C^2 or C^3 modulo global phase by angles.
fn sphere_point(d: usize, t: &[f64]) -> CVector {
    match d {
        2 => CVector::from_vec(vec![
            C64::new(t[0].cos(), 0.0),
            C64::from_polar(t[0].sin(), t[1]),
        ]),
        3 => CVector::from_vec(vec![
            C64::new(t[0].cos(), 0.0),
            C64::from_polar(t[0].sin() * t[1].cos(), t[2]),
            C64::from_polar(t[0].sin() * t[1].sin(), t[3]),
        ]),
        _ => unreachable!(),
    }
}

/// Independent feasibility oracle: residual minimum over a grid of at least
/// 10^6 angle tuples, then compass-search zoom from the best grid points.
fn grid_oracle(ops: &[CMatrix], d: usize) -> f64 {
    use std::f64::consts::{FRAC_PI_2, TAU};
    let f = |t: &[f64]| jnr::residual(ops, &sphere_point(d, t));
    let (per_axis, ranges): (usize, Vec<f64>) = match d {
        2 => (1000, vec![FRAC_PI_2, TAU]),
        _ => (32, vec![FRAC_PI_2, FRAC_PI_2, TAU, TAU]),
    };
    let dims = ranges.len();
    let total = per_axis.pow(dims as u32);
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut t = vec![0.0; dims];
    for idx in 0..total {
        let mut r = idx;
        for (j, range) in ranges.iter().enumerate() {
            t[j] = (r % per_axis) as f64 * range / per_axis as f64;
            r /= per_axis;
        }
        let v = f(&t);
        if best.len() < 8 || v < best[best.len() - 1].0 {
            best.push((v, t.clone()));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(8);
        }
    }
    let mut overall = best[0].0;
    for (mut value, mut point) in best {
        let mut step = ranges.iter().cloned().fold(0.0, f64::max) / per_axis as f64;
        while step > 1e-12 {
            let mut improved = false;
            for j in 0..dims {
                for sign in [1.0, -1.0] {
                    let mut trial = point.clone();
                    trial[j] += sign * step;
                    let v = f(&trial);
                    if v < value {
                        value = v;
                        point = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        overall = overall.min(value);
    }
    overall
}

fn zero_finder_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = ZeroFinderOptions::default();
    let mut worst = 0.0_f64;
    let mut oracle_runs = 0;
    let mut worst_oracle = 0.0_f64;
    for (n, lo) in [(1usize, 2usize), (2, 2), (3, 3)] {
        for i in 0..100 {
            let d = rng.random_range(lo..=10);
            let ops: Vec<CMatrix> = (0..n).map(|_| random_traceless(d, &mut rng)).collect();
            let z = jnr::find_zero_vector(&ops, d, &opts, &mut rng)
                .map_err(|e| format!("N={n} instance {i} (d={d}): {e}"))?;
            let r = jnr::residual(&ops, &z.vector);
            check(r <= 1e-10 && (z.vector.norm() - 1.0).abs() <= 1e-12, || {
                format!("N={n} instance {i} (d={d}): residual {r:e}")
            })?;
            worst = worst.max(r);
            if d <= 3 {
                let oracle = grid_oracle(&ops, d);
                oracle_runs += 1;
                worst_oracle = worst_oracle.max(oracle);
                check(oracle <= 1e-3, || {
                    format!("N={n} instance {i} (d={d}): oracle minimum {oracle:e} does not confirm feasibility")
                })?;
            }
        }
    }
    Ok(format!(
        "300 instances, worst residual {worst:.1e}; {oracle_runs} grid-oracle cross-checks, worst oracle minimum {worst_oracle:.1e}"
    ))
}

fn deflation_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = ZeroFinderOptions::default();
    let mut worst_final = 0.0_f64;
    for i in 0..50 {
        let n = rng.random_range(1..=2);
        let d = rng.random_range(2..=10);
        let ops: Vec<CMatrix> = (0..n).map(|_| random_traceless(d, &mut rng)).collect();
        let b = build_distinguishing_basis(&ops, d, &opts, &mut rng)
            .map_err(|e| format!("instance {i}: {e}"))?;
        for (k, t) in b.trace_history.iter().enumerate() {
            let cap = (k + 1) as f64 * 1e-10;
            check(*t <= cap, || {
                format!("instance {i}: trace {t:e} after {} steps", k + 1)
            })?;
        }
        check(b.unsolved_final, || {
            format!("instance {i}: last vector was searched for")
        })?;
        let last = *b.residuals.last().unwrap();
        check(last <= 1e-9, || {
            format!("instance {i}: final residual {last:e}")
        })?;
        worst_final = worst_final.max(last);
    }
    Ok(format!(
        "50 instances, worst unsolved final residual {worst_final:.1e}"
    ))
}

/// Hand arithmetic on 2x2 complex matrices, independent of the library's linear algebra.
mod hand {
    pub type C = (f64, f64);
    pub type M = [[C; 2]; 2];

    fn mul(a: C, b: C) -> C {
        (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
    }

    fn add(a: C, b: C) -> C {
        (a.0 + b.0, a.1 + b.1)
    }

    pub fn adjoint(a: &M) -> M {
        let c = |z: C| (z.0, -z.1);
        [[c(a[0][0]), c(a[1][0])], [c(a[0][1]), c(a[1][1])]]
    }

    pub fn matmul(a: &M, b: &M) -> M {
        let mut out = [[(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = add(mul(a[i][0], b[0][j]), mul(a[i][1], b[1][j]));
            }
        }
        out
    }

    /// Real coordinates in the Pauli basis `(I, X, Y, Z)` of a Hermitian matrix.
    pub fn pauli_coords(h: &M) -> [f64; 4] {
        [
            (h[0][0].0 + h[1][1].0) / 2.0,
            h[0][1].0,
            -h[0][1].1,
            (h[0][0].0 - h[1][1].0) / 2.0,
        ]
    }

    pub fn generators(xs: &[M]) -> Vec<M> {
        let mut out = Vec::new();
        for m in 0..xs.len() {
            for l in (m + 1)..xs.len() {
                let gml = matmul(&adjoint(&xs[m]), &xs[l]);
                let glm = matmul(&adjoint(&xs[l]), &xs[m]);
                let mut sym = [[(0.0, 0.0); 2]; 2];
                let mut anti = [[(0.0, 0.0); 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        sym[i][j] = add(gml[i][j], glm[i][j]);
                        let diff = (gml[i][j].0 - glm[i][j].0, gml[i][j].1 - glm[i][j].1);
                        anti[i][j] = (-diff.1, diff.0);
                    }
                }
                out.push(sym);
                out.push(anti);
            }
        }
        out
    }

    /// Rank by Gaussian elimination with partial pivoting.
    pub fn rank(rows: &[[f64; 4]], tol: f64) -> usize {
        let mut a: Vec<[f64; 4]> = rows.to_vec();
        let mut rank = 0;
        for col in 0..4 {
            let Some(p) =
                (rank..a.len()).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            else {
                break;
            };
            if a[p][col].abs() <= tol {
                continue;
            }
            a.swap(rank, p);
            for i in 0..a.len() {
                if i != rank {
                    let f = a[i][col] / a[rank][col];
                    let pivot = a[rank];
                    a[i].iter_mut().zip(pivot).for_each(|(x, p)| *x -= f * p);
                }
            }
            rank += 1;
        }
        rank
    }

    /// `sigma_1^2 + sigma_2^2` of a 2x2 matrix is its squared Frobenius norm.
    pub fn schmidt_head(x: &M) -> f64 {
        x.iter().flatten().map(|z| z.0 * z.0 + z.1 * z.1).sum()
    }
}

fn kspace_facts() -> Outcome {
    use hand::M;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = (0.0, 0.0);
    let phi_plus: M = [[(h, 0.0), z], [z, (h, 0.0)]];
    let phi_minus: M = [[(h, 0.0), z], [z, (-h, 0.0)]];
    let psi_plus: M = [[z, (h, 0.0)], [(h, 0.0), z]];
    let ket00: M = [[(1.0, 0.0), z], [z, z]];
    let ket11: M = [[z, z], [z, (1.0, 0.0)]];
    let hand_n = |xs: &[M]| {
        let coords: Vec<[f64; 4]> = hand::generators(xs)
            .iter()
            .map(hand::pauli_coords)
            .collect();
        hand::rank(&coords, 1e-12)
    };

    let cases = [
        ("bell_pair.json", vec![phi_plus, phi_minus], 1usize),
        ("three_bells.json", vec![phi_plus, phi_minus, psi_plus], 3),
        ("product_pair.json", vec![ket00, ket11], 0),
    ];
    let mut parts = Vec::new();
    for (file, xs, expected) in cases {
        let fam = load(file);
        let n = kspace::build_kspace(&fam.operators(), kspace::DEFAULT_RANK_TOL).dim();
        let by_hand = hand_n(&xs);
        check(n == expected && by_hand == expected, || {
            format!("{file}: library N = {n}, hand N = {by_hand}, expected {expected}")
        })?;
        parts.push(format!("{file}: N={n}"));
    }

    let fam = load("three_bells.json");
    let profile = states::schmidt_profile(&fam).map_err(|e| e.to_string())?;
    let bound = protocol::discrimination_bound(&profile, 2)
        .map_err(|e| e.to_string())?
        .bound;
    let hand_bound = 1.0
        - [phi_plus, phi_minus, psi_plus]
            .iter()
            .map(hand::schmidt_head)
            .fold(0.0, f64::max);
    check(bound.abs() <= 1e-12 && hand_bound.abs() <= 1e-12, || {
        format!("three Bell bound {bound:e}, by hand {hand_bound:e}")
    })?;
    parts.push(format!("three-Bell bound {bound:.1e}"));
    Ok(parts.join("; "))
}

fn conclusive_end_to_end() -> Outcome {
    let fam = load("conclusive_4x4.json");
    let rep = fam.operators();
    let n = kspace::build_kspace(&rep, kspace::DEFAULT_RANK_TOL).dim();
    check(n == 3, || format!("dim K = {n}"))?;
    let profile = states::schmidt_profile(&fam).map_err(|e| e.to_string())?;
    for (l, p) in profile.per_state.iter().enumerate() {
        let dev = p
            .iter()
            .zip([0.4, 0.3, 0.2, 0.1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check(dev <= 1e-12, || format!("state {l}: profile {p:?}"))?;
    }
    let (p, summary) =
        pipeline::compile(&fam, &PipelineOptions::default()).map_err(|e| e.to_string())?;
    check(summary.n_p == 2, || format!("n_p = {}", summary.n_p))?;
    let masses = &summary.bound.error_mass;
    check(masses.iter().all(|m| *m <= 0.7 + 1e-8), || {
        format!("error masses {masses:?}")
    })?;

    let trials = 100_000;
    let mut worst_sigma = 0.0_f64;
    let mut min_success = 1.0_f64;
    for (l, mass) in masses.iter().enumerate() {
        let d = simulator::outcome_distribution(&p, &fam, l).map_err(|e| e.to_string())?;
        check(d.success() >= 0.3, || {
            format!("state {l}: analytic success {}", d.success())
        })?;
        check((d.inconclusive() - mass).abs() <= 1e-9, || {
            format!(
                "state {l}: inconclusive {} vs mass {mass}",
                d.inconclusive()
            )
        })?;
        min_success = min_success.min(d.success());
        let s =
            simulator::simulate(&p, &fam, l, trials, 17 + l as u64).map_err(|e| e.to_string())?;
        check(s.misidentifications() == 0, || {
            format!("state {l}: {} misidentifications", s.misidentifications())
        })?;
        for (empirical, analytic) in [
            (s.success_rate, d.success()),
            (s.inconclusive_rate, d.inconclusive()),
        ] {
            let sigma = (analytic * (1.0 - analytic) / trials as f64).sqrt();
            let z = (empirical - analytic).abs() / sigma;
            check(z <= 3.0, || {
                format!("state {l}: empirical {empirical} vs analytic {analytic} ({z:.2} sigma)")
            })?;
            worst_sigma = worst_sigma.max(z);
        }
    }
    Ok(format!(
        "N=3, masses {:.3?} <= 0.7, min analytic success {min_success:.3} >= 0.3, 10^5 trials within {worst_sigma:.2} sigma",
        masses
    ))
}

fn convexity_probe() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_margin = f64::INFINITY;
    for i in 0..20 {
        let d = rng.random_range(2..=8);
        let ops = [random_traceless(d, &mut rng), random_traceless(d, &mut rng)];
        let identity = CMatrix::identity(d, d);
        let points =
            jnr::sample_range(&ops, &identity, 10_000, &mut rng).map_err(|e| e.to_string())?;
        let xy: Vec<[f64; 2]> = points.iter().map(|p| [p.coords[0], p.coords[1]]).collect();
        let margin = jnr::origin_hull_margin(&xy);
        check(margin >= -1e-6, || {
            format!("pair {i} (d={d}): origin outside hull by {:e}", -margin)
        })?;
        min_margin = min_margin.min(margin);
    }
    Ok(format!("20 pairs, smallest origin margin {min_margin:.2e}"))
}

fn dimension_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 13];
    for i in 0..100 {
        let m = rng.random_range(2..=4);
        let (da, db) = loop {
            let pair = (rng.random_range(1..=5), rng.random_range(1..=5));
            if pair.0 * pair.1 >= m {
                break pair;
            }
        };
        let fam = random_family(m, da, db, &mut rng);
        let n = kspace::build_kspace(&fam.operators(), kspace::DEFAULT_RANK_TOL).dim();
        check(n <= m * (m - 1), || format!("family {i}: M={m}, N={n}"))?;
        counts[n] += 1;
    }
    let seen: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(n, c)| format!("N={n}:{c}"))
        .collect();
    Ok(format!(
        "100 families, N <= M(M-1) throughout ({})",
        seen.join(" ")
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_locc"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("locc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let states = s(&data("conclusive_4x4.json"));
    let mut compared = 0;
    for seed in ["0", "5"] {
        let runs: Vec<Vec<Vec<u8>>> = (0..2)
            .map(|run| -> Result<Vec<Vec<u8>>, String> {
                let proto = s(&dir.join(format!("p{run}.json")));
                let cloud = s(&dir.join(format!("c{run}.csv")));
                let outputs = vec![
                    run_cli(&["analyze", &states, "--seed", seed])?,
                    run_cli(&["compile", &states, "-o", &proto, "--seed", seed])?,
                    std::fs::read(&proto).map_err(|e| e.to_string())?,
                    run_cli(&[
                        "simulate",
                        &proto,
                        &states,
                        "--true-state",
                        "beta",
                        "--trials",
                        "5000",
                        "--seed",
                        seed,
                    ])?,
                    run_cli(&["bound", &states, "--np", "2"])?,
                    run_cli(&["jnr-sample", &states, "--samples", "200", "--seed", seed])?,
                    run_cli(&[
                        "jnr-sample",
                        &states,
                        "--samples",
                        "200",
                        "--seed",
                        seed,
                        "-o",
                        &cloud,
                    ])
                    .and_then(|_| std::fs::read(&cloud).map_err(|e| e.to_string()))?,
                ];
                Ok(outputs)
            })
            .collect::<Result<_, _>>()?;
        for (j, (a, b)) in runs[0].iter().zip(&runs[1]).enumerate() {
            check(a == b, || {
                format!("seed {seed}: output {j} differs between runs")
            })?;
            compared += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!(
        "{compared} outputs byte-identical across repeated runs"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("deterministic end-to-end (M=2)", deterministic_end_to_end),
        ("zero-finder correctness", zero_finder_correctness),
        ("deflation invariants", deflation_invariants),
        ("K-space facts", kspace_facts),
        ("conclusive end-to-end (C^4 x C^4)", conclusive_end_to_end),
        ("numerical-range convexity probe", convexity_probe),
        ("dimension bound N <= M(M-1)", dimension_bound),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.2}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.2}s]: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
