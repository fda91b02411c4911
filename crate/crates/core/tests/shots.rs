use std::path::{Path, PathBuf};

use qsegf::greens::{lehmann_greens, matsubara_grid, GreensFunction, MatsubaraGrid};
use qsegf::pipeline::{
    median_error, run_shots, run_statevector, BinInput, Problem, RunConfig, StatevectorRun,
};
use qsegf::qse::{solve_sector, Sector, ShotSettings, SubspaceOperators, Truncation};
use qsegf::stats::propagate;
use qsegf::vqe::VqeOptions;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn h2() -> (Problem, MatsubaraGrid, StatevectorRun) {
    let cfg = RunConfig {
        fcidump: fixture("h2_sto6g_0.76.fcidump"),
        rotation: Some(fixture("h2_sto6g_0.76.rotation")),
        ..RunConfig::default()
    };
    let problem = Problem::load(&cfg).unwrap();
    let grid = matsubara_grid(100.0, 200).unwrap();
    let sv = run_statevector(&problem, &grid, &VqeOptions::default(), 1e-8).unwrap();
    (problem, grid, sv)
}

fn median_errors(p: &Problem, grid: &MatsubaraGrid, sv: &StatevectorRun, shots: u64) -> f64 {
    let mut v: Vec<f64> = (0..10u64)
        .map(|seed| {
            let run = run_shots(
                p,
                &sv.state,
                &sv.reference.greens,
                grid,
                ShotSettings { shots, bins: 10, seed },
                1e-3,
            )
            .unwrap();
            assert_eq!((run.rank_ea, run.rank_ip), (4, 4));
            median_error(&run.greens).unwrap()
        })
        .collect();
    v.sort_by(f64::total_cmp);
    0.5 * (v[4] + v[5])
}

#[test]
fn error_bars_shrink_with_the_square_root_of_shots() {
    // ε below the smallest overlap eigenvalue keeps the rank fixed
    let (p, grid, sv) = h2();
    let ratio = median_errors(&p, &grid, &sv, 8192 * 16) / median_errors(&p, &grid, &sv, 8192);
    assert!((1.0 / 6.0..=1.0 / 2.5).contains(&ratio), "{ratio}");
}

#[test]
fn exact_bins_reproduce_the_noiseless_pipeline() {
    let (p, grid, sv) = h2();
    let ea = SubspaceOperators::new(&p.hamiltonian, Sector::Ea).unwrap();
    let ip = SubspaceOperators::new(&p.hamiltonian, Sector::Ip).unwrap();
    let exact = BinInput {
        e0: sv.vqe.energy,
        ea: ea.exact(&sv.state).unwrap(),
        ip: ip.exact(&sv.state).unwrap(),
    };
    let bins = vec![exact.clone(); 10];
    let pipeline = |b: &BinInput| -> qsegf::Result<GreensFunction> {
        let ea = solve_sector(&b.ea, Truncation::Rank(4))?;
        let ip = solve_sector(&b.ip, Truncation::Rank(4))?;
        Ok(lehmann_greens(b.e0, &ea, &ip, &grid)?)
    };
    let g = propagate(&bins, &[1.0; 10], pipeline).unwrap();
    assert!(g.errors.as_ref().unwrap().iter().all(|m| m.iter().all(|e| e.re == 0.0 && e.im == 0.0)));
    assert!(g.max_abs_diff(&sv.correlated.greens).unwrap() < 1e-12);
}

#[test]
fn shot_runs_are_seeded() {
    let (p, grid, sv) = h2();
    let run = |seed| {
        run_shots(
            &p,
            &sv.state,
            &sv.reference.greens,
            &grid,
            ShotSettings { shots: 1000, bins: 7, seed },
            1e-2,
        )
        .unwrap()
    };
    let (a, b, c) = (run(5), run(5), run(6));
    assert_eq!(a.greens.values, b.greens.values);
    assert_eq!(a.greens.errors, b.greens.errors);
    assert_eq!(a.sigma.values, b.sigma.values);
    assert_ne!(a.greens.values, c.greens.values);
}

#[test]
fn sampled_electron_count_and_energy_are_consistent() {
    let (p, grid, sv) = h2();
    let run = run_shots(
        &p,
        &sv.state,
        &sv.reference.greens,
        &grid,
        ShotSettings { shots: 8192, bins: 10, seed: 11 },
        1e-2,
    )
    .unwrap();
    assert!((run.n_electrons.mean - 2.0).abs() < 5.0 * run.n_electrons.std + 1e-9);
    assert!((run.e0.mean - sv.vqe.energy).abs() < 5.0 * run.e0.std);
    assert!(run.e0.std > 0.0 && run.e0.std < 1e-2);
    let k = run.kurtosis.unwrap();
    assert!(k.median.is_finite() && k.max >= k.median);
}
