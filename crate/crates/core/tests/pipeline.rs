use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qsegf::error::{Error, OracleError, QseError};
use qsegf::pipeline::{
    freeze_oracle, read_greens, run_compare, run_fci, run_gf, Mode, RunConfig,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn h2(output: &Path) -> RunConfig {
    RunConfig {
        fcidump: fixture("h2_sto6g_0.76.fcidump"),
        output: output.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn gf_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_gf(&h2(dir.path())).unwrap();
    for f in ["manifest.json", "vqe.json", "g.csv", "g0.csv", "sigma.csv", "summary.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(summary.max_dev_vs_fci.unwrap() <= 1e-8);
    assert!((summary.n_electrons - 2.0).abs() < 1e-10);

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    for key in ["e_vqe", "e_fci", "n_electrons", "sum_rule_residual", "max_dev_vs_fci"] {
        assert!(json[key].is_number(), "{key}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "gf");
    assert_eq!(manifest["config"]["beta"], 100.0);
    assert_eq!(manifest["config"]["n_max"], 1000);
    assert_eq!(manifest["config"]["mode"], "statevector");

    let g = read_greens(&dir.path().join("g.csv")).unwrap();
    assert_eq!(g.grid.len(), 1000);
    assert_eq!(g.n_orbitals(), 4);
    assert!(g.errors.is_none());
}

#[test]
fn compare_against_itself_is_zero_and_against_fci_is_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run_gf(&h2(&out.join("gf"))).unwrap();
    run_fci(&h2(&out.join("fci"))).unwrap();
    let g = out.join("gf/g.csv");

    let same = run_compare(&g, &g, &out.join("same")).unwrap();
    assert_eq!(same.max_abs, 0.0);
    assert_eq!(same.mean_abs, 0.0);
    assert_eq!(same.points, 1000 * 16);
    let diff = read_greens(&out.join("same/diff.csv")).unwrap();
    assert!(diff.values.iter().all(|m| m.iter().all(|z| z.re == 0.0 && z.im == 0.0)));
    assert!(out.join("same/manifest.json").is_file());

    let vs_fci = run_compare(&g, &out.join("fci/g_fci.csv"), &out.join("vs_fci")).unwrap();
    assert!(vs_fci.max_abs <= 1e-8, "{}", vs_fci.max_abs);
}

#[test]
fn compare_rejects_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run_fci(&h2(&out.join("a"))).unwrap();
    run_fci(&RunConfig {
        n_max: 10,
        ..h2(&out.join("b"))
    })
    .unwrap();
    let err = run_compare(&out.join("a/g_fci.csv"), &out.join("b/g_fci.csv"), &out.join("c"));
    assert!(matches!(err, Err(Error::Greens(_))));
}

#[test]
fn fci_matches_frozen_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        regression: Some(fixture("h2_sto6g_0.76.oracle.json")),
        ..h2(dir.path())
    };
    let summary = run_fci(&cfg).unwrap();
    assert!(summary.regression_deviation.unwrap() <= 1e-10);
    for f in ["g_fci.csv", "sigma_fci.csv", "spectra.json", "manifest.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert_eq!(summary.spectra.neutral.len(), 6);
    assert_eq!(summary.spectra.plus.len(), 4);
}

#[test]
fn tampered_oracle_record_is_a_regression_error() {
    let dir = tempfile::tempdir().unwrap();
    let frozen = dir.path().join("frozen.json");
    freeze_oracle(&h2(dir.path()), &frozen).unwrap();
    let mut record: serde_json::Value = serde_json::from_str(&fs::read_to_string(&frozen).unwrap()).unwrap();
    let e = record["ground_energy"].as_f64().unwrap();
    record["ground_energy"] = (e + 1e-9).into();
    fs::write(&frozen, record.to_string()).unwrap();
    let cfg = RunConfig {
        regression: Some(frozen.clone()),
        ..h2(&dir.path().join("out"))
    };
    let err = run_fci(&cfg).unwrap_err();
    assert!(matches!(err, Error::Regression(_)));
    assert!(!err.is_usage());

    let other = RunConfig {
        fcidump: fixture("h4_chain_sto6g_1.0.fcidump"),
        regression: Some(frozen),
        ..h2(&dir.path().join("out4"))
    };
    assert!(matches!(run_fci(&other), Err(Error::Regression(_))));
}

/// H₂ integrals with every spin-orbital occupied.
fn filled_h2(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(fixture("h2_sto6g_0.76.fcidump")).unwrap();
    let path = dir.join("filled.fcidump");
    fs::write(&path, text.replacen("NELEC= 2", "NELEC= 4", 1)).unwrap();
    path
}

#[test]
fn empty_attachment_sector_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        fcidump: filled_h2(dir.path()),
        ..h2(&dir.path().join("out"))
    };
    let err = run_fci(&cfg).unwrap_err();
    assert!(matches!(err, Error::Oracle(OracleError::EmptySector(5))), "{err}");
    let err = run_gf(&cfg).unwrap_err();
    assert!(matches!(err, Error::Qse(QseError::EmptySubspace(_))), "{err}");
}

#[test]
fn missing_fcidump_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        fcidump: dir.path().join("absent.fcidump"),
        ..h2(dir.path())
    };
    let err = run_gf(&cfg).unwrap_err();
    assert!(err.is_usage());
    assert!(err.to_string().contains("absent.fcidump"));
}

#[test]
fn config_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
        fcidump = "systems/h2.fcidump"
        rotation = "/abs/u.txt"
        beta = 50.0
        n_max = 64
        ansatz = "single-xxxy"
        mode = "shots"
        shots = 4096
        bins = 8
        seed = 3
        output = "runs/a"

        [vqe]
        gtol = 1e-9
    "#;
    let cfg = RunConfig::from_toml(text, dir.path()).unwrap();
    assert_eq!(cfg.fcidump, dir.path().join("systems/h2.fcidump"));
    assert_eq!(cfg.rotation.as_deref(), Some(Path::new("/abs/u.txt")));
    assert_eq!(cfg.output, dir.path().join("runs/a"));
    assert_eq!(cfg.mode, Mode::Shots);
    assert_eq!(cfg.vqe.gtol, 1e-9);
    assert_eq!(cfg.vqe.max_iter, 500);
    assert_eq!(cfg.threshold(), 1e-2);
    assert!(cfg.validate().is_ok());

    assert!(RunConfig::from_toml("betta = 1.0", dir.path()).is_err());
    assert!(RunConfig::from_toml("mode = \"noisy\"", dir.path()).is_err());
}

#[test]
fn validation_rejects_bad_settings() {
    let base = RunConfig {
        fcidump: PathBuf::from("x.fcidump"),
        ..RunConfig::default()
    };
    assert!(base.validate().is_ok());
    assert!(RunConfig::default().validate().is_err());
    let shots = RunConfig {
        mode: Mode::Shots,
        ..base.clone()
    };
    assert!(shots.validate().is_ok());
    for bad in [
        RunConfig { beta: 0.0, ..base.clone() },
        RunConfig { beta: f64::NAN, ..base.clone() },
        RunConfig { n_max: 0, ..base.clone() },
        RunConfig { overlap_threshold: Some(-1.0), ..base.clone() },
        RunConfig { bins: 1, ..shots.clone() },
        RunConfig { shots: 5, bins: 10, ..shots.clone() },
    ] {
        let err = bad.validate().unwrap_err();
        assert!(err.is_usage(), "{err}");
    }
}

#[test]
fn h4_fci_run_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let summary = run_fci(&RunConfig {
        fcidump: fixture("h4_chain_sto6g_1.0.fcidump"),
        rotation: Some(fixture("h4_chain_sto6g_1.0.rotation")),
        ..h2(dir.path())
    })
    .unwrap();
    assert!(start.elapsed().as_secs_f64() < 60.0);
    assert!((summary.e_fci - -2.1809665146794215).abs() < 1e-9);
}

#[test]
fn shot_mode_summary_reports_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        mode: Mode::Shots,
        n_max: 100,
        rotation: Some(fixture("h2_sto6g_0.76.rotation")),
        ..h2(dir.path())
    };
    let summary = run_gf(&cfg).unwrap();
    assert!(summary.n_electrons_err.unwrap() >= 0.0);
    assert!((summary.e0_shots.unwrap() - summary.e_vqe).abs() < 10.0 * summary.e0_shots_err.unwrap() + 1e-3);
    assert!(summary.median_err_g.unwrap() > 0.0);
    assert!(summary.measured_strings.unwrap() > 0);
    assert!(summary.kurtosis.is_some());
    let g = read_greens(&dir.path().join("g.csv")).unwrap();
    let errs = g.errors.unwrap();
    assert!(errs.iter().all(|m| m.iter().all(|e| e.re >= 0.0 && e.im >= 0.0)));
}
