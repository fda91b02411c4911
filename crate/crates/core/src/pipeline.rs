//! End-to-end runs: configuration, orchestration and emitted artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzMode, QccCircuit};
use crate::error::{Error, QseError, Result};
use crate::greens::{
    self, hf_reference_greens, lehmann_greens, matsubara_grid, qse_greens, self_energy,
    GreensFunction, MatsubaraGrid, QseGreens, SelfEnergy,
};
use crate::integrals::{read_fcidump, read_rotation, to_spin_orbitals, MolecularIntegrals};
use crate::linalg::{hermitize, max_abs, CMatrix};
use crate::oracle::{FciSolution, SpectraReport};
use crate::pauli::{map_hamiltonian, PauliSum};
use crate::qse::{
    overlap_rank, solve_sector, MeasurementTable, Sector, ShotSettings, SubspaceMatrices,
    SubspaceOperators, Truncation,
};
use crate::simulator::Statevector;
use crate::stats::{self, excess_kurtosis, BinAverage, JackknifeEstimate};
use crate::vqe::{minimize, VqeOptions, VqeResult};

pub const DEFAULT_THRESHOLD_STATEVECTOR: f64 = 1e-8;
pub const DEFAULT_THRESHOLD_SHOTS: f64 = 1e-2;
/// Frequency indices sampled into oracle regression files.
pub const REGRESSION_INDICES: [i64; 3] = [0, 10, 100];
pub const REGRESSION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Statevector,
    Shots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fcidump: PathBuf,
    pub rotation: Option<PathBuf>,
    pub beta: f64,
    pub n_max: usize,
    pub ansatz: AnsatzMode,
    pub vqe: VqeOptions,
    pub mode: Mode,
    /// Shots per Pauli string.
    pub shots: u64,
    pub bins: usize,
    pub seed: u64,
    /// Overlap eigenvalue cutoff; defaults depend on `mode`.
    pub overlap_threshold: Option<f64>,
    pub output: PathBuf,
    /// Compare against exact diagonalization.
    pub oracle: bool,
    /// Frozen oracle values checked by `run_fci`.
    pub regression: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fcidump: PathBuf::new(),
            rotation: None,
            beta: 100.0,
            n_max: 1000,
            ansatz: AnsatzMode::Auto,
            vqe: VqeOptions::default(),
            mode: Mode::Statevector,
            shots: 8192,
            bins: 10,
            seed: 0,
            overlap_threshold: None,
            output: PathBuf::from("out"),
            oracle: true,
            regression: None,
        }
    }
}

impl RunConfig {
    /// Parse TOML; relative paths are taken relative to `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.fcidump);
        rebase(&mut cfg.output);
        if let Some(p) = cfg.rotation.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.regression.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn threshold(&self) -> f64 {
        self.overlap_threshold.unwrap_or(match self.mode {
            Mode::Statevector => DEFAULT_THRESHOLD_STATEVECTOR,
            Mode::Shots => DEFAULT_THRESHOLD_SHOTS,
        })
    }

    pub fn shot_settings(&self) -> ShotSettings {
        ShotSettings {
            shots: self.shots,
            bins: self.bins,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.fcidump.as_os_str().is_empty() {
            return bad("no FCIDUMP path given".into());
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.n_max == 0 {
            return bad("n_max must be at least 1".into());
        }
        if !(self.threshold() > 0.0) {
            return bad(format!("overlap threshold must be positive, got {}", self.threshold()));
        }
        if self.mode == Mode::Shots {
            if self.bins < 2 {
                return bad(format!("jackknife needs at least 2 bins, got {}", self.bins));
            }
            if self.shots < self.bins as u64 {
                return bad(format!(
                    "shots ({}) must be at least the number of bins ({})",
                    self.shots, self.bins
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<MatsubaraGrid> {
        Ok(matsubara_grid(self.beta, self.n_max)?)
    }
}

/// Hamiltonian and circuit in the measurement basis.
#[derive(Debug, Clone)]
pub struct Problem {
    /// Integrals in the basis the circuit measures in (rotated if a rotation
    /// was given).
    pub integrals: MolecularIntegrals,
    pub hamiltonian: PauliSum,
    pub circuit: QccCircuit,
}

impl Problem {
    pub fn new(
        mi: &MolecularIntegrals,
        rotation: Option<&DMatrix<f64>>,
        mode: AnsatzMode,
    ) -> Result<Self> {
        mi.validate()?;
        let integrals = match rotation {
            Some(u) => mi.transformed(u)?,
            None => mi.clone(),
        };
        let hamiltonian = map_hamiltonian(&to_spin_orbitals(&integrals))?;
        let circuit = QccCircuit::new(mi.n_spatial, mi.n_electrons, mi.ms2, mode, rotation)?;
        Ok(Self {
            integrals,
            hamiltonian,
            circuit,
        })
    }

    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let mi = read_fcidump(&cfg.fcidump)?;
        let rotation = match &cfg.rotation {
            Some(p) => Some(read_rotation(p, mi.n_spatial)?),
            None => None,
        };
        Self::new(&mi, rotation.as_ref(), cfg.ansatz)
    }

    pub fn n_electrons(&self) -> usize {
        self.integrals.n_electrons
    }

    pub fn oracle(&self) -> Result<FciSolution> {
        Ok(FciSolution::new(&self.hamiltonian, self.n_electrons())?)
    }
}

/// Noiseless run: VQE, then subspace expansion on the optimized and on the
/// reference state.
#[derive(Debug, Clone)]
pub struct StatevectorRun {
    pub vqe: VqeResult,
    pub state: Statevector,
    pub reference: QseGreens,
    pub correlated: QseGreens,
    pub sigma: SelfEnergy,
}

pub fn run_statevector(
    problem: &Problem,
    grid: &MatsubaraGrid,
    opts: &VqeOptions,
    threshold: f64,
) -> Result<StatevectorRun> {
    let truncation = Truncation::Threshold(threshold);
    let vqe = minimize(&problem.hamiltonian, &problem.circuit, opts)?;
    let state = problem.circuit.prepare_state(&vqe.theta)?;
    let correlated = qse_greens(&state, &problem.hamiltonian, grid, truncation)?;
    let reference = hf_reference_greens(&problem.hamiltonian, &problem.circuit, grid, truncation)?;
    let sigma = self_energy(&reference.greens, &correlated.greens)?;
    Ok(StatevectorRun {
        vqe,
        state,
        reference,
        correlated,
        sigma,
    })
}

/// Bin-level subspace data of one shot run.
#[derive(Debug, Clone, PartialEq)]
pub struct BinInput {
    pub e0: f64,
    pub ea: SubspaceMatrices,
    pub ip: SubspaceMatrices,
}

impl BinAverage for BinInput {
    fn weighted_mean(items: &[&Self], weights: &[f64]) -> Self {
        let mean = |f: &dyn Fn(&BinInput) -> &CMatrix| {
            let xs: Vec<&CMatrix> = items.iter().map(|b| f(b)).collect();
            CMatrix::weighted_mean(&xs, weights)
        };
        let e0s: Vec<&f64> = items.iter().map(|b| &b.e0).collect();
        Self {
            e0: f64::weighted_mean(&e0s, weights),
            ea: SubspaceMatrices {
                sector: Sector::Ea,
                h: mean(&|b| &b.ea.h),
                s: mean(&|b| &b.ea.s),
            },
            ip: SubspaceMatrices {
                sector: Sector::Ip,
                h: mean(&|b| &b.ip.h),
                s: mean(&|b| &b.ip.s),
            },
        }
    }
}

/// Excess kurtosis of single-bin Green's-function estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KurtosisReport {
    /// Over all (element, frequency, re/im) channels with nonzero spread.
    pub median: f64,
    pub max: f64,
    /// Re and Im of G₀₀ at the first frequency.
    pub g00_first: (Option<f64>, Option<f64>),
    /// Bins whose single-bin pipeline failed and were left out.
    pub failed_bins: usize,
}

#[derive(Debug, Clone)]
pub struct ShotRun {
    pub greens: GreensFunction,
    pub sigma: SelfEnergy,
    pub e0: JackknifeEstimate,
    pub n_electrons: JackknifeEstimate,
    pub rank_ea: usize,
    pub rank_ip: usize,
    pub n_strings: usize,
    /// Completeness residual of the full-sample solution.
    pub sum_rule_residual: f64,
    pub kurtosis: Option<KurtosisReport>,
}

/// Sample every Pauli string needed for `H`, the EA and the IP matrices on
/// `psi`, then propagate the bin-level noise through the pipeline by
/// jackknife. The retained subspace dimension is fixed from the full-sample
/// overlaps so every subsample solves a problem of the same size.
pub fn run_shots(
    problem: &Problem,
    psi: &Statevector,
    g0: &GreensFunction,
    grid: &MatsubaraGrid,
    settings: ShotSettings,
    threshold: f64,
) -> Result<ShotRun> {
    let h = &problem.hamiltonian;
    let ops_ea = SubspaceOperators::new(h, Sector::Ea)?;
    let ops_ip = SubspaceOperators::new(h, Sector::Ip)?;
    let observables = std::iter::once(h)
        .chain(ops_ea.all_operators())
        .chain(ops_ip.all_operators());
    let table = MeasurementTable::measure(psi, observables, settings)?;
    let bins: Vec<BinInput> = (0..settings.bins)
        .map(|b| BinInput {
            e0: table.value(h, Some(b)).re,
            ea: table.subspace(&ops_ea, Some(b)),
            ip: table.subspace(&ops_ip, Some(b)),
        })
        .collect();
    let weights: Vec<f64> = crate::simulator::bin_sizes(settings.shots, settings.bins)
        .into_iter()
        .map(|n| n as f64)
        .collect();
    let all: Vec<&BinInput> = bins.iter().collect();
    let full = BinInput::weighted_mean(&all, &weights);

    let rank_ea = overlap_rank(&hermitize(&full.ea.s), threshold);
    let rank_ip = overlap_rank(&hermitize(&full.ip.s), threshold);
    if rank_ea == 0 || rank_ip == 0 {
        return Err(QseError::EmptySubspace(threshold).into());
    }
    let solve = |inp: &BinInput| -> Result<(f64, GreensFunction)> {
        let ea = solve_sector(&inp.ea, Truncation::Rank(rank_ea))?;
        let ip = solve_sector(&inp.ip, Truncation::Rank(rank_ip))?;
        let g = lehmann_greens(inp.e0, &ea, &ip, grid)?;
        let n = g.n_orbitals();
        let residual = max_abs(&(ea.weight_matrix() + ip.weight_matrix() - CMatrix::identity(n, n)));
        Ok((residual, g))
    };
    let (sum_rule_residual, _) = solve(&full)?;

    let greens = stats::propagate(&bins, &weights, |inp| Ok(solve(inp)?.1))?;
    let sigma = stats::propagate(&bins, &weights, |inp| Ok(self_energy(g0, &solve(inp)?.1)?))?;

    let e0_bins: Vec<f64> = bins.iter().map(|b| b.e0).collect();
    let n_bins: Vec<f64> = bins.iter().map(|b| greens::electron_count(&b.ip.s)).collect();
    let e0 = weighted_jackknife(&e0_bins, &weights)?;
    let n_electrons = weighted_jackknife(&n_bins, &weights)?;

    let kurtosis = kurtosis_report(&bins, |inp| Ok(solve(inp)?.1));
    Ok(ShotRun {
        greens,
        sigma,
        e0,
        n_electrons,
        rank_ea,
        rank_ip,
        n_strings: table.n_strings(),
        sum_rule_residual,
        kurtosis,
    })
}

/// Jackknife of a bin-weighted mean.
fn weighted_jackknife(values: &[f64], weights: &[f64]) -> Result<JackknifeEstimate> {
    let m = values.len();
    let total_w: f64 = weights.iter().sum();
    let total: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    let loo: Vec<f64> = (0..m)
        .map(|b| (total - values[b] * weights[b]) / (total_w - weights[b]))
        .collect();
    Ok(stats::jackknife_from_subsamples(total / total_w, &loo)?)
}

fn kurtosis_report(
    bins: &[BinInput],
    pipeline: impl Fn(&BinInput) -> Result<GreensFunction> + Sync + Send,
) -> Option<KurtosisReport> {
    let per_bin = crate::par::map_slice(bins, |b| pipeline(b).ok());
    let failed_bins = per_bin.iter().filter(|g| g.is_none()).count();
    let ok: Vec<&GreensFunction> = per_bin.iter().flatten().collect();
    if ok.len() < 4 {
        return None;
    }
    let n = ok[0].n_orbitals();
    let channel = |k: usize, i: usize, j: usize, im: bool| -> Vec<f64> {
        ok.iter()
            .map(|g| {
                let v = g.values[k][(i, j)];
                if im {
                    v.im
                } else {
                    v.re
                }
            })
            .collect()
    };
    let mut all = Vec::new();
    for k in 0..ok[0].values.len() {
        for i in 0..n {
            for j in 0..n {
                for im in [false, true] {
                    if let Some(x) = excess_kurtosis(&channel(k, i, j, im)) {
                        all.push(x);
                    }
                }
            }
        }
    }
    if all.is_empty() {
        return None;
    }
    all.sort_by(f64::total_cmp);
    Some(KurtosisReport {
        median: all[all.len() / 2],
        max: *all.last().unwrap(),
        g00_first: (
            excess_kurtosis(&channel(0, 0, 0, false)),
            excess_kurtosis(&channel(0, 0, 0, true)),
        ),
        failed_bins,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub e_vqe: f64,
    pub e_fci: Option<f64>,
    pub n_electrons: f64,
    pub sum_rule_residual: f64,
    pub max_dev_vs_fci: Option<f64>,
    pub e_hf: f64,
    pub mode: Mode,
    pub vqe_converged: bool,
    pub vqe_iterations: usize,
    pub n_params: usize,
    pub rank_ea: usize,
    pub rank_ip: usize,
    pub max_dev_sigma_vs_fci: Option<f64>,
    pub n_electrons_err: Option<f64>,
    pub e0_shots: Option<f64>,
    pub e0_shots_err: Option<f64>,
    pub measured_strings: Option<usize>,
    pub median_err_g: Option<f64>,
    pub kurtosis: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    program: &'static str,
    version: &'static str,
    parallel: bool,
    command: &'a str,
    config: &'a C,
}

fn write_manifest(dir: &Path, command: &str, config: &impl Serialize) -> Result<()> {
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            parallel: crate::par::is_parallel(),
            command,
            config,
        },
    )
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_greens(path: &Path, g: &GreensFunction) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    greens::write_csv(g, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn read_greens(path: &Path) -> Result<GreensFunction> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(greens::read_csv(&text)?)
}

fn prepare_output(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))
}

/// Median error bar over every element, frequency and re/im channel.
pub fn median_error(g: &GreensFunction) -> Option<f64> {
    let errs = g.errors.as_ref()?;
    let mut all: Vec<f64> = errs
        .iter()
        .flat_map(|m| m.iter().flat_map(|e| [e.re, e.im]))
        .collect();
    all.sort_by(f64::total_cmp);
    Some(all[all.len() / 2])
}

/// Full `gf` run: writes `vqe.json`, `g.csv`, `g0.csv`, `sigma.csv`,
/// `summary.json` and `manifest.json` into the output directory.
pub fn run_gf(cfg: &RunConfig) -> Result<Summary> {
    cfg.validate()?;
    let problem = Problem::load(cfg)?;
    let grid = cfg.grid()?;
    prepare_output(cfg)?;
    write_manifest(&cfg.output, "gf", cfg)?;

    // the reference G₀ and the VQE state are always noiseless
    let sv_threshold = match cfg.mode {
        Mode::Statevector => cfg.threshold(),
        Mode::Shots => DEFAULT_THRESHOLD_STATEVECTOR,
    };
    let sv = run_statevector(&problem, &grid, &cfg.vqe, sv_threshold)?;
    write_json(&cfg.output.join("vqe.json"), &sv.vqe)?;

    let mut summary = Summary {
        e_vqe: sv.vqe.energy,
        e_fci: None,
        n_electrons: sv.correlated.electron_count(),
        sum_rule_residual: sv.correlated.sum_rule_residual(),
        max_dev_vs_fci: None,
        e_hf: sv.reference.e0,
        mode: cfg.mode,
        vqe_converged: sv.vqe.converged,
        vqe_iterations: sv.vqe.iterations,
        n_params: problem.circuit.n_params(),
        rank_ea: sv.correlated.ea.rank(),
        rank_ip: sv.correlated.ip.rank(),
        max_dev_sigma_vs_fci: None,
        n_electrons_err: None,
        e0_shots: None,
        e0_shots_err: None,
        measured_strings: None,
        median_err_g: None,
        kurtosis: None,
    };
    let (g, sigma) = match cfg.mode {
        Mode::Statevector => (sv.correlated.greens.clone(), sv.sigma.clone()),
        Mode::Shots => {
            let shots = run_shots(
                &problem,
                &sv.state,
                &sv.reference.greens,
                &grid,
                cfg.shot_settings(),
                cfg.threshold(),
            )?;
            summary.n_electrons = shots.n_electrons.mean;
            summary.n_electrons_err = Some(shots.n_electrons.std);
            summary.e0_shots = Some(shots.e0.mean);
            summary.e0_shots_err = Some(shots.e0.std);
            summary.rank_ea = shots.rank_ea;
            summary.rank_ip = shots.rank_ip;
            summary.sum_rule_residual = shots.sum_rule_residual;
            summary.measured_strings = Some(shots.n_strings);
            summary.median_err_g = median_error(&shots.greens);
            summary.kurtosis = shots
                .kurtosis
                .map(|k| serde_json::to_value(k).expect("plain data"));
            (shots.greens, shots.sigma)
        }
    };
    write_greens(&cfg.output.join("g.csv"), &g)?;
    write_greens(&cfg.output.join("g0.csv"), &sv.reference.greens)?;
    write_greens(&cfg.output.join("sigma.csv"), &sigma)?;

    if cfg.oracle {
        let fci = problem.oracle()?;
        let g_fci = fci.greens(&grid);
        let sigma_fci = self_energy(&sv.reference.greens, &g_fci)?;
        summary.e_fci = Some(fci.ground_energy);
        summary.max_dev_vs_fci = Some(g.max_abs_diff(&g_fci)?);
        summary.max_dev_sigma_vs_fci = Some(sigma.max_abs_diff(&sigma_fci)?);
    }
    write_json(&cfg.output.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Frozen oracle values: energies and G at a few frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRegression {
    pub beta: f64,
    pub n_electrons: usize,
    pub ground_energy: f64,
    pub minus: Vec<f64>,
    pub neutral: Vec<f64>,
    pub plus: Vec<f64>,
    pub samples: Vec<GreensSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensSample {
    pub n: i64,
    pub omega: f64,
    /// Row-major.
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl OracleRegression {
    pub fn from_solution(fci: &FciSolution, beta: f64) -> Result<Self> {
        let grid = MatsubaraGrid::from_indices(beta, REGRESSION_INDICES.to_vec())?;
        let g = fci.greens(&grid);
        let samples = g
            .values
            .iter()
            .enumerate()
            .map(|(k, m)| GreensSample {
                n: grid.indices[k],
                omega: grid.omegas[k],
                re: m.row_iter().map(|r| r.iter().map(|x| x.re).collect()).collect(),
                im: m.row_iter().map(|r| r.iter().map(|x| x.im).collect()).collect(),
            })
            .collect();
        let r: SpectraReport = fci.report();
        Ok(Self {
            beta,
            n_electrons: r.n_electrons,
            ground_energy: r.ground_energy,
            minus: r.minus,
            neutral: r.neutral,
            plus: r.plus,
            samples,
        })
    }

    /// Largest absolute deviation between two regression records, or `None`
    /// when their shapes differ.
    pub fn max_deviation(&self, other: &Self) -> Option<f64> {
        if self.n_electrons != other.n_electrons
            || self.minus.len() != other.minus.len()
            || self.neutral.len() != other.neutral.len()
            || self.plus.len() != other.plus.len()
            || self.samples.len() != other.samples.len()
            || (self.beta - other.beta).abs() > 1e-12 * self.beta
        {
            return None;
        }
        let mut dev = (self.ground_energy - other.ground_energy).abs();
        for (a, b) in [(&self.minus, &other.minus), (&self.neutral, &other.neutral), (&self.plus, &other.plus)] {
            dev = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(dev, f64::max);
        }
        for (s, t) in self.samples.iter().zip(&other.samples) {
            if s.n != t.n || s.re.len() != t.re.len() {
                return None;
            }
            for (rs, rt) in s.re.iter().chain(&s.im).zip(t.re.iter().chain(&t.im)) {
                dev = rs.iter().zip(rt).map(|(x, y)| (x - y).abs()).fold(dev, f64::max);
            }
        }
        Some(dev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FciSummary {
    pub e_fci: f64,
    pub spectra: SpectraReport,
    pub regression_deviation: Option<f64>,
}

/// `fci` run: writes `g_fci.csv`, `sigma_fci.csv` (against the reference-
/// state G₀), `spectra.json` and `manifest.json`; checks a regression file
/// if one is configured.
pub fn run_fci(cfg: &RunConfig) -> Result<FciSummary> {
    cfg.validate()?;
    let problem = Problem::load(cfg)?;
    let grid = cfg.grid()?;
    let fci = problem.oracle()?;
    prepare_output(cfg)?;
    write_manifest(&cfg.output, "fci", cfg)?;
    let g_fci = fci.greens(&grid);
    let g0 = hf_reference_greens(
        &problem.hamiltonian,
        &problem.circuit,
        &grid,
        Truncation::Threshold(DEFAULT_THRESHOLD_STATEVECTOR),
    )?;
    let sigma = self_energy(&g0.greens, &g_fci)?;
    write_greens(&cfg.output.join("g_fci.csv"), &g_fci)?;
    write_greens(&cfg.output.join("sigma_fci.csv"), &sigma)?;
    let spectra = fci.report();
    write_json(&cfg.output.join("spectra.json"), &spectra)?;

    let regression_deviation = match &cfg.regression {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let frozen: OracleRegression = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let current = OracleRegression::from_solution(&fci, frozen.beta)?;
            let dev = current.max_deviation(&frozen).ok_or_else(|| {
                Error::Regression(format!("{} does not describe this system", path.display()))
            })?;
            if dev > REGRESSION_TOL {
                return Err(Error::Regression(format!(
                    "oracle deviates from {} by {dev:e} (tolerance {REGRESSION_TOL:e})",
                    path.display()
                )));
            }
            Some(dev)
        }
        None => None,
    };
    Ok(FciSummary {
        e_fci: fci.ground_energy,
        spectra,
        regression_deviation,
    })
}

/// Write the oracle regression record for `cfg` to `path`.
pub fn freeze_oracle(cfg: &RunConfig, path: &Path) -> Result<OracleRegression> {
    cfg.validate()?;
    let problem = Problem::load(cfg)?;
    let record = OracleRegression::from_solution(&problem.oracle()?, cfg.beta)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_json(path, &record)?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub points: usize,
    /// `(n, i, j)` of the largest deviation.
    pub argmax: (i64, usize, usize),
}

/// Element-wise `a − b`; writes `diff.csv`, `compare.json` and
/// `manifest.json` into `out`.
pub fn run_compare(a: &Path, b: &Path, out: &Path) -> Result<CompareReport> {
    let ga = read_greens(a)?;
    let gb = read_greens(b)?;
    if ga.n_orbitals() != gb.n_orbitals() {
        return Err(crate::error::GreensError::GridMismatch(format!(
            "{} orbitals vs {}",
            ga.n_orbitals(),
            gb.n_orbitals()
        ))
        .into());
    }
    ga.max_abs_diff(&gb)?;
    let diff = GreensFunction {
        grid: ga.grid.clone(),
        values: ga.values.iter().zip(&gb.values).map(|(x, y)| x - y).collect(),
        errors: None,
    };
    let mut max_abs = 0.0;
    let mut sum = 0.0;
    let mut argmax = (ga.grid.indices[0], 0, 0);
    let mut points = 0;
    for (k, m) in diff.values.iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let d = m[(i, j)].norm();
                sum += d;
                points += 1;
                if d > max_abs {
                    max_abs = d;
                    argmax = (ga.grid.indices[k], i, j);
                }
            }
        }
    }
    let report = CompareReport {
        max_abs,
        mean_abs: sum / points as f64,
        points,
        argmax,
    };
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    #[derive(Serialize)]
    struct Inputs<'a> {
        a: &'a Path,
        b: &'a Path,
        output: &'a Path,
    }
    write_manifest(out, "compare", &Inputs { a, b, output: out })?;
    write_greens(&out.join("diff.csv"), &diff)?;
    write_json(&out.join("compare.json"), &report)?;
    Ok(report)
}
