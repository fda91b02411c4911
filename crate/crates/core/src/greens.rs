//! Matsubara Green's functions in the Lehmann form
//!
//! G_ij(iω_n) = Σ_μ (X⁺_μi)* X⁺_μj / (iω_n + E₀ − E⁺_μ)
//!            + Σ_μ (X⁻_μj)* X⁻_μi / (iω_n + E⁻_μ − E₀)
//!
//! on the fermionic grid ω_n = (2n+1)π/β, plus the self-energy from the
//! Dyson relation Σ = G₀⁻¹ − G⁻¹.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;

use crate::ansatz::QccCircuit;
use crate::error::{GreensError, Result};
use crate::linalg::{condition_1, max_abs, CMatrix};
use crate::par;
use crate::pauli::PauliSum;
use crate::qse::{build_subspace_matrices, solve_sector, Sector, SubspaceResult, Truncation};
use crate::simulator::Statevector;

const CONDITION_WARN: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct MatsubaraGrid {
    pub beta: f64,
    pub indices: Vec<i64>,
    pub omegas: Vec<f64>,
}

pub fn matsubara_frequency(beta: f64, n: i64) -> f64 {
    (2 * n + 1) as f64 * PI / beta
}

/// Uniform fermionic grid `n = 0 … n_max − 1`.
pub fn matsubara_grid(beta: f64, n_max: usize) -> Result<MatsubaraGrid, GreensError> {
    if n_max == 0 {
        return Err(GreensError::EmptyGrid);
    }
    MatsubaraGrid::from_indices(beta, (0..n_max as i64).collect())
}

impl MatsubaraGrid {
    /// Grid on an arbitrary strictly increasing set of integer indices,
    /// negative ones included.
    pub fn from_indices(beta: f64, indices: Vec<i64>) -> Result<Self, GreensError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(GreensError::NonPositiveBeta(beta));
        }
        if indices.is_empty() {
            return Err(GreensError::EmptyGrid);
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GreensError::GridMismatch("indices must be strictly increasing".into()));
        }
        let omegas = indices.iter().map(|&n| matsubara_frequency(beta, n)).collect();
        Ok(Self {
            beta,
            indices,
            omegas,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The grid at `−ω_n` for every `ω_n` here, i.e. indices `−n − 1`.
    pub fn mirrored(&self) -> Self {
        let indices = self.indices.iter().rev().map(|&n| -n - 1).collect();
        Self::from_indices(self.beta, indices).expect("mirror of a valid grid is valid")
    }

    fn same_as(&self, other: &Self) -> Result<(), GreensError> {
        if self.indices != other.indices || (self.beta - other.beta).abs() > 1e-12 * self.beta {
            return Err(GreensError::GridMismatch(format!(
                "β {} with {} points vs β {} with {} points",
                self.beta,
                self.len(),
                other.beta,
                other.len()
            )));
        }
        Ok(())
    }
}

/// Matrix-valued function on a Matsubara grid with optional error bars.
///
/// `errors[k][(i, j)]` stores the standard deviation of the real part in
/// `.re` and of the imaginary part in `.im`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensFunction {
    pub grid: MatsubaraGrid,
    pub values: Vec<CMatrix>,
    pub errors: Option<Vec<CMatrix>>,
}

/// Self-energies share the Green's-function container.
pub type SelfEnergy = GreensFunction;

impl GreensFunction {
    pub fn n_orbitals(&self) -> usize {
        self.values.first().map_or(0, |m| m.nrows())
    }

    /// Largest element-wise modulus of the difference over the whole grid.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, GreensError> {
        self.grid.same_as(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max))
    }

    /// Element `(i, j)` across the grid.
    pub fn element(&self, i: usize, j: usize) -> Vec<Complex64> {
        self.values.iter().map(|m| m[(i, j)]).collect()
    }
}

/// A pole at `energy` on the real axis with residue matrix `residue`:
/// contributes `residue / (iω − energy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub energy: f64,
    pub residue: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleExpansion {
    pub n_orbitals: usize,
    pub poles: Vec<Pole>,
}

impl PoleExpansion {
    /// Poles of the Lehmann sum: EA poles sit at `E⁺_μ − E₀`, IP poles at
    /// `E₀ − E⁻_μ`.
    pub fn from_subspaces(
        e0: f64,
        ea: &SubspaceResult,
        ip: &SubspaceResult,
    ) -> Result<Self, GreensError> {
        if ea.sector != Sector::Ea {
            return Err(GreensError::SectorMismatch {
                expected: "EA",
                got: ea.sector.name(),
            });
        }
        if ip.sector != Sector::Ip {
            return Err(GreensError::SectorMismatch {
                expected: "IP",
                got: ip.sector.name(),
            });
        }
        let n = ea.amplitudes.ncols();
        let mut poles = Vec::with_capacity(ea.rank() + ip.rank());
        for (mu, &e) in ea.energies.iter().enumerate() {
            let x = ea.amplitudes.row(mu);
            // R_ij = X*_μi X_μj
            let residue = CMatrix::from_fn(n, n, |i, j| x[i].conj() * x[j]);
            poles.push(Pole {
                energy: e - e0,
                residue,
            });
        }
        for (mu, &e) in ip.energies.iter().enumerate() {
            let x = ip.amplitudes.row(mu);
            // R_ij = X*_μj X_μi
            let residue = CMatrix::from_fn(n, n, |i, j| x[j].conj() * x[i]);
            poles.push(Pole {
                energy: e0 - e,
                residue,
            });
        }
        Ok(Self {
            n_orbitals: n,
            poles,
        })
    }

    /// `Σ_k R_k`, the coefficient of the `1/(iω)` tail.
    pub fn total_weight(&self) -> CMatrix {
        self.poles
            .iter()
            .fold(CMatrix::zeros(self.n_orbitals, self.n_orbitals), |acc, p| acc + &p.residue)
    }

    /// `Σ_k ε_k R_k`, the coefficient of the `1/(iω)²` tail.
    pub fn first_moment(&self) -> CMatrix {
        self.poles.iter().fold(
            CMatrix::zeros(self.n_orbitals, self.n_orbitals),
            |acc, p| acc + p.residue.scale(p.energy),
        )
    }

    /// Largest `|ε_k|`.
    pub fn spectral_radius(&self) -> f64 {
        self.poles.iter().map(|p| p.energy.abs()).fold(0.0, f64::max)
    }

    pub fn evaluate(&self, grid: &MatsubaraGrid) -> Result<GreensFunction, GreensError> {
        let n = self.n_orbitals;
        let values = par::try_map_range(grid.len(), |k| {
            let z = Complex64::new(0.0, grid.omegas[k]);
            let mut g = CMatrix::zeros(n, n);
            for p in &self.poles {
                let denom = z - p.energy;
                if denom.norm() == 0.0 {
                    return Err(GreensError::PoleOnAxis(k));
                }
                g += p.residue.map(|r| r / denom);
            }
            Ok(g)
        })?;
        Ok(GreensFunction {
            grid: grid.clone(),
            values,
            errors: None,
        })
    }
}

/// Lehmann Green's function from the two subspace solutions.
pub fn lehmann_greens(
    e0: f64,
    ea: &SubspaceResult,
    ip: &SubspaceResult,
    grid: &MatsubaraGrid,
) -> Result<GreensFunction, GreensError> {
    PoleExpansion::from_subspaces(e0, ea, ip)?.evaluate(grid)
}

/// Everything the subspace route produces for one reference state.
#[derive(Debug, Clone)]
pub struct QseGreens {
    pub e0: f64,
    pub ea: SubspaceResult,
    pub ip: SubspaceResult,
    pub poles: PoleExpansion,
    pub greens: GreensFunction,
}

impl QseGreens {
    /// `max |Σ_μ X⁺†X⁺ + Σ_μ X⁻†X⁻ − I|`.
    pub fn sum_rule_residual(&self) -> f64 {
        let n = self.poles.n_orbitals;
        max_abs(&(self.poles.total_weight() - CMatrix::identity(n, n)))
    }

    pub fn electron_count(&self) -> f64 {
        electron_count(&self.ip.s_sub)
    }
}

/// Exact (statevector) subspace expansion around `psi` and its Lehmann sum.
pub fn qse_greens(
    psi: &Statevector,
    h: &PauliSum,
    grid: &MatsubaraGrid,
    truncation: Truncation,
) -> Result<QseGreens> {
    let e0 = psi.expectation(h)?.re;
    let ea = solve_sector(&build_subspace_matrices(psi, h, Sector::Ea)?, truncation)?;
    let ip = solve_sector(&build_subspace_matrices(psi, h, Sector::Ip)?, truncation)?;
    let poles = PoleExpansion::from_subspaces(e0, &ea, &ip)?;
    let greens = poles.evaluate(grid)?;
    Ok(QseGreens {
        e0,
        ea,
        ip,
        poles,
        greens,
    })
}

/// The mean-field reference: the same pipeline run on the θ = 0 state.
pub fn hf_reference_greens(
    h: &PauliSum,
    circuit: &QccCircuit,
    grid: &MatsubaraGrid,
    truncation: Truncation,
) -> Result<QseGreens> {
    let psi = circuit.prepare_state(&vec![0.0; circuit.n_params()])?;
    qse_greens(&psi, h, grid, truncation)
}

/// `Σ(iω_n) = G₀(iω_n)⁻¹ − G(iω_n)⁻¹`.
pub fn self_energy(g0: &GreensFunction, g: &GreensFunction) -> Result<SelfEnergy, GreensError> {
    g0.grid.same_as(&g.grid)?;
    let values = par::try_map_range(g.grid.len(), |k| {
        let inv0 = invert(&g0.values[k], k)?;
        let inv = invert(&g.values[k], k)?;
        Ok(inv0 - inv)
    })?;
    Ok(GreensFunction {
        grid: g.grid.clone(),
        values,
        errors: None,
    })
}

fn invert(a: &CMatrix, k: usize) -> Result<CMatrix, GreensError> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(GreensError::Singular(k))?;
    if inv.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(GreensError::Singular(k));
    }
    let cond = condition_1(a, &inv);
    if cond > CONDITION_WARN {
        log::warn!("ill-conditioned Green's function at frequency index {k}: κ₁ ≈ {cond:e}");
    }
    Ok(inv)
}

/// `N = Tr S⁻`, since `S⁻_ii = ⟨c†_i c_i⟩`.
pub fn electron_count(ip_s_sub: &CMatrix) -> f64 {
    ip_s_sub.trace().re
}

/// Cross-check of the electron count from the frequency sum
/// `n_i = ½ + (2/β) Σ_{n≥0} Re G_ii(iω_n)`, with the truncated tail
/// approximated by its leading `−m/ω²` decay fitted at the last point.
/// Only meaningful when every pole satisfies `β|ε| ≫ 1`.
pub fn electron_count_from_frequency_sum(g: &GreensFunction) -> f64 {
    let grid = &g.grid;
    let beta = grid.beta;
    let n_pts = grid.len();
    let last = n_pts - 1;
    let w_last = grid.omegas[last];
    // Σ_{n ≥ N} 1/ω_n² = (β/2π)² ψ₁(N + ½)
    let x = grid.indices[last] as f64 + 1.5;
    let trigamma = 1.0 / x + 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x.powi(3)) - 1.0 / (30.0 * x.powi(5));
    let tail_sum = (beta / (2.0 * PI)).powi(2) * trigamma;
    (0..g.n_orbitals())
        .map(|i| {
            let partial: f64 = g.values.iter().map(|m| m[(i, i)].re).sum();
            let m = -g.values[last][(i, i)].re * w_last * w_last;
            0.5 + 2.0 / beta * (partial - m * tail_sum)
        })
        .sum()
}

pub const CSV_HEADER: &str = "n,omega,i,j,re_g,im_g,re_err,im_err";

/// Serialize as CSV, one row per (frequency, i, j); error columns are left
/// blank when no error bars are attached.
pub fn write_csv(g: &GreensFunction, mut out: impl Write) -> std::io::Result<()> {
    let mut buf = String::with_capacity(64 * g.values.len() * g.n_orbitals().pow(2));
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for (k, m) in g.values.iter().enumerate() {
        let (n, w) = (g.grid.indices[k], g.grid.omegas[k]);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                let _ = write!(buf, "{n},{w:e},{i},{j},{:e},{:e},", v.re, v.im);
                match &g.errors {
                    Some(errs) => {
                        let e = errs[k][(i, j)];
                        let _ = writeln!(buf, "{:e},{:e}", e.re, e.im);
                    }
                    None => buf.push_str(",\n"),
                }
            }
        }
    }
    out.write_all(buf.as_bytes())
}

/// Parse the CSV written by [`write_csv`].
pub fn read_csv(text: &str) -> Result<GreensFunction, GreensError> {
    let csv_err = |line: usize, msg: &str| GreensError::Csv {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(csv_err(1, "missing header")),
    }
    struct Row {
        n: i64,
        omega: f64,
        i: usize,
        j: usize,
        g: Complex64,
        err: Option<Complex64>,
    }
    let mut rows = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(csv_err(ln + 1, "expected 8 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| csv_err(ln + 1, "bad number"));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| csv_err(ln + 1, "bad index"));
        let err = if f[6].is_empty() && f[7].is_empty() {
            None
        } else {
            Some(Complex64::new(num(f[6])?, num(f[7])?))
        };
        rows.push(Row {
            n: f[0].parse().map_err(|_| csv_err(ln + 1, "bad frequency index"))?,
            omega: num(f[1])?,
            i: idx(f[2])?,
            j: idx(f[3])?,
            g: Complex64::new(num(f[4])?, num(f[5])?),
            err,
        });
    }
    let first = rows.first().ok_or(GreensError::EmptyGrid)?;
    let beta = (2 * first.n + 1) as f64 * PI / first.omega;
    let mut indices: Vec<i64> = Vec::new();
    for r in &rows {
        if indices.last() != Some(&r.n) {
            indices.push(r.n);
        }
    }
    let n_freq = indices.len();
    let per = rows.len() / n_freq;
    let n = (per as f64).sqrt().round() as usize;
    if n * n * n_freq != rows.len() {
        return Err(csv_err(0, "rows do not form square matrices on every frequency"));
    }
    let grid = MatsubaraGrid::from_indices(beta, indices)?;
    let has_err = rows.iter().any(|r| r.err.is_some());
    let mut values = vec![CMatrix::zeros(n, n); n_freq];
    let mut errors = vec![CMatrix::zeros(n, n); n_freq];
    for (k, r) in rows.iter().enumerate() {
        let f = k / per;
        if r.n != grid.indices[f] || r.i >= n || r.j >= n {
            return Err(csv_err(k + 2, "rows out of order"));
        }
        if (r.omega - grid.omegas[f]).abs() > 1e-9 * grid.omegas[f].abs() {
            return Err(csv_err(k + 2, "frequency inconsistent with β"));
        }
        values[f][(r.i, r.j)] = r.g;
        errors[f][(r.i, r.j)] = r.err.unwrap_or_default();
    }
    Ok(GreensFunction {
        grid,
        values,
        errors: has_err.then_some(errors),
    })
}
