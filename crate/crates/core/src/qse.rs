//! Quantum subspace expansion in the N±1 particle sectors.
//!
//! Electron attachment uses the vectors `c†_i|Ψ⟩`, ionisation `c_i|Ψ⟩`:
//!
//! * EA: `H_ij = ⟨Ψ|c_i H c†_j|Ψ⟩`, `S_ij = ⟨Ψ|c_i c†_j|Ψ⟩`
//! * IP: `H_ij = ⟨Ψ|c†_i H c_j|Ψ⟩`, `S_ij = ⟨Ψ|c†_i c_j|Ψ⟩`
//!
//! The generalized problem `H V = S V E` is solved by canonical
//! orthogonalization, and transition amplitudes follow as `X = V†·S`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QseError, Result};
use crate::linalg::{hermitian_eigen, hermitize, CMatrix};
use crate::par;
use crate::pauli::{jw_annihilation, jw_creation, PauliString, PauliSum};
use crate::simulator::{sample_expectation, ShotEstimate, ShotKey, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    /// N+1 electrons
    Ea,
    /// N−1 electrons
    Ip,
}

impl Sector {
    pub fn name(self) -> &'static str {
        match self {
            Sector::Ea => "EA",
            Sector::Ip => "IP",
        }
    }
}

/// Measured (or exact) subspace matrices of one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceMatrices {
    pub sector: Sector,
    pub h: CMatrix,
    pub s: CMatrix,
}

/// The operators whose expectation values fill `H` and `S` for one sector.
#[derive(Debug, Clone)]
pub struct SubspaceOperators {
    pub sector: Sector,
    pub n_so: usize,
    /// Row-major `n_so × n_so` grids.
    pub h_ops: Vec<PauliSum>,
    pub s_ops: Vec<PauliSum>,
}

impl SubspaceOperators {
    pub fn new(h: &PauliSum, sector: Sector) -> Result<Self> {
        let n = h.n_qubits();
        let cre: Vec<PauliSum> = (0..n).map(|p| jw_creation(p, n)).collect::<Result<_, _>>()?;
        let ann: Vec<PauliSum> = (0..n).map(|p| jw_annihilation(p, n)).collect::<Result<_, _>>()?;
        let (left, right) = match sector {
            Sector::Ea => (&ann, &cre),
            Sector::Ip => (&cre, &ann),
        };
        let pairs = par::try_map_range(n * n, |k| -> Result<(PauliSum, PauliSum)> {
            let (i, j) = (k / n, k % n);
            let li_h = left[i].mul(h)?;
            Ok((li_h.mul(&right[j])?, left[i].mul(&right[j])?))
        })?;
        let (h_ops, s_ops) = pairs.into_iter().unzip();
        Ok(Self {
            sector,
            n_so: n,
            h_ops,
            s_ops,
        })
    }

    /// Evaluate every matrix element with `value`.
    fn fill(&self, value: impl Fn(&PauliSum) -> Complex64 + Sync + Send) -> SubspaceMatrices {
        let n = self.n_so;
        let vals = par::map_range(2 * n * n, |k| {
            if k < n * n {
                value(&self.h_ops[k])
            } else {
                value(&self.s_ops[k - n * n])
            }
        });
        SubspaceMatrices {
            sector: self.sector,
            h: CMatrix::from_row_slice(n, n, &vals[..n * n]),
            s: CMatrix::from_row_slice(n, n, &vals[n * n..]),
        }
    }

    /// Exact expectation values on a statevector.
    pub fn exact(&self, psi: &Statevector) -> Result<SubspaceMatrices> {
        if psi.n_qubits() != self.n_so {
            return Err(crate::error::SimulatorError::DimensionMismatch {
                state: psi.n_qubits(),
                op: self.n_so,
            }
            .into());
        }
        Ok(self.fill(|o| psi.expectation(o).expect("dimension checked")))
    }

    pub fn all_operators(&self) -> impl Iterator<Item = &PauliSum> {
        self.h_ops.iter().chain(&self.s_ops)
    }
}

/// `(H_sub, S_sub)` for `sector`, evaluated exactly on `psi`.
pub fn build_subspace_matrices(
    psi: &Statevector,
    h: &PauliSum,
    sector: Sector,
) -> Result<SubspaceMatrices> {
    SubspaceOperators::new(h, sector)?.exact(psi)
}

/// Shot budget for sampled expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotSettings {
    /// Shots per Pauli string.
    pub shots: u64,
    pub bins: usize,
    pub seed: u64,
}

/// Sampled estimates of every distinct Pauli string in a set of observables,
/// each measured once with the same shot budget.
#[derive(Debug, Clone)]
pub struct MeasurementTable {
    index: BTreeMap<PauliString, usize>,
    estimates: Vec<ShotEstimate>,
    bins: usize,
}

impl MeasurementTable {
    /// Measure every non-identity string appearing in `observables`. String
    /// `k` in canonical order is sampled with the stream key `(seed, k)`.
    pub fn measure<'a>(
        psi: &Statevector,
        observables: impl IntoIterator<Item = &'a PauliSum>,
        settings: ShotSettings,
    ) -> Result<Self> {
        let mut strings = BTreeMap::new();
        for o in observables {
            for (p, _) in o.iter() {
                if !p.is_identity() {
                    strings.insert(*p, ());
                }
            }
        }
        let list: Vec<PauliString> = strings.into_keys().collect();
        let estimates = par::try_map_range(list.len(), |k| {
            sample_expectation(
                psi,
                &list[k],
                settings.shots,
                settings.bins,
                ShotKey {
                    seed: settings.seed,
                    term: k as u64,
                },
            )
        })?;
        let index = list.into_iter().enumerate().map(|(k, p)| (p, k)).collect();
        Ok(Self {
            index,
            estimates,
            bins: settings.bins,
        })
    }

    pub fn n_strings(&self) -> usize {
        self.estimates.len()
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn estimate(&self, p: &PauliString) -> Option<&ShotEstimate> {
        self.index.get(p).map(|&k| &self.estimates[k])
    }

    fn string_value(&self, p: &PauliString, bin: Option<usize>) -> f64 {
        if p.is_identity() {
            return 1.0;
        }
        let est = &self.estimates[self.index[p]];
        match bin {
            Some(b) => est.bin_means[b],
            None => est.mean,
        }
    }

    /// Estimate of `⟨O⟩` as `⟨A⟩ + i⟨B⟩` with `O = A + iB` split into
    /// Hermitian parts; `bin = None` uses all shots.
    pub fn value(&self, o: &PauliSum, bin: Option<usize>) -> Complex64 {
        let (a, b) = o.hermitian_split();
        let real = |s: &PauliSum| -> f64 {
            s.iter()
                .map(|(p, c)| c.re * self.string_value(p, bin))
                .sum()
        };
        Complex64::new(real(&a), real(&b))
    }

    /// Sampled subspace matrices, from a single bin or from all shots.
    pub fn subspace(&self, ops: &SubspaceOperators, bin: Option<usize>) -> SubspaceMatrices {
        ops.fill(|o| self.value(o, bin))
    }
}

/// How to discard near-null overlap directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep overlap eigenvalues `≥ ε`.
    Threshold(f64),
    /// Keep the `r` largest overlap eigenvalues.
    Rank(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedSolution {
    /// Ascending.
    pub energies: Vec<f64>,
    /// `n × r`, columns S-orthonormal.
    pub coeffs: CMatrix,
}

/// Solve `H V = S V E` by canonical orthogonalization.
pub fn solve_generalized(
    h_sub: &CMatrix,
    s_sub: &CMatrix,
    truncation: Truncation,
) -> Result<GeneralizedSolution, QseError> {
    let n = h_sub.nrows();
    if h_sub.shape() != (n, n) || s_sub.shape() != (n, n) {
        return Err(QseError::Shape(format!(
            "H is {:?}, S is {:?}",
            h_sub.shape(),
            s_sub.shape()
        )));
    }
    let h = hermitize(h_sub);
    let (s_vals, s_vecs) = hermitian_eigen(s_sub);
    // indices of retained overlap eigenvalues, largest last
    let kept: Vec<usize> = match truncation {
        Truncation::Threshold(eps) => {
            let negative = s_vals.iter().filter(|&&x| x < -eps).count();
            if negative > 0 {
                log::warn!("discarding {negative} negative overlap eigenvalue(s) below −{eps:e}");
            }
            (0..n).filter(|&k| s_vals[k] >= eps).collect()
        }
        Truncation::Rank(r) => {
            let r = r.min(n);
            let kept: Vec<usize> = (n - r..n).collect();
            if kept.iter().any(|&k| s_vals[k] <= 0.0) {
                return Err(QseError::EmptySubspace(0.0));
            }
            kept
        }
    };
    if kept.is_empty() {
        let eps = match truncation {
            Truncation::Threshold(eps) => eps,
            Truncation::Rank(_) => 0.0,
        };
        return Err(QseError::EmptySubspace(eps));
    }
    let r = kept.len();
    let mut y = CMatrix::zeros(n, r);
    for (col, &k) in kept.iter().enumerate() {
        let scale = 1.0 / s_vals[k].sqrt();
        y.set_column(col, &(s_vecs.column(k) * Complex64::new(scale, 0.0)));
    }
    let reduced = y.adjoint() * &h * &y;
    let (energies, w) = hermitian_eigen(&reduced);
    Ok(GeneralizedSolution {
        energies,
        coeffs: y * w,
    })
}

/// `X_μj = Σ_i V*_iμ S_ij`, i.e. `X = V†·S` (`r × n`).
pub fn transition_amplitudes(coeffs: &CMatrix, s_sub: &CMatrix) -> Result<CMatrix, QseError> {
    if coeffs.nrows() != s_sub.nrows() || s_sub.nrows() != s_sub.ncols() {
        return Err(QseError::Shape(format!(
            "V is {:?}, S is {:?}",
            coeffs.shape(),
            s_sub.shape()
        )));
    }
    Ok(coeffs.adjoint() * s_sub)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceResult {
    pub sector: Sector,
    pub h_sub: CMatrix,
    pub s_sub: CMatrix,
    pub energies: Vec<f64>,
    pub coeffs: CMatrix,
    pub amplitudes: CMatrix,
}

impl SubspaceResult {
    pub fn rank(&self) -> usize {
        self.energies.len()
    }

    /// Residue sum `Σ_μ` of the Lehmann weights this sector contributes to
    /// `G_ij`: `Σ_μ X*_μi X_μj` (EA) or `Σ_μ X*_μj X_μi` (IP).
    pub fn weight_matrix(&self) -> CMatrix {
        let x = &self.amplitudes;
        match self.sector {
            Sector::Ea => x.adjoint() * x,
            Sector::Ip => (x.adjoint() * x).transpose(),
        }
    }
}

/// Full solve of one sector: symmetrize, diagonalize, and form amplitudes.
pub fn solve_sector(m: &SubspaceMatrices, truncation: Truncation) -> Result<SubspaceResult> {
    let h_sub = hermitize(&m.h);
    let s_sub = hermitize(&m.s);
    let sol = solve_generalized(&h_sub, &s_sub, truncation)?;
    let amplitudes = transition_amplitudes(&sol.coeffs, &s_sub)?;
    Ok(SubspaceResult {
        sector: m.sector,
        h_sub,
        s_sub,
        energies: sol.energies,
        coeffs: sol.coeffs,
        amplitudes,
    })
}

/// Number of overlap eigenvalues `≥ eps`.
pub fn overlap_rank(s_sub: &CMatrix, eps: f64) -> usize {
    hermitian_eigen(s_sub).0.iter().filter(|&&x| x >= eps).count()
}

/// Convert a real matrix for use with the complex routines.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
