//! Exact diagonalization reference.
//!
//! Dense matrices in the occupation basis, full eigendecomposition of the
//! N and N±1 sectors, and the exact Lehmann Green's function. Transition
//! elements are built from fermionic bit operations directly, without going
//! through the Pauli algebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::OracleError;
use crate::greens::{GreensFunction, MatsubaraGrid};
use crate::integrals::SpinOrbitalHamiltonian;
use crate::linalg::CMatrix;
use crate::par;
use crate::pauli::PauliSum;

pub const MAX_QUBITS: usize = 12;
const COMMUTATION_TOL: f64 = 1e-10;
const DEGENERACY_TOL: f64 = 1e-8;

fn guard(n: usize) -> Result<(), OracleError> {
    if n > MAX_QUBITS {
        return Err(OracleError::TooLarge { n, max: MAX_QUBITS });
    }
    Ok(())
}

/// `Σ c·P` as a `2ⁿ × 2ⁿ` matrix, qubit 0 least significant.
pub fn dense_matrix(o: &PauliSum) -> Result<CMatrix, OracleError> {
    let n = o.n_qubits();
    guard(n)?;
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for (p, &c) in o.iter() {
        let (x, z) = (p.x_mask(), p.z_mask());
        let n_y = (x & z).count_ones();
        // P = i^{#Y} X^x Z^z
        let global = Complex64::new(0.0, 1.0).powu(n_y) * c;
        for b in 0..dim as u64 {
            let sign = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[((b ^ x) as usize, b as usize)] += global * sign;
        }
    }
    Ok(m)
}

/// `c†_p|b⟩` as `(sign, b')`, or `None` when mode `p` is already occupied.
pub fn create(p: usize, b: u64) -> Option<(f64, u64)> {
    if b >> p & 1 == 1 {
        return None;
    }
    let below = (b & ((1u64 << p) - 1)).count_ones();
    Some((if below % 2 == 0 { 1.0 } else { -1.0 }, b | 1 << p))
}

/// `c_p|b⟩` as `(sign, b')`, or `None` when mode `p` is empty.
pub fn annihilate(p: usize, b: u64) -> Option<(f64, u64)> {
    if b >> p & 1 == 0 {
        return None;
    }
    let below = (b & ((1u64 << p) - 1)).count_ones();
    Some((if below % 2 == 0 { 1.0 } else { -1.0 }, b & !(1 << p)))
}

/// The second-quantized Hamiltonian assembled directly in the occupation
/// basis, `e_core + Σ h_pq c†_p c_q + ½ Σ v_pqrs c†_p c†_q c_s c_r`.
pub fn fermionic_matrix(soh: &SpinOrbitalHamiltonian) -> Result<DMatrix<f64>, OracleError> {
    let n = soh.n_so;
    guard(n)?;
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim as u64 {
        m[(b as usize, b as usize)] += soh.e_core;
        for p in 0..n {
            for q in 0..n {
                let h = soh.h_so[(p, q)];
                if h == 0.0 {
                    continue;
                }
                let Some((s1, b1)) = annihilate(q, b) else { continue };
                let Some((s2, b2)) = create(p, b1) else { continue };
                m[(b2 as usize, b as usize)] += h * s1 * s2;
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = soh.v(p, q, r, s);
                        if v == 0.0 {
                            continue;
                        }
                        let Some((s1, b1)) = annihilate(r, b) else { continue };
                        let Some((s2, b2)) = annihilate(s, b1) else { continue };
                        let Some((s3, b3)) = create(q, b2) else { continue };
                        let Some((s4, b4)) = create(p, b3) else { continue };
                        m[(b4 as usize, b as usize)] += 0.5 * v * s1 * s2 * s3 * s4;
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Full spectrum of one particle-number sector.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub particle_number: usize,
    /// Occupation bitmasks spanning the sector, ascending.
    pub basis: Vec<u64>,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, in the sector basis.
    pub states: CMatrix,
}

impl SectorSpectrum {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Eigenvector `mu` embedded in the full `2ⁿ` register.
    pub fn full_state(&self, mu: usize, n_qubits: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(1 << n_qubits);
        for (k, &b) in self.basis.iter().enumerate() {
            v[b as usize] = self.states[(k, mu)];
        }
        v
    }
}

/// Largest matrix element connecting different particle numbers.
pub fn number_leak(h_matrix: &CMatrix) -> f64 {
    let dim = h_matrix.nrows();
    let mut leak = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            if a.count_ones() != b.count_ones() {
                leak = leak.max(h_matrix[(a, b)].norm());
            }
        }
    }
    leak
}

/// Diagonalize `h_matrix` restricted to basis states with `particle_number`
/// set bits.
pub fn sector_spectrum(
    h_matrix: &CMatrix,
    particle_number: usize,
) -> Result<SectorSpectrum, OracleError> {
    let dim = h_matrix.nrows();
    let n_qubits = dim.trailing_zeros() as usize;
    guard(n_qubits)?;
    let leak = number_leak(h_matrix);
    if leak > COMMUTATION_TOL {
        return Err(OracleError::NotNumberConserving(leak));
    }
    let basis: Vec<u64> = (0..dim as u64)
        .filter(|b| b.count_ones() as usize == particle_number)
        .collect();
    if basis.is_empty() {
        return Err(OracleError::EmptySector(particle_number));
    }
    let block = CMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        h_matrix[(basis[i] as usize, basis[j] as usize)]
    });
    let eig = SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut states = CMatrix::zeros(basis.len(), basis.len());
    for (dst, &src) in order.iter().enumerate() {
        states.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SectorSpectrum {
        particle_number,
        basis,
        energies,
        states,
    })
}

/// One exact Lehmann pole `residue / (iω − energy)`.
#[derive(Debug, Clone)]
pub struct ExactPole {
    pub energy: f64,
    pub residue: CMatrix,
}

/// Exact ground state and the neighbouring sectors.
#[derive(Debug, Clone)]
pub struct FciSolution {
    pub n_qubits: usize,
    pub n_electrons: usize,
    pub ground_energy: f64,
    pub ground_state: DVector<Complex64>,
    pub minus: SectorSpectrum,
    pub neutral: SectorSpectrum,
    pub plus: SectorSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectraReport {
    pub n_electrons: usize,
    pub ground_energy: f64,
    pub minus: Vec<f64>,
    pub neutral: Vec<f64>,
    pub plus: Vec<f64>,
}

impl FciSolution {
    pub fn new(h: &PauliSum, n_electrons: usize) -> Result<Self, OracleError> {
        let n = h.n_qubits();
        if n_electrons == 0 {
            return Err(OracleError::EmptySector(0));
        }
        if n_electrons >= n {
            return Err(OracleError::EmptySector(n_electrons + 1));
        }
        let m = dense_matrix(h)?;
        let sectors = par::map_range(3, |k| sector_spectrum(&m, n_electrons + k - 1));
        let mut it = sectors.into_iter();
        let (minus, neutral, plus) = (it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?);
        if neutral.dim() > 1 && neutral.energies[1] - neutral.energies[0] < DEGENERACY_TOL {
            log::warn!(
                "degenerate {n_electrons}-electron ground state (gap {:e}); using the first eigenvector",
                neutral.energies[1] - neutral.energies[0]
            );
        }
        Ok(Self {
            n_qubits: n,
            n_electrons,
            ground_energy: neutral.energies[0],
            ground_state: neutral.full_state(0, n),
            minus,
            neutral,
            plus,
        })
    }

    /// `⟨Φ_μ|c†_j|Ψ₀⟩` for every `μ` of the N+1 sector (rows) and `j` (columns).
    pub fn attachment_amplitudes(&self) -> CMatrix {
        self.amplitudes(&self.plus, create)
    }

    /// `⟨Φ_μ|c_i|Ψ₀⟩` for every `μ` of the N−1 sector (rows) and `i` (columns).
    pub fn removal_amplitudes(&self) -> CMatrix {
        self.amplitudes(&self.minus, annihilate)
    }

    fn amplitudes(&self, target: &SectorSpectrum, op: fn(usize, u64) -> Option<(f64, u64)>) -> CMatrix {
        let n = self.n_qubits;
        let mut position = vec![usize::MAX; 1 << n];
        for (k, &b) in target.basis.iter().enumerate() {
            position[b as usize] = k;
        }
        // (c|Ψ₀⟩) in the target sector basis, one column per mode
        let mut applied = CMatrix::zeros(target.dim(), n);
        for &b in &self.neutral.basis {
            let psi = self.ground_state[b as usize];
            if psi == Complex64::default() {
                continue;
            }
            for j in 0..n {
                if let Some((sign, b2)) = op(j, b) {
                    applied[(position[b2 as usize], j)] += psi * sign;
                }
            }
        }
        target.states.adjoint() * applied
    }

    pub fn poles(&self) -> Vec<ExactPole> {
        let n = self.n_qubits;
        let e0 = self.ground_energy;
        let mut poles = Vec::with_capacity(self.plus.dim() + self.minus.dim());
        let xp = self.attachment_amplitudes();
        for (mu, &e) in self.plus.energies.iter().enumerate() {
            poles.push(ExactPole {
                energy: e - e0,
                residue: CMatrix::from_fn(n, n, |i, j| xp[(mu, i)].conj() * xp[(mu, j)]),
            });
        }
        let xm = self.removal_amplitudes();
        for (mu, &e) in self.minus.energies.iter().enumerate() {
            poles.push(ExactPole {
                energy: e0 - e,
                residue: CMatrix::from_fn(n, n, |i, j| xm[(mu, j)].conj() * xm[(mu, i)]),
            });
        }
        poles
    }

    pub fn greens(&self, grid: &MatsubaraGrid) -> GreensFunction {
        let poles = self.poles();
        let n = self.n_qubits;
        let values = par::map_range(grid.len(), |k| {
            let z = Complex64::new(0.0, grid.omegas[k]);
            let mut g = CMatrix::zeros(n, n);
            for p in &poles {
                let inv = (z - p.energy).inv();
                for (gij, rij) in g.iter_mut().zip(p.residue.iter()) {
                    *gij += rij * inv;
                }
            }
            g
        });
        GreensFunction {
            grid: grid.clone(),
            values,
            errors: None,
        }
    }

    pub fn report(&self) -> SpectraReport {
        SpectraReport {
            n_electrons: self.n_electrons,
            ground_energy: self.ground_energy,
            minus: self.minus.energies.clone(),
            neutral: self.neutral.energies.clone(),
            plus: self.plus.energies.clone(),
        }
    }
}

/// Exact Lehmann Green's function of `h` around its `n_electrons` ground state.
pub fn fci_greens(
    h: &PauliSum,
    n_electrons: usize,
    grid: &MatsubaraGrid,
) -> Result<GreensFunction, OracleError> {
    Ok(FciSolution::new(h, n_electrons)?.greens(grid))
}
