//! Dense statevector engine.
//!
//! Basis label `b` has qubit `q` set iff bit `q` of `b` is 1; qubit 0 is the
//! least-significant bit and stores the occupation of spin-orbital 0.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::SimulatorError;
use crate::pauli::{PauliString, PauliSum};

const ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Computational basis state with amplitude 1 on `occupation`.
    pub fn basis(occupation: u64, n_qubits: usize) -> Result<Self, SimulatorError> {
        if n_qubits >= 64 || occupation >> n_qubits != 0 {
            return Err(SimulatorError::BasisOutOfRange(occupation, n_qubits));
        }
        let mut amps = vec![Complex64::default(); 1 << n_qubits];
        amps[occupation as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), 1 << n_qubits, "amplitude count must be 2^n");
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, b: u64) -> Complex64 {
        self.amps[b as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn check(&self, n: usize) -> Result<(), SimulatorError> {
        if n != self.n_qubits {
            return Err(SimulatorError::DimensionMismatch {
                state: self.n_qubits,
                op: n,
            });
        }
        Ok(())
    }

    /// `P|s⟩`.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<Self, SimulatorError> {
        self.check(p.n_qubits())?;
        let mut out = vec![Complex64::default(); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let (phase, b2) = p.apply_to_basis(b as u64);
            out[b2 as usize] = phase * a;
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// `O|s⟩` for a general (not necessarily unitary) Pauli sum.
    pub fn apply_sum(&self, o: &PauliSum) -> Result<Self, SimulatorError> {
        self.check(o.n_qubits())?;
        let mut out = vec![Complex64::default(); self.amps.len()];
        for (p, c) in o.iter() {
            for (b, a) in self.amps.iter().enumerate() {
                let (phase, b2) = p.apply_to_basis(b as u64);
                out[b2 as usize] += c * phase * a;
            }
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// `s ← exp(−iθ/2·P)·s = cos(θ/2)·s − i·sin(θ/2)·P·s`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) -> Result<(), SimulatorError> {
        self.check(p.n_qubits())?;
        let (sin, cos) = (0.5 * theta).sin_cos();
        let k = Complex64::new(0.0, -sin);
        let x = p.x_mask();
        let old = &self.amps;
        let mut out = vec![Complex64::default(); old.len()];
        for (b, a) in old.iter().enumerate() {
            let (phase, b2) = p.apply_to_basis(b as u64);
            out[b2 as usize] += k * phase * a;
            out[b] += cos * a;
        }
        debug_assert!(x >> self.n_qubits == 0);
        self.amps = out;
        Ok(())
    }

    /// `s ← exp(φ(c†_p c_q − c†_q c_p))·s` on the Jordan-Wigner register.
    ///
    /// In the one-particle picture this maps `c†_p → cos φ·c†_p − sin φ·c†_q`
    /// and `c†_q → sin φ·c†_p + cos φ·c†_q`.
    pub fn apply_givens(&mut self, p: usize, q: usize, phi: f64) -> Result<(), SimulatorError> {
        if p == q {
            return Err(SimulatorError::SameMode(p));
        }
        let n = self.n_qubits;
        if p >= n || q >= n {
            return Err(SimulatorError::DimensionMismatch {
                state: n,
                op: p.max(q) + 1,
            });
        }
        let (sin, cos) = phi.sin_cos();
        let (lo, hi) = (p.min(q), p.max(q));
        let between = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
        let (bp, bq) = (1u64 << p, 1u64 << q);
        for b in 0..self.amps.len() as u64 {
            // visit each pair once, from the member with q occupied and p empty
            if b & bp != 0 || b & bq == 0 {
                continue;
            }
            let b2 = b ^ bp ^ bq;
            let eta = if (b & between).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let aq = self.amps[b as usize];
            let ap = self.amps[b2 as usize];
            self.amps[b as usize] = cos * aq - eta * sin * ap;
            self.amps[b2 as usize] = cos * ap + eta * sin * aq;
        }
        Ok(())
    }

    /// Multiply every amplitude with mode `p` occupied by −1, i.e. `exp(iπ n_p)`.
    pub fn apply_parity_flip(&mut self, p: usize) {
        let bit = 1u64 << p;
        for (b, a) in self.amps.iter_mut().enumerate() {
            if b as u64 & bit != 0 {
                *a = -*a;
            }
        }
    }

    /// Apply the fermionic image of a real orthogonal one-particle rotation:
    /// afterwards every creation operator has been conjugated as
    /// `c†_j → Σ_p u_pj c†_p`.
    pub fn apply_orbital_rotation(&mut self, u: &DMatrix<f64>) -> Result<(), SimulatorError> {
        let n = self.n_qubits;
        if u.nrows() != n || u.ncols() != n {
            return Err(SimulatorError::DimensionMismatch {
                state: n,
                op: u.nrows(),
            });
        }
        let (rotations, signs) = givens_decomposition(u)?;
        for (p, s) in signs.iter().enumerate() {
            if *s < 0.0 {
                self.apply_parity_flip(p);
            }
        }
        for &(p, q, phi) in rotations.iter().rev() {
            self.apply_givens(p, q, phi)?;
        }
        Ok(())
    }

    /// Exact `⟨s|P|s⟩`.
    pub fn expectation_string(&self, p: &PauliString) -> Result<Complex64, SimulatorError> {
        self.check(p.n_qubits())?;
        Ok(self.expectation_string_unchecked(p))
    }

    #[inline]
    fn expectation_string_unchecked(&self, p: &PauliString) -> Complex64 {
        let mut acc = Complex64::default();
        for (b, a) in self.amps.iter().enumerate() {
            let (phase, b2) = p.apply_to_basis(b as u64);
            acc += self.amps[b2 as usize].conj() * phase * a;
        }
        acc
    }

    /// Exact `⟨s|O|s⟩`.
    pub fn expectation(&self, o: &PauliSum) -> Result<Complex64, SimulatorError> {
        self.check(o.n_qubits())?;
        Ok(o
            .iter()
            .map(|(p, c)| c * self.expectation_string_unchecked(p))
            .sum())
    }

    /// Probability of each basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Decompose a real orthogonal matrix as `u = R_1 ⋯ R_k · D` with adjacent
/// Givens factors `R(p, p+1, φ)` and a diagonal `D` of ±1.
///
/// `R(p, q, φ)` is the identity except `R_pp = R_qq = cos φ`,
/// `R_pq = sin φ`, `R_qp = −sin φ`; it is the one-particle matrix of
/// [`Statevector::apply_givens`]. Zero-angle factors are omitted.
pub fn givens_decomposition(
    u: &DMatrix<f64>,
) -> Result<(Vec<(usize, usize, f64)>, Vec<f64>), SimulatorError> {
    let n = u.nrows();
    let dev = (u.transpose() * u - DMatrix::identity(n, n)).amax();
    if u.ncols() != n || dev > ORTHOGONALITY_TOL {
        return Err(SimulatorError::NotOrthogonal(dev));
    }
    let mut w = u.clone();
    let mut rotations = Vec::new();
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let (p, q) = (i - 1, i);
            let (a, b) = (w[(p, j)], w[(q, j)]);
            if b == 0.0 {
                continue;
            }
            let phi = (-b).atan2(a);
            let (s, c) = phi.sin_cos();
            // w ← Rᵀ·w on rows p, q
            for k in 0..n {
                let (wp, wq) = (w[(p, k)], w[(q, k)]);
                w[(p, k)] = c * wp - s * wq;
                w[(q, k)] = s * wp + c * wq;
            }
            rotations.push((p, q, phi));
        }
    }
    let signs = (0..n).map(|k| w[(k, k)].signum()).collect();
    Ok((rotations, signs))
}

/// Seed material for one stream of shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotKey {
    pub seed: u64,
    pub term: u64,
}

impl ShotKey {
    fn rng(&self, bin: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.term.to_le_bytes());
        key[16..24].copy_from_slice(&bin.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

/// Sampled estimate of one Pauli expectation value.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotEstimate {
    pub term: PauliString,
    pub mean: f64,
    pub shots: u64,
    pub bin_means: Vec<f64>,
    pub bin_sizes: Vec<u64>,
}

/// Split `shots` into `bins` nearly equal parts; the first `shots % bins`
/// bins take one extra shot.
pub fn bin_sizes(shots: u64, bins: usize) -> Vec<u64> {
    let base = shots / bins as u64;
    let extra = (shots % bins as u64) as usize;
    (0..bins).map(|k| base + u64::from(k < extra)).collect()
}

/// Draw `shots` ±1 outcomes of measuring `p` on `s` and record per-bin means.
///
/// Each bin owns an independent generator keyed by `(seed, term, bin)`, so the
/// result does not depend on the order in which terms or bins are evaluated.
pub fn sample_expectation(
    s: &Statevector,
    p: &PauliString,
    shots: u64,
    bins: usize,
    key: ShotKey,
) -> Result<ShotEstimate, SimulatorError> {
    if shots == 0 || bins == 0 || shots < bins as u64 {
        return Err(SimulatorError::BadShots { shots, bins });
    }
    if p.is_identity() {
        return Err(SimulatorError::IdentitySampling);
    }
    let exact = s.expectation_string(p)?.re.clamp(-1.0, 1.0);
    let p_plus = 0.5 * (1.0 + exact);
    let sizes = bin_sizes(shots, bins);
    let mut bin_means = Vec::with_capacity(bins);
    let mut total = 0.0;
    for (k, &n) in sizes.iter().enumerate() {
        let mut rng = key.rng(k as u64);
        let plus = Binomial::new(n, p_plus)
            .expect("probability clamped to [0, 1]")
            .sample(&mut rng);
        let m = (2.0 * plus as f64 - n as f64) / n as f64;
        total += m * n as f64;
        bin_means.push(m);
    }
    Ok(ShotEstimate {
        term: *p,
        mean: total / shots as f64,
        shots,
        bin_means,
        bin_sizes: sizes,
    })
}
