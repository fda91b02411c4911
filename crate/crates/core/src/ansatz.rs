//! Hartree-Fock reference and the qubit coupled-cluster state
//!
//! |ψ(θ)⟩ = e^K · e^{−iθ_m/2·P_m} ⋯ e^{−iθ_1/2·P_1} |HF⟩

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AnsatzError, Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::simulator::Statevector;

/// Which QCC generators to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzMode {
    /// Single-XXXY for two spatial orbitals, full set otherwise.
    #[default]
    Auto,
    /// Every spin-conserving double and single excitation generator.
    Full,
    /// Only the first opposite-spin double excitation generator.
    #[serde(rename = "single-xxxy")]
    SingleXxxy,
}

/// Occupation bitmask of the aufbau determinant in the spin-blocked layout.
pub fn hf_occupation(n_electrons: usize, n_so: usize, ms2: i32) -> Result<u64, AnsatzError> {
    let infeasible = AnsatzError::InfeasibleOccupation {
        n_electrons,
        ms2,
        n_so,
    };
    let n_spatial = n_so / 2;
    let total = n_electrons as i64;
    if n_so % 2 != 0 || n_so >= 64 || (total + ms2 as i64) % 2 != 0 {
        return Err(infeasible);
    }
    let n_alpha = (total + ms2 as i64) / 2;
    let n_beta = (total - ms2 as i64) / 2;
    if n_alpha < 0 || n_beta < 0 || n_alpha as usize > n_spatial || n_beta as usize > n_spatial {
        return Err(infeasible);
    }
    let alpha = (1u64 << n_alpha) - 1;
    let beta = ((1u64 << n_beta) - 1) << n_spatial;
    Ok(alpha | beta)
}

fn excitation(n_so: usize, occupied: &[usize], virtual_: &[usize]) -> PauliString {
    // P_ijab = X_b X_a X_j Y_i and P_ia = X_a Y_i
    let mut letters = vec![(occupied[0], Pauli::Y)];
    letters.extend(occupied[1..].iter().map(|&q| (q, Pauli::X)));
    letters.extend(virtual_.iter().map(|&q| (q, Pauli::X)));
    PauliString::from_letters(n_so, letters).expect("indices below n_so")
}

/// QCC generators on top of `hf`: opposite-spin doubles, then same-spin
/// doubles, then singles; within a class ordered by `(i, j, a, b)`.
pub fn enumerate_generators(hf: u64, n_so: usize) -> Vec<PauliString> {
    let n_spatial = n_so / 2;
    let spin = |p: usize| p / n_spatial.max(1);
    let occ: Vec<usize> = (0..n_so).filter(|&p| hf >> p & 1 == 1).collect();
    let vir: Vec<usize> = (0..n_so).filter(|&p| hf >> p & 1 == 0).collect();

    let mut opposite = Vec::new();
    let mut same = Vec::new();
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    if spin(i) != spin(j) && spin(a) != spin(b) {
                        opposite.push(excitation(n_so, &[i, j], &[a, b]));
                    } else if spin(i) == spin(j) && spin(a) == spin(i) && spin(b) == spin(i) {
                        same.push(excitation(n_so, &[i, j], &[a, b]));
                    }
                }
            }
        }
    }
    let mut singles = Vec::new();
    for &i in &occ {
        for &a in &vir {
            if spin(i) == spin(a) {
                singles.push(excitation(n_so, &[i], &[a]));
            }
        }
    }
    opposite.into_iter().chain(same).chain(singles).collect()
}

/// Extend a spatial rotation to both spin blocks.
pub fn spin_block(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(u);
    out.view_mut((n, n), (n, n)).copy_from(u);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct QccCircuit {
    pub n_so: usize,
    pub n_electrons: usize,
    pub hf_occupation: u64,
    pub generators: Vec<PauliString>,
    /// Spin-orbital (`n_so × n_so`) rotation applied last, if any.
    pub orbital_rotation: Option<DMatrix<f64>>,
}

impl QccCircuit {
    /// `rotation` is the spatial-orbital matrix whose columns expand the
    /// reference orbitals in the target basis.
    pub fn new(
        n_spatial: usize,
        n_electrons: usize,
        ms2: i32,
        mode: AnsatzMode,
        rotation: Option<&DMatrix<f64>>,
    ) -> Result<Self> {
        let n_so = 2 * n_spatial;
        let hf = hf_occupation(n_electrons, n_so, ms2)?;
        let mut generators = enumerate_generators(hf, n_so);
        let single = match mode {
            AnsatzMode::Auto => n_spatial == 2,
            AnsatzMode::Full => false,
            AnsatzMode::SingleXxxy => true,
        };
        if single {
            generators.truncate(1);
        }
        if let Some(u) = rotation {
            if u.nrows() != n_spatial || u.ncols() != n_spatial {
                return Err(Error::Config(format!(
                    "rotation is {}x{}, expected {n_spatial}x{n_spatial}",
                    u.nrows(),
                    u.ncols()
                )));
            }
        }
        Ok(Self {
            n_so,
            n_electrons,
            hf_occupation: hf,
            generators,
            orbital_rotation: rotation.map(spin_block),
        })
    }

    pub fn n_params(&self) -> usize {
        self.generators.len()
    }

    /// Every generator must flip at least one occupied qubit.
    pub fn check_generators(&self) -> bool {
        self.generators
            .iter()
            .all(|g| g.x_mask() & self.hf_occupation != 0)
    }

    pub fn prepare_state(&self, theta: &[f64]) -> Result<Statevector> {
        if theta.len() != self.generators.len() {
            return Err(AnsatzError::ParameterCount {
                expected: self.generators.len(),
                got: theta.len(),
            }
            .into());
        }
        let mut s = Statevector::basis(self.hf_occupation, self.n_so)?;
        for (g, &t) in self.generators.iter().zip(theta) {
            s.apply_pauli_rotation(g, t)?;
        }
        if let Some(u) = &self.orbital_rotation {
            s.apply_orbital_rotation(u)?;
        }
        Ok(s)
    }
}
