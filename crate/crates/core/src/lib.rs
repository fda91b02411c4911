//! Matsubara Green's functions of small molecules from a VQE-prepared ground
//! state and quantum subspace expansion in the N±1 sectors, simulated on a
//! dense statevector.
//!
//! The pipeline runs integrals → Jordan-Wigner qubit Hamiltonian → QCC state
//! → VQE → subspace matrices → Lehmann sum. Subspace matrices can be
//! evaluated exactly or from emulated shots, with jackknife error bars.
//! [`oracle`] provides the exact-diagonalization reference.

pub mod ansatz;
pub mod error;
pub mod greens;
pub mod integrals;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod pauli;
pub mod pipeline;
pub mod qse;
pub mod simulator;
pub mod stats;
pub mod vqe;

pub use error::{Error, Result};
