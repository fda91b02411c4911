use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integrals: {0}")]
    Integrals(#[from] IntegralsError),
    #[error("pauli: {0}")]
    Pauli(#[from] PauliError),
    #[error("simulator: {0}")]
    Simulator(#[from] SimulatorError),
    #[error("ansatz: {0}")]
    Ansatz(#[from] AnsatzError),
    #[error("qse: {0}")]
    Qse(#[from] QseError),
    #[error("greens: {0}")]
    Greens(#[from] GreensError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("regression: {0}")]
    Regression(String),
    #[error("config: {0}")]
    Config(String),
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than by
    /// a numerical failure inside the pipeline.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Io { .. } | Error::Integrals(IntegralsError::Parse { .. })
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IntegralsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("index {index} out of range 1..={norb} on line {line}")]
    IndexOutOfRange { line: usize, index: usize, norb: usize },
    #[error("conflicting duplicate entry on line {line}: {old} vs {new}")]
    Conflict { line: usize, old: f64, new: f64 },
    #[error("invalid integrals: {0}")]
    Invalid(String),
    #[error("rotation matrix: {0}")]
    Rotation(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("spin-orbital index {index} out of range for {n} modes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("unsupported register size {0} (max 64)")]
    TooManyQubits(usize),
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SimulatorError {
    #[error("dimension mismatch: state has {state} qubits, operator has {op}")]
    DimensionMismatch { state: usize, op: usize },
    #[error("basis index {0} does not fit in {1} qubits")]
    BasisOutOfRange(u64, usize),
    #[error("givens rotation needs two distinct modes, got {0} twice")]
    SameMode(usize),
    #[error("matrix is not orthogonal (max |UᵀU - I| = {0:e})")]
    NotOrthogonal(f64),
    #[error("shots must be positive and at least the number of bins ({bins}), got {shots}")]
    BadShots { shots: u64, bins: usize },
    #[error("identity string has expectation exactly 1; refusing to sample it")]
    IdentitySampling,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnsatzError {
    #[error("cannot place {n_electrons} electrons with MS2={ms2} in {n_so} spin-orbitals")]
    InfeasibleOccupation { n_electrons: usize, ms2: i32, n_so: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum QseError {
    #[error("all overlap eigenvalues fall below the threshold {0:e}")]
    EmptySubspace(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GreensError {
    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("grid needs at least one frequency")]
    EmptyGrid,
    #[error("singular matrix at frequency index {0}")]
    Singular(usize),
    #[error("pole coincides with frequency index {0}")]
    PoleOnAxis(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("sector mismatch: expected {expected}, got {got}")]
    SectorMismatch { expected: &'static str, got: &'static str },
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("dense matrices limited to {max} qubits, requested {n}")]
    TooLarge { n: usize, max: usize },
    #[error("hamiltonian does not conserve particle number (max leak {0:e})")]
    NotNumberConserving(f64),
    #[error("particle-number sector {0} is empty")]
    EmptySector(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("{len} samples cannot be split into {bins} equal bins")]
    Indivisible { len: usize, bins: usize },
    #[error("jackknife needs at least two bins, got {0}")]
    TooFewBins(usize),
    #[error("pipeline failed on jackknife subsample {index}: {msg}")]
    Subsample { index: usize, msg: String },
}
