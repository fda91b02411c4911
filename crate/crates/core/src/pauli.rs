//! Pauli strings, weighted sums of them, and the Jordan-Wigner map.
//!
//! A string is stored as a pair of bitmasks in the symplectic form
//! `P = i^{#Y} · X^x · Z^z`, qubit 0 being the least-significant bit.
//! Letters are rendered highest qubit first, so `"XXXY"` carries the `Y`
//! on qubit 0.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::PauliError;
use crate::integrals::SpinOrbitalHamiltonian;

/// Coefficients with modulus below this are dropped from a [`PauliSum`].
pub const PRUNE_TOL: f64 = 1e-14;

pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn rank(self) -> u8 {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

#[inline]
fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x: 0, z: 0 }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self, PauliError> {
        if n_qubits > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n_qubits));
        }
        let m = mask(n_qubits);
        if x & !m != 0 || z & !m != 0 {
            return Err(PauliError::IndexOutOfRange {
                index: 63 - (x | z).leading_zeros() as usize,
                n: n_qubits,
            });
        }
        Ok(Self { n_qubits, x, z })
    }

    /// Build from `(qubit, letter)` pairs; unlisted qubits are identity.
    pub fn from_letters(
        n_qubits: usize,
        letters: impl IntoIterator<Item = (usize, Pauli)>,
    ) -> Result<Self, PauliError> {
        let mut s = Self::identity(n_qubits);
        if n_qubits > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n_qubits));
        }
        for (q, p) in letters {
            if q >= n_qubits {
                return Err(PauliError::IndexOutOfRange { index: q, n: n_qubits });
            }
            s.set(q, p);
        }
        Ok(s)
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let bit = 1u64 << q;
        self.x &= !bit;
        self.z &= !bit;
        match p {
            Pauli::I => {}
            Pauli::X => self.x |= bit,
            Pauli::Y => {
                self.x |= bit;
                self.z |= bit
            }
            Pauli::Z => self.z |= bit,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn get(&self, q: usize) -> Pauli {
        match (self.x >> q & 1, self.z >> q & 1) {
            (0, 0) => Pauli::I,
            (1, 0) => Pauli::X,
            (1, 1) => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Action on a computational basis state: `P|b⟩ = phase·|b'⟩`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (Complex64, u64) {
        let sign = (b & self.z).count_ones();
        let k = (self.n_y() + 2 * sign) % 4;
        (I_POW[k as usize], b ^ self.x)
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// `self · other = phase · s`, with `phase ∈ {±1, ±i}`.
    pub fn multiply(&self, other: &Self) -> Result<(Complex64, Self), PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::LengthMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    fn mul_unchecked(&self, other: &Self) -> (Complex64, Self) {
        let r = Self {
            n_qubits: self.n_qubits,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2}
        let k = self.n_y() as i64 + other.n_y() as i64 - r.n_y() as i64
            + 2 * (self.z & other.x).count_ones() as i64;
        (I_POW[k.rem_euclid(4) as usize], r)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_qubits.cmp(&other.n_qubits).then_with(|| {
            for q in (0..self.n_qubits).rev() {
                let o = self.get(q).rank().cmp(&other.get(q).rank());
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.n_qubits).rev() {
            write!(f, "{}", self.get(q).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Parses letters written highest qubit first.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n = s.chars().count();
        let letters = s
            .chars()
            .rev()
            .enumerate()
            .map(|(q, c)| {
                let p = match c {
                    'I' => Pauli::I,
                    'X' => Pauli::X,
                    'Y' => Pauli::Y,
                    'Z' => Pauli::Z,
                    _ => return Err(PauliError::Parse(s.to_string())),
                };
                Ok((q, p))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_letters(n, letters)
    }
}

/// Complex-weighted sum of Pauli strings in canonical form: no duplicate
/// strings, no negligible coefficients, terms in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: impl Into<Complex64>) -> Self {
        Self::from_terms(n_qubits, [(coeff.into(), PauliString::identity(n_qubits))])
            .expect("identity has matching length")
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (Complex64, PauliString)>,
    ) -> Result<Self, PauliError> {
        let mut s = Self::zero(n_qubits);
        for (c, p) in terms {
            if p.n_qubits != n_qubits {
                return Err(PauliError::LengthMismatch(n_qubits, p.n_qubits));
            }
            s.add_term(c, p);
        }
        s.prune();
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    fn add_term(&mut self, c: Complex64, p: PauliString) {
        *self.terms.entry(p).or_default() += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= PRUNE_TOL);
    }

    pub fn add(&self, other: &Self) -> Result<Self, PauliError> {
        self.check_len(other)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(*c, *p);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PauliError> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.terms.insert(*p, c * k);
        }
        out.prune();
        out
    }

    /// Distributive product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self, PauliError> {
        self.check_len(other)?;
        let mut out = Self::zero(self.n_qubits);
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let (phase, s) = pa.mul_unchecked(pb);
                out.add_term(ca * cb * phase, s);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
        }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, PauliError> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self, PauliError> {
        self.mul(other)?.add(&other.mul(self)?)
    }

    /// Largest |Im c| over all terms.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus, 0 for an empty sum.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum of coefficient moduli, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Split into Hermitian parts: `self = a + i·b` with
    /// `a = (o + o†)/2`, `b = (o - o†)/(2i)`. Both have real coefficients.
    pub fn hermitian_split(&self) -> (Self, Self) {
        let mut a = Self::zero(self.n_qubits);
        let mut b = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            a.terms.insert(*p, Complex64::new(c.re, 0.0));
            b.terms.insert(*p, Complex64::new(c.im, 0.0));
        }
        a.prune();
        b.prune();
        (a, b)
    }

    fn check_len(&self, other: &Self) -> Result<(), PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::LengthMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(())
    }
}

fn fmt_coeff(c: &Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

impl fmt::Display for PauliSum {
    /// Renders as `(-0.5i)·XZY + (0.25)·ZZI`; an empty sum prints `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (p, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})·{}", fmt_coeff(c), p)?;
        }
        Ok(())
    }
}

fn jw(p: usize, n_so: usize, creation: bool) -> Result<PauliSum, PauliError> {
    if p >= n_so {
        return Err(PauliError::IndexOutOfRange { index: p, n: n_so });
    }
    if n_so > MAX_QUBITS {
        return Err(PauliError::TooManyQubits(n_so));
    }
    let parity = mask(p);
    let x = PauliString::from_masks(n_so, 1 << p, parity)?;
    let y = PauliString::from_masks(n_so, 1 << p, parity | 1 << p)?;
    let sign = if creation { -0.5 } else { 0.5 };
    PauliSum::from_terms(
        n_so,
        [(Complex64::new(0.5, 0.0), x), (Complex64::new(0.0, sign), y)],
    )
}

/// `c†_p = ½(X_p − iY_p)·Z_{p−1}⋯Z_0`.
pub fn jw_creation(p: usize, n_so: usize) -> Result<PauliSum, PauliError> {
    jw(p, n_so, true)
}

/// `c_p = ½(X_p + iY_p)·Z_{p−1}⋯Z_0`.
pub fn jw_annihilation(p: usize, n_so: usize) -> Result<PauliSum, PauliError> {
    jw(p, n_so, false)
}

/// Total number operator `N̂ = Σ_p c†_p c_p = Σ_p ½(1 − Z_p)`.
pub fn number_operator(n_so: usize) -> PauliSum {
    let mut terms = vec![(Complex64::new(0.5 * n_so as f64, 0.0), PauliString::identity(n_so))];
    for p in 0..n_so {
        terms.push((
            Complex64::new(-0.5, 0.0),
            PauliString::from_masks(n_so, 0, 1 << p).expect("in range"),
        ));
    }
    PauliSum::from_terms(n_so, terms).expect("lengths match")
}

/// Jordan-Wigner image of the spin-orbital Hamiltonian, core energy included.
pub fn map_hamiltonian(soh: &SpinOrbitalHamiltonian) -> Result<PauliSum, PauliError> {
    let n = soh.n_so;
    let cre: Vec<PauliSum> = (0..n).map(|p| jw_creation(p, n)).collect::<Result<_, _>>()?;
    let ann: Vec<PauliSum> = (0..n).map(|p| jw_annihilation(p, n)).collect::<Result<_, _>>()?;

    let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
    let mut push = |s: PauliSum, k: f64| {
        for (p, c) in s.terms {
            *acc.entry(p).or_default() += c * k;
        }
    };
    push(PauliSum::identity(n, soh.e_core), 1.0);
    for p in 0..n {
        for q in 0..n {
            let h = soh.h_so[(p, q)];
            if h != 0.0 {
                push(cre[p].mul(&ann[q])?, h);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let pair = cre[p].mul(&cre[q])?;
            for r in 0..n {
                for s in 0..n {
                    if r == s {
                        continue;
                    }
                    let v = soh.v(p, q, r, s);
                    if v != 0.0 {
                        push(pair.mul(&ann[s])?.mul(&ann[r])?, 0.5 * v);
                    }
                }
            }
        }
    }
    let mut out = PauliSum {
        n_qubits: n,
        terms: acc,
    };
    out.prune();
    Ok(out)
}
