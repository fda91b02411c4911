//! FCIDUMP ingestion and the spin-orbital form of the electronic Hamiltonian
//!
//! H = Σ_pq h_pq c†_p c_q + ½ Σ_pqrs v_pqrs c†_p c†_q c_s c_r + e_core
//!
//! Spin-orbitals are spin-blocked: `p = i` is spatial orbital `i` with spin α,
//! `p = n_spatial + i` the same orbital with spin β.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, IntegralsError, Result};

const DUPLICATE_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Spatial-orbital integrals as stored in an FCIDUMP file.
///
/// `eri` is in chemist notation (ij|kl) and always carries all eight
/// permutational images.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    pub e_core: f64,
    pub h: DMatrix<f64>,
    eri: Vec<f64>,
}

#[inline]
fn idx4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// The eight index tuples related to (ij|kl) by real-orbital symmetry.
fn eri_images(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    ]
}

impl MolecularIntegrals {
    pub fn new(n_spatial: usize, n_electrons: usize, ms2: i32) -> Self {
        Self {
            n_spatial,
            n_electrons,
            ms2,
            e_core: 0.0,
            h: DMatrix::zeros(n_spatial, n_spatial),
            eri: vec![0.0; n_spatial.pow(4)],
        }
    }

    /// Chemist-notation two-electron integral (ij|kl), zero-based indices.
    #[inline]
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.eri[idx4(self.n_spatial, i, j, k, l)]
    }

    /// Store (ij|kl) together with all of its symmetric images.
    pub fn set_eri(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let n = self.n_spatial;
        for (a, b, c, d) in eri_images(i, j, k, l) {
            self.eri[idx4(n, a, b, c, d)] = value;
        }
    }

    pub fn set_h(&mut self, i: usize, j: usize, value: f64) {
        self.h[(i, j)] = value;
        self.h[(j, i)] = value;
    }

    pub fn validate(&self) -> Result<(), IntegralsError> {
        let n = self.n_spatial;
        if self.n_electrons > 2 * n {
            return Err(IntegralsError::Invalid(format!(
                "{} electrons do not fit in {} spatial orbitals",
                self.n_electrons, n
            )));
        }
        if (self.h.clone() - self.h.transpose()).amax() > DUPLICATE_TOL {
            return Err(IntegralsError::Invalid("h is not symmetric".into()));
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let x = self.eri(i, j, k, l);
                        for (a, b, c, d) in eri_images(i, j, k, l) {
                            if (self.eri(a, b, c, d) - x).abs() > DUPLICATE_TOL {
                                return Err(IntegralsError::Invalid(
                                    "two-electron integrals lack 8-fold symmetry".into(),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Express the integrals in a new orthonormal orbital basis.
    ///
    /// Column `j` of `u` holds the expansion of current orbital `j` in the
    /// target orbitals, so `h' = u·h·uᵀ` and every index of (ij|kl) is
    /// transformed the same way.
    pub fn transformed(&self, u: &DMatrix<f64>) -> Result<Self, IntegralsError> {
        let n = self.n_spatial;
        if u.nrows() != n || u.ncols() != n {
            return Err(IntegralsError::Rotation(format!(
                "expected {n}x{n}, got {}x{}",
                u.nrows(),
                u.ncols()
            )));
        }
        check_orthogonal(u)?;
        let mut out = self.clone();
        out.h = u * &self.h * u.transpose();

        // Four quarter transformations, one index at a time.
        let mut cur = self.eri.clone();
        for axis in 0..4 {
            let mut next = vec![0.0; cur.len()];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let src = [a, b, c, d];
                            let mut acc = 0.0;
                            for m in 0..n {
                                let mut idx = src;
                                idx[axis] = m;
                                acc += u[(src[axis], m)] * cur[idx4(n, idx[0], idx[1], idx[2], idx[3])];
                            }
                            next[idx4(n, a, b, c, d)] = acc;
                        }
                    }
                }
            }
            cur = next;
        }
        out.eri = cur;
        Ok(out)
    }

    /// Render as FCIDUMP text. Every stored value is written with a
    /// round-trip exact representation.
    pub fn to_fcidump(&self) -> String {
        let n = self.n_spatial;
        let mut s = String::new();
        let _ = writeln!(
            s,
            " &FCI NORB={},NELEC={},MS2={},\n  ORBSYM={}\n  ISYM=1,\n &END",
            n,
            self.n_electrons,
            self.ms2,
            "1,".repeat(n)
        );
        for i in 0..n {
            for j in 0..=i {
                for k in 0..n {
                    for l in 0..=k {
                        if i * (i + 1) / 2 + j < k * (k + 1) / 2 + l {
                            continue;
                        }
                        let x = self.eri(i, j, k, l);
                        if x != 0.0 {
                            let _ = writeln!(s, "{:e} {} {} {} {}", x, i + 1, j + 1, k + 1, l + 1);
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..=i {
                let x = self.h[(i, j)];
                if x != 0.0 {
                    let _ = writeln!(s, "{:e} {} {} 0 0", x, i + 1, j + 1);
                }
            }
        }
        let _ = writeln!(s, "{:e} 0 0 0 0", self.e_core);
        s
    }
}

fn check_orthogonal(u: &DMatrix<f64>) -> Result<(), IntegralsError> {
    let dev = (u.transpose() * u - DMatrix::identity(u.ncols(), u.ncols())).amax();
    if dev > ORTHOGONALITY_TOL {
        return Err(IntegralsError::Rotation(format!(
            "not orthogonal (max |UᵀU - I| = {dev:e})"
        )));
    }
    Ok(())
}

#[derive(Default)]
struct Header {
    norb: Option<usize>,
    nelec: Option<usize>,
    ms2: i32,
}

fn parse_header(text: &str, first_line: usize) -> Result<Header, IntegralsError> {
    let err = |msg: String| IntegralsError::Parse {
        line: first_line,
        msg,
    };
    let body = text
        .replace("&FCI", " ")
        .replace("&fci", " ")
        .replace("&END", " ")
        .replace("&end", " ")
        .replace('/', " ");
    let mut header = Header::default();
    let mut key = String::new();
    for tok in body.split(|c: char| c == ',' || c.is_whitespace()) {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let value = match tok.split_once('=') {
            Some((k, v)) => {
                key = k.trim().to_ascii_uppercase();
                v.trim()
            }
            // continuation of a list-valued key such as ORBSYM
            None => tok,
        };
        if value.is_empty() {
            continue;
        }
        match key.as_str() {
            "NORB" => {
                header.norb = Some(value.parse().map_err(|_| err(format!("bad NORB {value:?}")))?)
            }
            "NELEC" => {
                header.nelec = Some(value.parse().map_err(|_| err(format!("bad NELEC {value:?}")))?)
            }
            "MS2" => header.ms2 = value.parse().map_err(|_| err(format!("bad MS2 {value:?}")))?,
            "" => return Err(err(format!("unexpected token {tok:?} in header"))),
            // ORBSYM, ISYM, UHF, ...: symmetry labels are not used
            _ => {}
        }
    }
    Ok(header)
}

fn parse_value(tok: &str) -> Option<f64> {
    tok.parse::<f64>()
        .ok()
        .or_else(|| tok.replace(['D', 'd'], "e").parse().ok())
}

/// Parse FCIDUMP text into spatial-orbital integrals.
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals, IntegralsError> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or(IntegralsError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
    if !lines[start].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(IntegralsError::Parse {
            line: start + 1,
            msg: "missing &FCI namelist header".into(),
        });
    }
    let end = (start..lines.len())
        .find(|&i| {
            let t = lines[i].trim().to_ascii_uppercase();
            t.contains("&END") || t == "/" || t.ends_with('/')
        })
        .ok_or(IntegralsError::Parse {
            line: start + 1,
            msg: "unterminated namelist header".into(),
        })?;
    let header = parse_header(&lines[start..=end].join(" "), start + 1)?;
    let norb = header.norb.ok_or(IntegralsError::Parse {
        line: start + 1,
        msg: "header lacks NORB".into(),
    })?;
    let nelec = header.nelec.ok_or(IntegralsError::Parse {
        line: start + 1,
        msg: "header lacks NELEC".into(),
    })?;

    let mut mi = MolecularIntegrals::new(norb, nelec, header.ms2);
    let mut seen_eri = vec![false; norb.pow(4)];
    let mut seen_h = vec![false; norb * norb];
    let mut seen_core = false;

    for (offset, raw) in lines[end + 1..].iter().enumerate() {
        let line = end + offset + 2;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(IntegralsError::Parse {
                line,
                msg: format!("expected `value i j k l`, got {} fields", toks.len()),
            });
        }
        let value = parse_value(toks[0]).ok_or_else(|| IntegralsError::Parse {
            line,
            msg: format!("bad value {:?}", toks[0]),
        })?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            let v: usize = tok.parse().map_err(|_| IntegralsError::Parse {
                line,
                msg: format!("bad index {tok:?}"),
            })?;
            if v > norb {
                return Err(IntegralsError::IndexOutOfRange {
                    line,
                    index: v,
                    norb,
                });
            }
            *slot = v;
        }
        let check = |seen: bool, old: f64| {
            if seen && (old - value).abs() > DUPLICATE_TOL {
                Err(IntegralsError::Conflict {
                    line,
                    old,
                    new: value,
                })
            } else {
                Ok(())
            }
        };
        match idx {
            [0, 0, 0, 0] => {
                check(seen_core, mi.e_core)?;
                mi.e_core = value;
                seen_core = true;
            }
            [i, j, 0, 0] if i > 0 && j > 0 => {
                let (i, j) = (i - 1, j - 1);
                check(seen_h[i * norb + j], mi.h[(i, j)])?;
                mi.set_h(i, j, value);
                seen_h[i * norb + j] = true;
                seen_h[j * norb + i] = true;
            }
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                check(seen_eri[idx4(norb, i, j, k, l)], mi.eri(i, j, k, l))?;
                mi.set_eri(i, j, k, l, value);
                for (a, b, c, d) in eri_images(i, j, k, l) {
                    seen_eri[idx4(norb, a, b, c, d)] = true;
                }
            }
            // orbital energies (`e i 0 0 0`) carry no Hamiltonian information
            [_, 0, 0, 0] => {}
            _ => {
                return Err(IntegralsError::Parse {
                    line,
                    msg: format!("unrecognised index pattern {idx:?}"),
                })
            }
        }
    }
    mi.validate()?;
    Ok(mi)
}

pub fn read_fcidump(path: &Path) -> Result<MolecularIntegrals> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_fcidump(&text)?)
}

/// Parse a whitespace-separated, row-major `n × n` orthogonal matrix.
pub fn parse_rotation(text: &str, n: usize) -> Result<DMatrix<f64>, IntegralsError> {
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| {
            parse_value(t).ok_or_else(|| IntegralsError::Rotation(format!("bad number {t:?}")))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != n * n {
        return Err(IntegralsError::Rotation(format!(
            "expected {} entries for a {n}x{n} matrix, found {}",
            n * n,
            values.len()
        )));
    }
    let u = DMatrix::from_row_slice(n, n, &values);
    check_orthogonal(&u)?;
    Ok(u)
}

pub fn read_rotation(path: &Path, n: usize) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_rotation(&text, n)?)
}

/// Spin of a spin-orbital in the blocked layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinOrbitalHamiltonian {
    pub n_so: usize,
    pub h_so: DMatrix<f64>,
    v_so: Vec<f64>,
    pub e_core: f64,
}

impl SpinOrbitalHamiltonian {
    pub fn n_spatial(&self) -> usize {
        self.n_so / 2
    }

    pub fn spin(&self, p: usize) -> Spin {
        if p < self.n_spatial() {
            Spin::Alpha
        } else {
            Spin::Beta
        }
    }

    /// Physicist-convention coefficient of ½ c†_p c†_q c_s c_r.
    #[inline]
    pub fn v(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.v_so[idx4(self.n_so, p, q, r, s)]
    }

    /// Energy of a single occupation-number basis state.
    pub fn determinant_energy(&self, occupation: u64) -> f64 {
        let occ: Vec<usize> = (0..self.n_so).filter(|&p| occupation >> p & 1 == 1).collect();
        let mut e = self.e_core;
        for &p in &occ {
            e += self.h_so[(p, p)];
        }
        for &p in &occ {
            for &q in &occ {
                e += 0.5 * (self.v(p, q, p, q) - self.v(p, q, q, p));
            }
        }
        e
    }
}

/// Expand spatial integrals over spin-blocked spin-orbitals.
pub fn to_spin_orbitals(mi: &MolecularIntegrals) -> SpinOrbitalHamiltonian {
    let n = mi.n_spatial;
    let n_so = 2 * n;
    let spatial = |p: usize| p % n;
    let spin = |p: usize| p / n;
    let mut h_so = DMatrix::zeros(n_so, n_so);
    for p in 0..n_so {
        for q in 0..n_so {
            if spin(p) == spin(q) {
                h_so[(p, q)] = mi.h[(spatial(p), spatial(q))];
            }
        }
    }
    let mut v_so = vec![0.0; n_so.pow(4)];
    for p in 0..n_so {
        for q in 0..n_so {
            for r in 0..n_so {
                if spin(p) != spin(r) {
                    continue;
                }
                for s in 0..n_so {
                    if spin(q) != spin(s) {
                        continue;
                    }
                    v_so[idx4(n_so, p, q, r, s)] =
                        mi.eri(spatial(p), spatial(r), spatial(q), spatial(s));
                }
            }
        }
    }
    SpinOrbitalHamiltonian {
        n_so,
        h_so,
        v_so,
        e_core: mi.e_core,
    }
}
