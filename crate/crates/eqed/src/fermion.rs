//! Second-quantized operators over indexed fermionic modes and their
//! Jordan-Wigner images.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64 as C64;
use smallvec::SmallVec;
use thiserror::Error;

use crate::linalg;
use crate::pauli::{Pauli, PauliString, PauliSum, PauliTerm, ZERO_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FermionError {
    #[error("index order violation: expected j > k > l{0}")]
    IndexOrderViolation(&'static str),
    #[error("polynomial contains an odd monomial")]
    OddParity,
    #[error("support of {0} modes is too large for this operation")]
    TooManyModes(usize),
    #[error("malformed term dump: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    Electron,
    Positron,
}

/// A fermionic mode. The derived order (species, coordinate, label) is the
/// canonical Jordan-Wigner order: all electrons precede all positrons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub species: Species,
    pub coord: [i32; 3],
    pub label: u8,
}

impl ModeIndex {
    pub fn new(species: Species, coord: [i32; 3], label: u8) -> Self {
        Self { species, coord, label }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.species {
            Species::Electron => 'e',
            Species::Positron => 'p',
        };
        write!(f, "a({},{},{},{},{})", s, self.coord[0], self.coord[1], self.coord[2], self.label)
    }
}

/// Sorted set of modes; a mode's position is its qubit under Jordan-Wigner.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeSpace {
    modes: Vec<ModeIndex>,
}

impl ModeSpace {
    pub fn new(mut modes: Vec<ModeIndex>) -> Self {
        modes.sort();
        modes.dedup();
        Self { modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn position(&self, m: &ModeIndex) -> Option<u32> {
        self.modes.binary_search(m).ok().map(|p| p as u32)
    }

    pub fn mode(&self, pos: u32) -> ModeIndex {
        self.modes[pos as usize]
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }
}

/// Creation or annihilation operator on a mode position, packed as
/// `mode << 1 | dagger`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Op(u32);

impl Op {
    pub fn create(mode: u32) -> Op {
        Op(mode << 1 | 1)
    }

    pub fn annihilate(mode: u32) -> Op {
        Op(mode << 1)
    }

    pub fn new(mode: u32, dagger: bool) -> Op {
        Op(mode << 1 | dagger as u32)
    }

    pub fn mode(self) -> u32 {
        self.0 >> 1
    }

    pub fn dagger(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn adjoint(self) -> Op {
        Op(self.0 ^ 1)
    }

    /// Sort key of the canonical normal order: creators by ascending mode,
    /// then annihilators by descending mode.
    fn key(self) -> (u8, i64) {
        if self.dagger() {
            (0, self.mode() as i64)
        } else {
            (1, -(self.mode() as i64))
        }
    }
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.dagger() { "+" } else { "-" }, self.mode())
    }
}

pub type Ops = SmallVec<[Op; 4]>;

/// `coeff * ops[0] ops[1] ...` (operators applied right to left).
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coeff: C64,
    pub ops: Ops,
}

impl FermionTerm {
    pub fn new(coeff: C64, ops: &[Op]) -> Self {
        Self { coeff, ops: Ops::from_slice(ops) }
    }

    pub fn is_even(&self) -> bool {
        self.ops.len() % 2 == 0
    }

    pub fn adjoint(&self) -> FermionTerm {
        FermionTerm { coeff: self.coeff.conj(), ops: self.ops.iter().rev().map(|o| o.adjoint()).collect() }
    }

    /// Number of creators minus annihilators on modes selected by `pred`.
    pub fn number_change(&self, pred: impl Fn(u32) -> bool) -> i32 {
        self.ops.iter().filter(|o| pred(o.mode())).map(|o| if o.dagger() { 1 } else { -1 }).sum()
    }

    /// Sorted distinct modes touched.
    pub fn modes(&self) -> SmallVec<[u32; 8]> {
        let mut m: SmallVec<[u32; 8]> = self.ops.iter().map(|o| o.mode()).collect();
        m.sort_unstable();
        m.dedup();
        m
    }
}

/// Sum of fermionic monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FermionPolynomial {
    pub terms: Vec<FermionTerm>,
}

/// Normal-orders a single product, keeping Wick contraction terms. Output
/// monomials are canonical and free of repeated operators.
fn normal_order_into(ops: &[Op], coeff: C64, out: &mut Vec<(SmallVec<[Op; 12]>, C64)>) {
    let mut stack: Vec<(SmallVec<[Op; 12]>, C64)> = vec![(SmallVec::from_slice(ops), coeff)];
    'outer: while let Some((mut w, mut c)) = stack.pop() {
        // bubble sort with anticommutation signs
        loop {
            let mut swapped = false;
            let mut i = 0;
            while i + 1 < w.len() {
                let (a, b) = (w[i], w[i + 1]);
                if a == b {
                    continue 'outer;
                }
                if a.key() > b.key() {
                    if !a.dagger() && b.dagger() && a.mode() == b.mode() {
                        let mut contracted = w.clone();
                        contracted.remove(i);
                        contracted.remove(i);
                        stack.push((contracted, c));
                    }
                    w.swap(i, i + 1);
                    c = -c;
                    swapped = true;
                }
                i += 1;
            }
            if !swapped {
                break;
            }
        }
        out.push((w, c));
    }
}

impl FermionPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<FermionTerm>) -> Self {
        Self { terms }
    }

    pub fn constant(c: C64) -> Self {
        Self { terms: vec![FermionTerm::new(c, &[])] }
    }

    pub fn push(&mut self, coeff: C64, ops: &[Op]) {
        self.terms.push(FermionTerm::new(coeff, ops));
    }

    pub fn extend(&mut self, other: FermionPolynomial) {
        self.terms.extend(other.terms);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: C64) -> FermionPolynomial {
        FermionPolynomial {
            terms: self.terms.iter().map(|t| FermionTerm { coeff: t.coeff * c, ops: t.ops.clone() }).collect(),
        }
    }

    pub fn adjoint(&self) -> FermionPolynomial {
        FermionPolynomial { terms: self.terms.iter().map(FermionTerm::adjoint).collect() }
    }

    pub fn is_even(&self) -> bool {
        self.terms.iter().all(FermionTerm::is_even)
    }

    /// Canonical form: normal-ordered, like monomials combined, zeros
    /// (|c| < 1e-12) dropped, sorted by operator sequence.
    pub fn normal_ordered(&self) -> FermionPolynomial {
        let mut acc: HashMap<Ops, C64> = HashMap::with_capacity(self.terms.len());
        let mut buf = Vec::new();
        for t in &self.terms {
            buf.clear();
            normal_order_into(&t.ops, t.coeff, &mut buf);
            for (w, c) in buf.drain(..) {
                *acc.entry(Ops::from_slice(&w)).or_insert(C64::new(0.0, 0.0)) += c;
            }
        }
        let mut terms: Vec<FermionTerm> = acc
            .into_iter()
            .filter(|(_, c)| c.norm() >= ZERO_TOL)
            .map(|(ops, coeff)| FermionTerm { coeff, ops })
            .collect();
        terms.sort_by(|a, b| a.ops.cmp(&b.ops));
        FermionPolynomial { terms }
    }

    /// Canonical product `self * other`.
    pub fn mul(&self, other: &FermionPolynomial) -> FermionPolynomial {
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut ops = a.ops.clone();
                ops.extend_from_slice(&b.ops);
                raw.push(FermionTerm { coeff: a.coeff * b.coeff, ops });
            }
        }
        FermionPolynomial { terms: raw }.normal_ordered()
    }

    pub fn add(&self, other: &FermionPolynomial) -> FermionPolynomial {
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        FermionPolynomial { terms: t }.normal_ordered()
    }

    /// Sorted distinct modes touched.
    pub fn modes(&self) -> Vec<u32> {
        let mut m: Vec<u32> = self.terms.iter().flat_map(|t| t.ops.iter().map(|o| o.mode())).collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    /// Relabels modes through `map` (old position -> new position).
    pub fn relabel(&self, map: impl Fn(u32) -> u32) -> FermionPolynomial {
        FermionPolynomial {
            terms: self
                .terms
                .iter()
                .map(|t| FermionTerm {
                    coeff: t.coeff,
                    ops: t.ops.iter().map(|o| Op::new(map(o.mode()), o.dagger())).collect(),
                })
                .collect(),
        }
    }

    /// Jordan-Wigner image of the whole polynomial.
    pub fn jordan_wigner(&self) -> PauliSum {
        let mut out = Vec::new();
        for t in &self.terms {
            out.extend(jordan_wigner(t).terms());
        }
        PauliSum::from_terms(out)
    }

    /// One term per line: `re im : +a(e,px,py,pz,s) -a(...)`.
    pub fn to_dump(&self, space: &ModeSpace) -> String {
        let mut s = String::new();
        for t in &self.terms {
            s.push_str(&format!("{:?} {:?} :", t.coeff.re, t.coeff.im));
            for o in &t.ops {
                s.push(' ');
                s.push(if o.dagger() { '+' } else { '-' });
                s.push_str(&space.mode(o.mode()).to_string());
            }
            s.push('\n');
        }
        s
    }

    pub fn from_dump(text: &str, space: &ModeSpace) -> Result<FermionPolynomial, FermionError> {
        let mut poly = FermionPolynomial::zero();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || FermionError::Parse(format!("line {}: {}", n + 1, line));
            let (head, tail) = line.split_once(':').ok_or_else(bad)?;
            let nums: Vec<f64> = head.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad())?;
            if nums.len() != 2 {
                return Err(bad());
            }
            let mut ops = Ops::new();
            for tok in tail.split_whitespace() {
                let dagger = match tok.chars().next() {
                    Some('+') => true,
                    Some('-') => false,
                    _ => return Err(bad()),
                };
                let inner = tok[1..].strip_prefix("a(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
                let parts: Vec<&str> = inner.split(',').collect();
                if parts.len() != 5 {
                    return Err(bad());
                }
                let species = match parts[0] {
                    "e" => Species::Electron,
                    "p" => Species::Positron,
                    _ => return Err(bad()),
                };
                let mut coord = [0i32; 3];
                for i in 0..3 {
                    coord[i] = parts[1 + i].parse().map_err(|_| bad())?;
                }
                let label: u8 = parts[4].parse().map_err(|_| bad())?;
                let pos = space.position(&ModeIndex::new(species, coord, label)).ok_or_else(bad)?;
                ops.push(Op::new(pos, dagger));
            }
            poly.terms.push(FermionTerm { coeff: C64::new(nums[0], nums[1]), ops });
        }
        Ok(poly)
    }
}

/// `[a, b] = ab - ba` in canonical form.
pub fn commutator(a: &FermionPolynomial, b: &FermionPolynomial) -> FermionPolynomial {
    let ab = a.mul(b);
    let ba = b.mul(a);
    let mut t = ab.terms;
    t.extend(ba.terms.into_iter().map(|x| FermionTerm { coeff: -x.coeff, ops: x.ops }));
    FermionPolynomial { terms: t }.normal_ordered()
}

/// True iff `poly^dagger - poly` has every coefficient below 1e-10.
pub fn check_hermitian(poly: &FermionPolynomial) -> bool {
    let mut t = poly.adjoint().terms;
    t.extend(poly.terms.iter().map(|x| FermionTerm { coeff: -x.coeff, ops: x.ops.clone() }));
    let diff = FermionPolynomial { terms: t }.normal_ordered();
    diff.terms.iter().all(|x| x.coeff.norm() < 1e-10)
}

/// Coefficient matrix h with `poly = sum h[i][j] a_i^dagger a_j` over `n`
/// modes. None if `poly` has any term that is not of that form.
pub fn one_body_matrix(poly: &FermionPolynomial, n: usize) -> Option<nalgebra::DMatrix<C64>> {
    let mut h = nalgebra::DMatrix::zeros(n, n);
    for t in &poly.terms {
        match t.ops.as_slice() {
            [a, b] if a.dagger() && !b.dagger() && (a.mode() as usize) < n && (b.mode() as usize) < n => {
                h[(a.mode() as usize, b.mode() as usize)] += t.coeff;
            }
            _ => return None,
        }
    }
    Some(h)
}

/// True iff every monomial preserves the count selected by `weight`
/// (sum over creators of weight minus sum over annihilators).
pub fn conserves(poly: &FermionPolynomial, weight: impl Fn(u32) -> i32) -> bool {
    poly.terms.iter().all(|t| {
        t.ops.iter().map(|o| if o.dagger() { weight(o.mode()) } else { -weight(o.mode()) }).sum::<i32>() == 0
    })
}

/// Jordan-Wigner image of one monomial with mode position = qubit:
/// `a_x^dagger -> (X - iY)_x (prod_{y<x} Z_y) / 2`.
pub fn jordan_wigner(term: &FermionTerm) -> PauliSum {
    let mut acc = PauliSum::identity(term.coeff);
    for op in &term.ops {
        let q = op.mode();
        let string = |p: Pauli| PauliString::from_letters((0..q).map(|y| (y, Pauli::Z)).chain([(q, p)]));
        let s = if op.dagger() { -0.5 } else { 0.5 };
        let factor = PauliSum::from_terms([
            PauliTerm::new(C64::new(0.5, 0.0), string(Pauli::X)),
            PauliTerm::new(C64::new(0.0, s), string(Pauli::Y)),
        ]);
        acc = acc.mul(&factor);
    }
    acc
}

/// Sign tables of the four 1->3 cases and the all-creation case. Each entry
/// lists the eight words (highest qubit first) of the real part, with signs,
/// then the eight of the imaginary part.
struct CaseTable {
    real_prefactor: f64,
    real: [(&'static str, i8); 8],
    imag_prefactor: f64,
    imag: [(&'static str, i8); 8],
}

const CASE1: CaseTable = CaseTable {
    real_prefactor: -1.0,
    real: [("XXXX", 1), ("XXYY", 1), ("XYXY", 1), ("XYYX", -1), ("YXXY", 1), ("YXYX", -1), ("YYXX", -1), ("YYYY", -1)],
    imag_prefactor: -1.0,
    imag: [("XXXY", 1), ("XXYX", -1), ("XYXX", -1), ("YXXX", -1), ("XYYY", -1), ("YXYY", -1), ("YYXY", -1), ("YYYX", 1)],
};

// Printed with an overall sign opposite to the exact expansion; corrected by
// `sign_fix` below.
const CASE2: CaseTable = CaseTable {
    real_prefactor: 1.0,
    real: [("XXXX", 1), ("XXYY", 1), ("XYXY", -1), ("YXXY", -1), ("YXYX", 1), ("YYXX", -1), ("XYYX", 1), ("YYYY", -1)],
    imag_prefactor: 1.0,
    imag: [("XYYY", -1), ("YXYY", -1), ("YYXY", 1), ("YYYX", -1), ("YXXX", -1), ("XYXX", -1), ("XXYX", 1), ("XXXY", -1)],
};

const CASE3: CaseTable = CaseTable {
    real_prefactor: -1.0,
    real: [("XXXX", 1), ("XXYY", -1), ("XYXY", 1), ("YXXY", -1), ("YXYX", -1), ("YYXX", 1), ("XYYX", 1), ("YYYY", -1)],
    imag_prefactor: -1.0,
    imag: [("XXXY", -1), ("XXYX", -1), ("XYXX", 1), ("YXXX", -1), ("XYYY", -1), ("YXYY", 1), ("YYXY", -1), ("YYYX", -1)],
};

const CASE4: CaseTable = CaseTable {
    real_prefactor: 1.0,
    real: [("XXXX", 1), ("XXYY", -1), ("XYXY", -1), ("YXXY", 1), ("XYYX", -1), ("YXYX", 1), ("YYXX", 1), ("YYYY", -1)],
    imag_prefactor: 1.0,
    imag: [("XYYY", 1), ("YXYY", -1), ("YYXY", -1), ("YYYX", -1), ("XXXY", -1), ("XXYX", -1), ("XYXX", -1), ("YXXX", 1)],
};

const CREATION: CaseTable = CaseTable {
    real_prefactor: 1.0,
    real: [("XXXX", 1), ("XXYY", -1), ("XYXY", -1), ("YXXY", -1), ("XYYX", -1), ("YXYX", -1), ("YYXX", -1), ("YYYY", 1)],
    imag_prefactor: 1.0,
    imag: [("XYYY", 1), ("YXYY", 1), ("YYXY", 1), ("YYYX", 1), ("XXXY", -1), ("XXYX", -1), ("XYXX", -1), ("YXXX", -1)],
};

/// Which of the interaction forms a 4-mode tuple falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JwCase {
    /// m < l
    Case1,
    /// l < m < k
    Case2,
    /// k < m < j
    Case3,
    /// m > j
    Case4,
    /// `a_j^+ a_k^+ a_l^+ a_m^+` with j > k > l > m
    Creation,
}

/// Pauli expansion of `V a_j^+ a_k^+ a_l^+ a_m + h.c.` (or the all-creation
/// form when `all_creation`) read off the case sign tables, with Z strings on
/// the open intervals between the two highest and the two lowest positions.
pub fn jw_case_expand(j: u32, k: u32, l: u32, m: u32, v: C64, all_creation: bool) -> Result<(JwCase, PauliSum), FermionError> {
    if !(j > k && k > l) {
        return Err(FermionError::IndexOrderViolation(""));
    }
    let case = if all_creation {
        if m >= l {
            return Err(FermionError::IndexOrderViolation(" > m for the all-creation form"));
        }
        JwCase::Creation
    } else if m == j || m == k || m == l {
        return Err(FermionError::IndexOrderViolation(" with m distinct"));
    } else if m < l {
        JwCase::Case1
    } else if m < k {
        JwCase::Case2
    } else if m < j {
        JwCase::Case3
    } else {
        JwCase::Case4
    };
    let (table, sign_fix) = match case {
        JwCase::Case1 => (&CASE1, 1.0),
        JwCase::Case2 => (&CASE2, -1.0),
        JwCase::Case3 => (&CASE3, 1.0),
        JwCase::Case4 => (&CASE4, -1.0),
        JwCase::Creation => (&CREATION, 1.0),
    };
    let mut pos = [j, k, l, m];
    pos.sort_unstable_by(|a, b| b.cmp(a));
    let strings: Vec<(u32, Pauli)> =
        ((pos[1] + 1)..pos[0]).chain((pos[3] + 1)..pos[2]).map(|q| (q, Pauli::Z)).collect();
    let re = (v + v.conj()) / 16.0 * table.real_prefactor * sign_fix;
    let im = C64::new(0.0, 1.0) * (v - v.conj()) / 16.0 * table.imag_prefactor * sign_fix;
    let mut terms = Vec::with_capacity(16);
    for (pref, words) in [(re, &table.real), (im, &table.imag)] {
        for &(w, s) in words.iter() {
            let mut letters = strings.clone();
            for (slot, ch) in w.chars().enumerate() {
                letters.push((pos[slot], Pauli::from_char(ch).unwrap()));
            }
            terms.push(PauliTerm::new(pref * s as f64, PauliString::from_letters(letters)));
        }
    }
    Ok((case, PauliSum::from_terms(terms)))
}

/// Relabels the modes appearing in `poly` to `0..k` in canonical order.
/// Returns the relabeled polynomial and the original position of each new
/// mode.
pub fn reduce_to_support(poly: &FermionPolynomial) -> Result<(FermionPolynomial, Vec<u32>), FermionError> {
    if !poly.is_even() {
        return Err(FermionError::OddParity);
    }
    let modes = poly.modes();
    let reduced = poly.relabel(|m| modes.binary_search(&m).unwrap() as u32);
    Ok((reduced, modes))
}

/// Operator norm of `poly` on the Fock space of its own support, computed in
/// the occupation basis (equal to the norm of its Jordan-Wigner image). Each
/// canonical monomial maps a basis state to at most one basis state, so the
/// operator splits into blocks over cosets of its flip patterns.
pub fn fock_spectral_norm(poly: &FermionPolynomial) -> Result<f64, FermionError> {
    let (reduced, modes) = reduce_to_support(poly)?;
    let k = modes.len();
    if k > crate::pauli::DENSE_MAX_QUBITS {
        return Err(FermionError::TooManyModes(k));
    }
    let canon = reduced.normal_ordered();
    if canon.is_empty() {
        return Ok(0.0);
    }
    let mut masks: Vec<u64> = canon
        .terms
        .iter()
        .map(|t| t.ops.iter().fold(0u64, |m, o| m ^ (1u64 << o.mode())))
        .collect();
    masks.sort_unstable();
    masks.dedup();
    Ok(linalg::block_spectral_norm(k as u32, &masks, |b, out| {
        for t in &canon.terms {
            if let Some((b2, s)) = apply_monomial(&t.ops, b) {
                out.push((b2, t.coeff * s));
            }
        }
    }))
}

/// Action of a monomial on occupation basis state `b` (bit q = mode q),
/// with the Jordan-Wigner sign convention. `None` if it annihilates `b`.
pub fn apply_monomial(ops: &[Op], mut b: u64) -> Option<(u64, f64)> {
    let mut sign = 1.0;
    for o in ops.iter().rev() {
        let q = o.mode();
        let bit = 1u64 << q;
        let occupied = b & bit != 0;
        if o.dagger() == occupied {
            return None;
        }
        if (b & (bit - 1)).count_ones() & 1 == 1 {
            sign = -sign;
        }
        b ^= bit;
    }
    Some((b, sign))
}
