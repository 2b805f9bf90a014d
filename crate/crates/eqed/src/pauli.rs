//! Pauli strings, weighted Pauli sums and their operator norms.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use smallvec::SmallVec;
use thiserror::Error;

use crate::linalg;

/// Coefficients with magnitude below this are pruned.
pub const ZERO_TOL: f64 = 1e-12;
/// Largest support accepted by the dense norm.
pub const DENSE_MAX_QUBITS: usize = 14;
/// Largest support accepted by the matrix-free norm (statevector size 2^26).
pub const KRYLOV_MAX_QUBITS: usize = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("support of {0} qubits exceeds the dense limit of {DENSE_MAX_QUBITS}")]
    SupportTooLarge(usize),
    #[error("power iteration did not converge (residual {residual:e} at estimate {estimate:e})")]
    NonConvergence { estimate: f64, residual: f64 },
    #[error("malformed pauli text: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Option<Pauli> {
        match (x, z) {
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
            (false, false) => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Phase `i^k` of the single-qubit product `a * b`.
fn letter_phase(a: Pauli, b: Pauli) -> u8 {
    use Pauli::*;
    match (a, b) {
        (X, Y) | (Y, Z) | (Z, X) => 1,
        (Y, X) | (Z, Y) | (X, Z) => 3,
        _ => 0,
    }
}

type Words = SmallVec<[u64; 2]>;

/// Tensor product of X, Y, Z letters; absent qubits carry the identity.
/// Stored as X and Z bit masks with trailing zero words trimmed.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: Words,
    z: Words,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: u32, p: Pauli) -> Self {
        let mut s = Self::identity();
        s.set(qubit, Some(p));
        s
    }

    pub fn from_letters<I: IntoIterator<Item = (u32, Pauli)>>(letters: I) -> Self {
        let mut s = Self::identity();
        for (q, p) in letters {
            s.set(q, Some(p));
        }
        s
    }

    /// Parses a compact word such as `"XZZY"` with qubit 0 leftmost; `I` or
    /// `1` stand for identity.
    pub fn from_word(word: &str) -> Option<Self> {
        let mut s = Self::identity();
        for (q, c) in word.chars().enumerate() {
            match c {
                'I' | '1' => {}
                _ => s.set(q as u32, Some(Pauli::from_char(c)?)),
            }
        }
        Some(s)
    }

    pub fn set(&mut self, qubit: u32, p: Option<Pauli>) {
        let w = (qubit / 64) as usize;
        let bit = 1u64 << (qubit % 64);
        let need = w + 1;
        if self.x.len() < need {
            self.x.resize(need, 0);
            self.z.resize(need, 0);
        }
        let (bx, bz) = p.map(Pauli::bits).unwrap_or((false, false));
        if bx {
            self.x[w] |= bit;
        } else {
            self.x[w] &= !bit;
        }
        if bz {
            self.z[w] |= bit;
        } else {
            self.z[w] &= !bit;
        }
        self.trim();
    }

    fn trim(&mut self) {
        while let (Some(&0), Some(&0)) = (self.x.last(), self.z.last()) {
            self.x.pop();
            self.z.pop();
        }
    }

    pub fn get(&self, qubit: u32) -> Option<Pauli> {
        let w = (qubit / 64) as usize;
        if w >= self.x.len() {
            return None;
        }
        let b = qubit % 64;
        Pauli::from_bits(self.x[w] >> b & 1 == 1, self.z[w] >> b & 1 == 1)
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_empty()
    }

    /// Letters in ascending qubit order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, Pauli)> + '_ {
        self.x.iter().zip(self.z.iter()).enumerate().flat_map(|(w, (&xw, &zw))| {
            let mut m = xw | zw;
            std::iter::from_fn(move || {
                if m == 0 {
                    return None;
                }
                let b = m.trailing_zeros();
                m &= m - 1;
                let p = Pauli::from_bits(xw >> b & 1 == 1, zw >> b & 1 == 1).unwrap();
                Some((w as u32 * 64 + b, p))
            })
        })
    }

    pub fn support(&self) -> Vec<u32> {
        self.iter().map(|(q, _)| q).collect()
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// One past the highest non-identity qubit.
    pub fn width(&self) -> u32 {
        match self.x.iter().zip(&self.z).rposition(|(a, b)| a | b != 0) {
            None => 0,
            Some(w) => {
                let m = self.x[w] | self.z[w];
                w as u32 * 64 + 64 - m.leading_zeros()
            }
        }
    }

    /// True when every letter is Z.
    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    /// Qubits carrying X or Y.
    pub fn flip_qubits(&self) -> Vec<u32> {
        self.iter().filter(|(_, p)| *p != Pauli::Z).map(|(q, _)| q).collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let n = self.x.len().min(other.x.len());
        let mut parity = 0u32;
        for i in 0..n {
            parity ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones() & 1;
        }
        parity == 0
    }

    /// Product `self * other` as `(i^k, string)`.
    pub fn mul(&self, other: &PauliString) -> (u8, PauliString) {
        let n = self.x.len().max(other.x.len());
        let mut x = Words::with_capacity(n);
        let mut z = Words::with_capacity(n);
        let mut k = 0u32;
        for i in 0..n {
            let (ax, az) = (word(&self.x, i), word(&self.z, i));
            let (bx, bz) = (word(&other.x, i), word(&other.z, i));
            let mut both = (ax | az) & (bx | bz);
            while both != 0 {
                let b = both.trailing_zeros();
                both &= both - 1;
                let pa = Pauli::from_bits(ax >> b & 1 == 1, az >> b & 1 == 1).unwrap();
                let pb = Pauli::from_bits(bx >> b & 1 == 1, bz >> b & 1 == 1).unwrap();
                k += letter_phase(pa, pb) as u32;
            }
            x.push(ax ^ bx);
            z.push(az ^ bz);
        }
        let mut s = PauliString { x, z };
        s.trim();
        ((k % 4) as u8, s)
    }

    /// Masks restricted to the first 64 qubits; `None` if wider.
    pub(crate) fn masks64(&self) -> Option<(u64, u64)> {
        match self.x.len() {
            0 => Some((0, 0)),
            1 => Some((self.x[0], self.z[0])),
            _ => None,
        }
    }

    /// Relabels qubits through `map` (old index -> new index).
    pub fn relabel(&self, map: impl Fn(u32) -> u32) -> PauliString {
        PauliString::from_letters(self.iter().map(|(q, p)| (map(q), p)))
    }
}

fn word(w: &Words, i: usize) -> u64 {
    w.get(i).copied().unwrap_or(0)
}

impl Ord for PauliString {
    /// Canonical order: sorted support first, then letter codes.
    fn cmp(&self, other: &Self) -> Ordering {
        let sa = self.iter().map(|(q, _)| q);
        let sb = other.iter().map(|(q, _)| q);
        sa.cmp(sb).then_with(|| self.iter().map(|(_, p)| p).cmp(other.iter().map(|(_, p)| p)))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (q, p) in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}{}", p.as_char(), q)?;
        }
        Ok(())
    }
}

pub fn phase(k: u8) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: C64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: C64, string: PauliString) -> Self {
        Self { coeff, string }
    }

    pub fn letter(coeff: f64, qubit: u32, p: Pauli) -> Self {
        Self::new(C64::new(coeff, 0.0), PauliString::single(qubit, p))
    }
}

/// Exact product of two terms with the phase folded into the coefficient.
pub fn multiply(a: &PauliTerm, b: &PauliTerm) -> PauliTerm {
    let (k, s) = a.string.mul(&b.string);
    PauliTerm::new(a.coeff * b.coeff * phase(k), s)
}

/// Linear combination of Pauli strings with one entry per letter pattern.
#[derive(Clone, Default, PartialEq)]
pub struct PauliSum {
    terms: BTreeMap<PauliString, C64>,
}

impl PauliSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity(c: C64) -> Self {
        let mut s = Self::zero();
        s.add_term(PauliString::identity(), c);
        s
    }

    pub fn from_terms<I: IntoIterator<Item = PauliTerm>>(terms: I) -> Self {
        let mut s = Self::zero();
        for t in terms {
            s.accumulate(t.string, t.coeff);
        }
        s.prune();
        s
    }

    /// Adds `c * string`, dropping the entry if it cancels.
    pub fn add_term(&mut self, string: PauliString, c: C64) {
        let v = self.coeff(&string) + c;
        if v.norm() < ZERO_TOL {
            self.terms.remove(&string);
        } else {
            self.terms.insert(string, v);
        }
    }

    fn accumulate(&mut self, string: PauliString, c: C64) {
        *self.terms.entry(string).or_insert(C64::new(0.0, 0.0)) += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= ZERO_TOL);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &C64)> {
        self.terms.iter()
    }

    pub fn terms(&self) -> Vec<PauliTerm> {
        self.terms.iter().map(|(s, c)| PauliTerm::new(*c, s.clone())).collect()
    }

    pub fn coeff(&self, s: &PauliString) -> C64 {
        self.terms.get(s).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// One past the highest qubit touched.
    pub fn width(&self) -> u32 {
        self.terms.keys().map(PauliString::width).max().unwrap_or(0)
    }

    pub fn support(&self) -> Vec<u32> {
        let mut qs: Vec<u32> = self.terms.keys().flat_map(|s| s.support()).collect();
        qs.sort_unstable();
        qs.dedup();
        qs
    }

    pub fn scale(&self, c: C64) -> PauliSum {
        let mut out = PauliSum { terms: self.terms.iter().map(|(s, v)| (s.clone(), v * c)).collect() };
        out.prune();
        out
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.accumulate(s.clone(), *c);
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &PauliSum) -> PauliSum {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (k, s) = a.mul(b);
                out.accumulate(s, ca * cb * phase(k));
            }
        }
        out.prune();
        out
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum { terms: self.terms.iter().map(|(s, c)| (s.clone(), c.conj())).collect() }
    }

    /// True when every coefficient is real to `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Sum of coefficient magnitudes.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn relabel(&self, map: impl Fn(u32) -> u32) -> PauliSum {
        let mut out = PauliSum::zero();
        for (s, c) in &self.terms {
            out.accumulate(s.relabel(&map), *c);
        }
        out.prune();
        out
    }

    /// Textual form: one `re im : X0 Z1 ...` line per term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, c) in &self.terms {
            out.push_str(&format!("{:?} {:?} :", c.re, c.im));
            for (q, p) in s.iter() {
                out.push_str(&format!(" {}{}", p.as_char(), q));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<PauliSum, PauliError> {
        let mut out = PauliSum::zero();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || PauliError::Parse(format!("line {}: {}", lineno + 1, line));
            let (head, tail) = line.split_once(':').ok_or_else(bad)?;
            let nums: Vec<f64> =
                head.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad())?;
            if nums.len() != 2 {
                return Err(bad());
            }
            let mut s = PauliString::identity();
            for tok in tail.split_whitespace() {
                let mut chars = tok.chars();
                let p = chars.next().and_then(Pauli::from_char).ok_or_else(bad)?;
                let q: u32 = chars.as_str().parse().map_err(|_| bad())?;
                if s.get(q).is_some() {
                    return Err(bad());
                }
                s.set(q, Some(p));
            }
            out.accumulate(s, C64::new(nums[0], nums[1]));
        }
        out.prune();
        Ok(out)
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// `[a, b] = ab - ba`. Only anticommuting string pairs contribute.
pub fn commutator(a: &PauliSum, b: &PauliSum) -> PauliSum {
    let mut out = PauliSum::zero();
    for (sa, ca) in &a.terms {
        for (sb, cb) in &b.terms {
            if sa.commutes_with(sb) {
                continue;
            }
            let (k, s) = sa.mul(sb);
            out.accumulate(s, ca * cb * phase(k) * 2.0);
        }
    }
    out.prune();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    Dense,
    PowerIteration,
}

/// Terms compressed to the local support `0..k` as `(x, z, c, i^{|x&z|})`;
/// each acts as `|b> -> c i^{|x&z|} (-1)^{|z&b|} |b ^ x>`.
fn local_terms(s: &PauliSum) -> (u32, Vec<(u64, u64, C64, C64)>) {
    let support = s.support();
    let k = support.len() as u32;
    let local = s.relabel(|q| support.binary_search(&q).unwrap() as u32);
    let terms = local
        .iter()
        .map(|(p, c)| {
            let (x, z) = p.masks64().expect("local support fits in 64 qubits");
            (x, z, *c, phase(((x & z).count_ones() % 4) as u8))
        })
        .collect();
    (k, terms)
}

fn sign(z: u64, b: u64) -> f64 {
    if (z & b).count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Largest singular value of the operator, evaluated on its support only.
pub fn spectral_norm(s: &PauliSum, method: NormMethod) -> Result<f64, PauliError> {
    if s.is_empty() {
        return Ok(0.0);
    }
    let k = s.support().len();
    match method {
        NormMethod::Dense => {
            if k > DENSE_MAX_QUBITS {
                return Err(PauliError::SupportTooLarge(k));
            }
            let (k, terms) = local_terms(s);
            let mut masks: Vec<u64> = terms.iter().map(|t| t.0).collect();
            masks.sort_unstable();
            masks.dedup();
            Ok(linalg::block_spectral_norm(k, &masks, |b, out| {
                for &(x, z, c, ph) in &terms {
                    out.push((b ^ x, c * ph * sign(z, b)));
                }
            }))
        }
        NormMethod::PowerIteration => {
            if k > KRYLOV_MAX_QUBITS {
                return Err(PauliError::SupportTooLarge(k));
            }
            let (k, terms) = local_terms(s);
            let dim = 1usize << k;
            // Column action of c_t * P_t is c_t i^{|x&z|} (-1)^{|z&b|}; the adjoint
            // keeps the string and conjugates only c_t.
            let apply_op = |conj: bool, x_in: &[C64], y: &mut [C64]| {
                y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                for &(x, z, c, ph) in &terms {
                    let c = if conj { c.conj() * ph } else { c * ph };
                    for b in 0..dim as u64 {
                        let v = x_in[b as usize];
                        if v.re == 0.0 && v.im == 0.0 {
                            continue;
                        }
                        y[(b ^ x) as usize] += c * sign(z, b) * v;
                    }
                }
            };
            let mut tmp = vec![C64::new(0.0, 0.0); dim];
            let tmp_cell = std::cell::RefCell::new(&mut tmp);
            let res = linalg::psd_top_eigenvalue(
                dim,
                |x, y| {
                    let mut t = tmp_cell.borrow_mut();
                    apply_op(false, x, &mut t);
                    apply_op(true, &t, y);
                },
                10 * k.max(1) as usize,
                3,
                1e-6,
                0x5eed_0001 ^ k as u64,
            );
            if !res.converged {
                return Err(PauliError::NonConvergence {
                    estimate: res.eigenvalue.max(0.0).sqrt(),
                    residual: res.residual,
                });
            }
            Ok(res.eigenvalue.max(0.0).sqrt())
        }
    }
}
