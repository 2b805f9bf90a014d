//! Gate-level Trotter-Suzuki compilation of Pauli Hamiltonians.
//!
//! Rotation convention: `Rz(theta) = diag(e^{-i theta/2}, e^{i theta/2})`, so
//! `e^{i a Z} = Rz(-2a)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::pauli::{Pauli, PauliString, PauliSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrotterError {
    #[error("Trotter order must be even and at least 2, got {0}")]
    OddOrder(u32),
    #[error("malformed one-body pair: {0}")]
    MalformedPair(String),
    #[error("diagonalizer needs exactly 4 qubits, got {0}")]
    WrongArity(usize),
    #[error("Hamiltonian is not Hermitian: coefficient with imaginary part {0:e}")]
    NonHermitian(f64),
    #[error("malformed circuit text: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    X(u32),
    H(u32),
    S(u32),
    Sdg(u32),
    Cnot(u32, u32),
    Rz(u32, f64),
}

impl Gate {
    pub fn qubits(&self) -> (u32, Option<u32>) {
        match *self {
            Gate::X(q) | Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::Rz(q, _) => (q, None),
            Gate::Cnot(c, t) => (c, Some(t)),
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            Gate::Rz(q, a) => Gate::Rz(q, -a),
            g => g,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCounts {
    pub rz: usize,
    pub cnot: usize,
    pub x: usize,
    pub h: usize,
    /// S and S^dagger together.
    pub s: usize,
}

impl GateCounts {
    pub fn single_qubit(&self) -> usize {
        self.rz + self.h + self.s + self.x
    }

    pub fn total(&self) -> usize {
        self.single_qubit() + self.cnot
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: u32,
    pub gates: Vec<Gate>,
    /// The circuit implements `e^{i global_phase}` times its gate product.
    pub global_phase: f64,
}

impl Circuit {
    pub fn new(num_qubits: u32) -> Self {
        Self { num_qubits, gates: Vec::new(), global_phase: 0.0 }
    }

    pub fn push(&mut self, g: Gate) {
        if let Gate::Cnot(c, t) = g {
            debug_assert_ne!(c, t);
        }
        self.gates.push(g);
    }

    pub fn append(&mut self, other: &Circuit) {
        self.gates.extend_from_slice(&other.gates);
        self.global_phase += other.global_phase;
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            global_phase: -self.global_phase,
        }
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            match g {
                Gate::X(_) => c.x += 1,
                Gate::H(_) => c.h += 1,
                Gate::S(_) | Gate::Sdg(_) => c.s += 1,
                Gate::Cnot(..) => c.cnot += 1,
                Gate::Rz(..) => c.rz += 1,
            }
        }
        c
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.num_qubits);
        if self.global_phase != 0.0 {
            let _ = writeln!(s, "# global_phase {:.12}", self.global_phase);
        }
        for g in &self.gates {
            let _ = match *g {
                Gate::X(q) => writeln!(s, "X {q}"),
                Gate::H(q) => writeln!(s, "H {q}"),
                Gate::S(q) => writeln!(s, "S {q}"),
                Gate::Sdg(q) => writeln!(s, "SDG {q}"),
                Gate::Cnot(c, t) => writeln!(s, "CNOT {c} {t}"),
                Gate::Rz(q, a) => writeln!(s, "RZ {q} {a:.12}"),
            };
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit, TrotterError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |l: &str| TrotterError::Parse(l.to_string());
        let head = lines.next().ok_or_else(|| bad("empty"))?;
        let n: u32 = head.strip_prefix("QUBITS ").and_then(|r| r.trim().parse().ok()).ok_or_else(|| bad(head))?;
        let mut c = Circuit::new(n);
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts[0] == "#" {
                if parts.get(1) == Some(&"global_phase") {
                    c.global_phase = parts.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad(line))?;
                }
                continue;
            }
            let q = |i: usize| -> Result<u32, TrotterError> {
                let v: u32 = parts.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| bad(line))?;
                if v >= n {
                    return Err(bad(line));
                }
                Ok(v)
            };
            let g = match parts[0] {
                "X" => Gate::X(q(1)?),
                "H" => Gate::H(q(1)?),
                "S" => Gate::S(q(1)?),
                "SDG" => Gate::Sdg(q(1)?),
                "CNOT" => {
                    let (a, b) = (q(1)?, q(2)?);
                    if a == b {
                        return Err(bad(line));
                    }
                    Gate::Cnot(a, b)
                }
                "RZ" => Gate::Rz(q(1)?, parts.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad(line))?),
                _ => return Err(bad(line)),
            };
            c.gates.push(g);
        }
        Ok(c)
    }
}

/// Stage coefficients `c_i` with `U_order(t) = prod_i U_2(c_i t)`.
pub fn suzuki_coefficients(order: u32) -> Result<Vec<f64>, TrotterError> {
    if order < 2 || order % 2 == 1 {
        return Err(TrotterError::OddOrder(order));
    }
    let mut c = vec![1.0];
    let mut k = 1;
    while 2 * k < order {
        let s = 1.0 / (4.0 - 4f64.powf(1.0 / (2 * k + 1) as f64));
        let mut next = Vec::with_capacity(c.len() * 5);
        for w in [s, s, 1.0 - 4.0 * s, s, s] {
            next.extend(c.iter().map(|x| x * w));
        }
        c = next;
        k += 1;
    }
    Ok(c)
}

/// Conjugates a signed Pauli string by a Clifford gate: `U P U^dagger`.
/// The phase is `i^k`.
pub fn conjugate(g: &Gate, k: u8, p: &PauliString) -> (u8, PauliString) {
    let (a, b) = g.qubits();
    let touched: Vec<u32> = std::iter::once(a).chain(b).collect();
    let mut rest = p.clone();
    for &q in &touched {
        rest.set(q, None);
    }
    // images of X_q and Z_q
    let img = |q: u32, x: bool| -> (u8, PauliString) {
        let s = |l: &[(u32, Pauli)]| PauliString::from_letters(l.iter().copied());
        match (*g, x) {
            (Gate::X(_), true) => (0, s(&[(q, Pauli::X)])),
            (Gate::X(_), false) => (2, s(&[(q, Pauli::Z)])),
            (Gate::H(_), true) => (0, s(&[(q, Pauli::Z)])),
            (Gate::H(_), false) => (0, s(&[(q, Pauli::X)])),
            (Gate::S(_), true) => (0, s(&[(q, Pauli::Y)])),
            (Gate::Sdg(_), true) => (2, s(&[(q, Pauli::Y)])),
            (Gate::S(_) | Gate::Sdg(_) | Gate::Rz(..), false) => (0, s(&[(q, Pauli::Z)])),
            (Gate::Rz(..), true) => panic!("Rz is not Clifford"),
            (Gate::Cnot(c, t), true) if q == c => (0, s(&[(c, Pauli::X), (t, Pauli::X)])),
            (Gate::Cnot(..), true) => (0, s(&[(q, Pauli::X)])),
            (Gate::Cnot(c, t), false) if q == t => (0, s(&[(c, Pauli::Z), (t, Pauli::Z)])),
            (Gate::Cnot(..), false) => (0, s(&[(q, Pauli::Z)])),
        }
    };
    let mut acc = (k, rest);
    for &q in &touched {
        let factors: Vec<(u8, PauliString)> = match p.get(q) {
            None => continue,
            Some(Pauli::X) => vec![img(q, true)],
            Some(Pauli::Z) => vec![img(q, false)],
            Some(Pauli::Y) => vec![(1, PauliString::identity()), img(q, true), img(q, false)],
        };
        for (fk, f) in factors {
            let (mk, m) = acc.1.mul(&f);
            acc = ((acc.0 + fk + mk) % 4, m);
        }
    }
    acc
}

/// Conjugates through a whole circuit in time order.
pub fn conjugate_circuit(c: &Circuit, k: u8, p: &PauliString) -> (u8, PauliString) {
    c.gates.iter().fold((k, p.clone()), |(k, p), g| conjugate(g, k, &p))
}

/// `e^{i a Z_S}` via a parity ladder onto the last qubit of `qubits`.
pub fn emit_z_rotation(c: &mut Circuit, qubits: &[u32], a: f64) {
    match qubits {
        [] => c.global_phase += a,
        _ => {
            for w in qubits.windows(2) {
                c.push(Gate::Cnot(w[0], w[1]));
            }
            c.push(Gate::Rz(*qubits.last().unwrap(), -2.0 * a));
            for w in qubits.windows(2).rev() {
                c.push(Gate::Cnot(w[0], w[1]));
            }
        }
    }
}

/// `e^{i a P}` for a single Pauli string: per-qubit basis change, parity
/// ladder, one Rz.
pub fn emit_pauli_rotation(c: &mut Circuit, p: &PauliString, a: f64) {
    let letters: Vec<(u32, Pauli)> = p.iter().collect();
    for &(q, l) in &letters {
        match l {
            Pauli::X => c.push(Gate::H(q)),
            Pauli::Y => {
                c.push(Gate::Sdg(q));
                c.push(Gate::H(q));
            }
            Pauli::Z => {}
        }
    }
    let qs: Vec<u32> = letters.iter().map(|&(q, _)| q).collect();
    emit_z_rotation(c, &qs, a);
    for &(q, l) in letters.iter().rev() {
        match l {
            Pauli::X => c.push(Gate::H(q)),
            Pauli::Y => {
                c.push(Gate::H(q));
                c.push(Gate::S(q));
            }
            Pauli::Z => {}
        }
    }
}

/// Which one-body template.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OneBodyKind {
    /// `X (Z..Z) X + Y (Z..Z) Y`
    Symmetric,
    /// `X (Z..Z) Y - Y (Z..Z) X`, X on the lower qubit in the first word
    Antisymmetric,
}

impl OneBodyKind {
    /// The two Pauli words (lower qubit letter first) and their relative sign.
    pub fn words(self, x: u32, y: u32, zset: &[u32]) -> [(PauliString, f64); 2] {
        let w = |a: Pauli, b: Pauli| {
            PauliString::from_letters(zset.iter().map(|&q| (q, Pauli::Z)).chain([(x, a), (y, b)]))
        };
        match self {
            OneBodyKind::Symmetric => [(w(Pauli::X, Pauli::X), 1.0), (w(Pauli::Y, Pauli::Y), 1.0)],
            OneBodyKind::Antisymmetric => [(w(Pauli::X, Pauli::Y), 1.0), (w(Pauli::Y, Pauli::X), -1.0)],
        }
    }
}

/// `e^{i c (X_x Z_S X_y + Y_x Z_S Y_y)}` (Symmetric) or
/// `e^{i c (X_x Z_S Y_y - Y_x Z_S X_y)}` (Antisymmetric), where `zset` is the
/// Jordan-Wigner string (any qubits other than x, y).
pub fn compile_one_body(n: u32, x: u32, y: u32, zset: &[u32], kind: OneBodyKind, c: f64) -> Result<Circuit, TrotterError> {
    if x == y || zset.contains(&x) || zset.contains(&y) || x.max(y) >= n {
        return Err(TrotterError::MalformedPair(format!("x={x} y={y} string={zset:?}")));
    }
    let mut circ = Circuit::new(n);
    emit_one_body(&mut circ, x, y, zset, kind, c);
    Ok(circ)
}

fn emit_one_body(circ: &mut Circuit, x: u32, y: u32, zset: &[u32], kind: OneBodyKind, c: f64) {
    let anti = kind == OneBodyKind::Antisymmetric;
    circ.push(Gate::Cnot(y, x));
    if anti {
        circ.push(Gate::Sdg(y));
    }
    circ.push(Gate::H(y));
    let ladder: Vec<u32> = zset.iter().copied().chain([y]).collect();
    for w in ladder.windows(2) {
        circ.push(Gate::Cnot(w[0], w[1]));
    }
    let s = 1.0;
    // e^{i c Z_y} then e^{-i c Z_x Z_y}
    circ.push(Gate::Rz(y, -2.0 * c * s));
    circ.push(Gate::Cnot(x, y));
    circ.push(Gate::Rz(y, 2.0 * c * s));
    circ.push(Gate::Cnot(x, y));
    for w in ladder.windows(2).rev() {
        circ.push(Gate::Cnot(w[0], w[1]));
    }
    circ.push(Gate::H(y));
    if anti {
        circ.push(Gate::S(y));
    }
    circ.push(Gate::Cnot(y, x));
}

/// Fig.-3 diagonalizer for odd X/Y words on four qubits. As a matrix it is
/// `G = F S_0 H_0` with F the CNOT fan-out from the first qubit, so that
/// `G^dagger P G` is a signed Z-string for each odd word P.
pub fn ghz_diagonalizer(support: &[u32]) -> Result<Circuit, TrotterError> {
    diagonalizer(support, true)
}

/// Same construction without the phase gate, for even X/Y words.
pub fn even_diagonalizer(support: &[u32]) -> Result<Circuit, TrotterError> {
    diagonalizer(support, false)
}

fn diagonalizer(support: &[u32], odd: bool) -> Result<Circuit, TrotterError> {
    if support.len() != 4 {
        return Err(TrotterError::WrongArity(support.len()));
    }
    let n = support.iter().max().unwrap() + 1;
    let mut c = Circuit::new(n);
    let q0 = support[0];
    c.push(Gate::H(q0));
    if odd {
        c.push(Gate::S(q0));
    }
    for &q in &support[1..] {
        c.push(Gate::Cnot(q0, q));
    }
    Ok(c)
}

/// The odd family, first letter on the first support qubit.
pub const ODD_WORDS: [&str; 8] = ["XXXY", "XXYX", "XYXX", "YXXX", "XYYY", "YXYY", "YYXY", "YYYX"];
pub const EVEN_WORDS: [&str; 8] = ["XXXX", "XXYY", "XYXY", "XYYX", "YXXY", "YXYX", "YYXX", "YYYY"];

/// Diagonal words produced by the rotation cascade, in emission order, as
/// bitmasks over the four support slots (bit i = slot i).
const CASCADE: [u8; 8] = [0b0001, 0b1001, 0b1101, 0b1111, 0b1011, 0b0011, 0b0111, 0b0101];

/// Error-free exponential of a commuting family of words that all flip the
/// same four qubits and share a Z set: `e^{i sum_w a_w P_w}`.
///
/// `terms` holds `(P_w, a_w)`; every word must have X/Y letters exactly on
/// `support` (ascending) and Z exactly on `zset`, and all words must share
/// Y-parity.
fn emit_family(circ: &mut Circuit, support: [u32; 4], zset: &[u32], terms: &[(PauliString, f64)]) {
    let odd = terms.first().map(|(p, _)| y_parity(p, &support)).unwrap_or(true);
    let g = diagonalizer(&support, odd).unwrap();
    let g_dag = g.inverse();
    let mut angles = [0.0f64; 8];
    for (p, a) in terms {
        let (k, d) = conjugate_circuit(&g_dag, 0, p);
        debug_assert!(d.is_diagonal() && k % 2 == 0);
        let sign = if k == 0 { 1.0 } else { -1.0 };
        let mut mask = 0u8;
        for (i, &q) in support.iter().enumerate() {
            if d.get(q).is_some() {
                mask |= 1 << i;
            }
        }
        let slot = CASCADE.iter().position(|&m| m == mask).expect("diagonal image must contain the first slot");
        angles[slot] += sign * a;
    }
    let [q0, q1, q2, q3] = support;
    circ.gates.extend_from_slice(&g_dag.gates);
    // fold the Jordan-Wigner string into the first slot
    for &s in zset {
        circ.push(Gate::Cnot(s, q0));
    }
    let rz = |circ: &mut Circuit, q: u32, a: f64| circ.push(Gate::Rz(q, -2.0 * a));
    rz(circ, q0, angles[0]);
    circ.push(Gate::Cnot(q0, q3));
    rz(circ, q3, angles[1]);
    circ.push(Gate::Cnot(q2, q3));
    rz(circ, q3, angles[2]);
    circ.push(Gate::Cnot(q1, q3));
    rz(circ, q3, angles[3]);
    circ.push(Gate::Cnot(q2, q3));
    rz(circ, q3, angles[4]);
    circ.push(Gate::Cnot(q1, q3));
    circ.push(Gate::Cnot(q0, q3));
    circ.push(Gate::Cnot(q1, q0));
    rz(circ, q0, angles[5]);
    circ.push(Gate::Cnot(q2, q0));
    rz(circ, q0, angles[6]);
    circ.push(Gate::Cnot(q1, q0));
    rz(circ, q0, angles[7]);
    circ.push(Gate::Cnot(q2, q0));
    for &s in zset.iter().rev() {
        circ.push(Gate::Cnot(s, q0));
    }
    circ.gates.extend_from_slice(&g.gates);
}

fn y_parity(p: &PauliString, support: &[u32]) -> bool {
    support.iter().filter(|&&q| p.get(q) == Some(Pauli::Y)).count() % 2 == 1
}

/// `e^{i alpha sum_w coeffs[w] P_w}` over `ODD_WORDS` on a 4-qubit support:
/// 12 single-qubit gates and 16 CNOTs.
pub fn compile_odd_family(coeffs: [f64; 8], support: [u32; 4], alpha: f64) -> Circuit {
    let n = support.iter().max().unwrap() + 1;
    let terms: Vec<(PauliString, f64)> = ODD_WORDS
        .iter()
        .zip(coeffs)
        .map(|(w, c)| (word_on(w, &support, &[]), alpha * c))
        .collect();
    let mut circ = Circuit::new(n);
    emit_family(&mut circ, support, &[], &terms);
    circ
}

/// Builds a Pauli string from a 4-letter word placed on `support`, with Z on
/// `zset`.
pub fn word_on(word: &str, support: &[u32], zset: &[u32]) -> PauliString {
    PauliString::from_letters(
        zset.iter()
            .map(|&q| (q, Pauli::Z))
            .chain(word.chars().zip(support).map(|(ch, &q)| (q, Pauli::from_char(ch).unwrap()))),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grouping {
    /// One exponential per Pauli term.
    PerTerm,
    /// One-body pairs on the Fig.-1/2 templates and 4-flip families on the
    /// diagonalizer cascade.
    Families,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrotterPlan {
    pub order: u32,
    pub dt: f64,
    pub steps: u32,
    pub grouping: Grouping,
    /// Emit both one-body templates for every qubit pair, even where the
    /// coefficient vanishes (the worst-case gate count).
    pub dense_one_body: bool,
}

impl TrotterPlan {
    pub fn new(order: u32, dt: f64, steps: u32) -> Self {
        Self { order, dt, steps, grouping: Grouping::Families, dense_one_body: false }
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// A set of mutually commuting terms exponentiated exactly by one sub-circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Phase(f64),
    Diagonal(PauliString, f64),
    OneBody { x: u32, y: u32, zset: Vec<u32>, kind: OneBodyKind, coeff: f64 },
    Family { support: [u32; 4], zset: Vec<u32>, terms: Vec<(PauliString, f64)> },
    Generic(PauliString, f64),
}

impl Block {
    /// The Hamiltonian piece this block exponentiates.
    pub fn terms(&self) -> PauliSum {
        let r = |c: f64| C64::new(c, 0.0);
        let mut s = PauliSum::zero();
        match self {
            Block::Phase(c) => s.add_term(PauliString::identity(), r(*c)),
            Block::Diagonal(p, c) | Block::Generic(p, c) => s.add_term(p.clone(), r(*c)),
            Block::OneBody { x, y, zset, kind, coeff } => {
                for (p, sign) in kind.words(*x, *y, zset) {
                    s.add_term(p, r(sign * coeff));
                }
            }
            Block::Family { terms, .. } => {
                for (p, c) in terms {
                    s.add_term(p.clone(), r(*c));
                }
            }
        }
        s
    }

    /// Appends `e^{-i H_block tau}`.
    pub fn emit(&self, circ: &mut Circuit, tau: f64) {
        match self {
            Block::Phase(c) => circ.global_phase -= c * tau,
            Block::Diagonal(p, c) => emit_z_rotation(circ, &p.support(), -c * tau),
            Block::Generic(p, c) => emit_pauli_rotation(circ, p, -c * tau),
            Block::OneBody { x, y, zset, kind, coeff } => emit_one_body(circ, *x, *y, zset, *kind, -coeff * tau),
            Block::Family { support, zset, terms } => {
                let scaled: Vec<(PauliString, f64)> = terms.iter().map(|(p, c)| (p.clone(), -c * tau)).collect();
                emit_family(circ, *support, zset, &scaled);
            }
        }
    }
}

/// Real coefficients of a Hermitian Pauli sum.
fn real_terms(h: &PauliSum) -> Result<Vec<(PauliString, f64)>, TrotterError> {
    let mut out = Vec::with_capacity(h.len());
    for (p, c) in h.iter() {
        if c.im.abs() > 1e-10 {
            return Err(TrotterError::NonHermitian(c.im));
        }
        out.push((p.clone(), c.re));
    }
    Ok(out)
}

/// Partitions `h` into exactly-exponentiable blocks in a fixed order:
/// identity phase, diagonal strings, one-body templates (by qubit pair),
/// 4-flip families (by support), then generic strings.
pub fn blocks(h: &PauliSum, grouping: Grouping, dense_one_body: bool) -> Result<Vec<Block>, TrotterError> {
    let terms = real_terms(h)?;
    let mut phase_block = Vec::new();
    let mut diag = Vec::new();
    let mut generic = Vec::new();
    // (x, y, zset) -> XX, YY, XY, YX coefficients
    let mut pairs: BTreeMap<(u32, u32, Vec<u32>), [Option<f64>; 4]> = BTreeMap::new();
    let mut families: BTreeMap<([u32; 4], Vec<u32>, bool), Vec<(PauliString, f64)>> = BTreeMap::new();
    for (p, c) in terms {
        if p.is_identity() {
            phase_block.push(Block::Phase(c));
            continue;
        }
        if p.is_diagonal() {
            diag.push(Block::Diagonal(p, c));
            continue;
        }
        if grouping == Grouping::PerTerm {
            generic.push(Block::Generic(p, c));
            continue;
        }
        let flips = p.flip_qubits();
        let zset: Vec<u32> = p.iter().filter(|&(_, l)| l == Pauli::Z).map(|(q, _)| q).collect();
        match flips.len() {
            2 => {
                let (x, y) = (flips[0], flips[1]);
                let slot = match (p.get(x).unwrap(), p.get(y).unwrap()) {
                    (Pauli::X, Pauli::X) => 0,
                    (Pauli::Y, Pauli::Y) => 1,
                    (Pauli::X, Pauli::Y) => 2,
                    _ => 3,
                };
                pairs.entry((x, y, zset)).or_insert([None; 4])[slot] = Some(c);
            }
            4 => {
                let support = [flips[0], flips[1], flips[2], flips[3]];
                let odd = y_parity(&p, &support);
                families.entry((support, zset, odd)).or_default().push((p, c));
            }
            _ => generic.push(Block::Generic(p, c)),
        }
    }
    if dense_one_body {
        let n = h.width();
        for x in 0..n {
            for y in x + 1..n {
                pairs.entry((x, y, (x + 1..y).collect())).or_insert([None; 4]);
            }
        }
    }
    let mut one_body = Vec::new();
    for ((x, y, zset), [xx, yy, xy, yx]) in pairs {
        let words = |kind| {
            let (a, b) = match kind {
                OneBodyKind::Symmetric => (xx, yy),
                OneBodyKind::Antisymmetric => (xy, yx.map(|v| -v)),
            };
            (a, b, kind)
        };
        for (a, b, kind) in [words(OneBodyKind::Symmetric), words(OneBodyKind::Antisymmetric)] {
            let [pa, pb] = kind.words(x, y, &zset);
            match (a, b) {
                (Some(a), Some(b)) if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300) => {
                    one_body.push(Block::OneBody { x, y, zset: zset.clone(), kind, coeff: 0.5 * (a + b) })
                }
                (None, None) if dense_one_body => {
                    one_body.push(Block::OneBody { x, y, zset: zset.clone(), kind, coeff: 0.0 })
                }
                _ => {
                    // unmatched halves fall back to single-string rotations
                    if let Some(a) = a {
                        generic.push(Block::Generic(pa.0.clone(), a * pa.1));
                    }
                    if let Some(b) = b {
                        generic.push(Block::Generic(pb.0.clone(), b * pb.1));
                    }
                }
            }
        }
    }
    let mut out = phase_block;
    out.extend(diag);
    out.extend(one_body);
    for ((support, zset, _), terms) in families {
        out.push(Block::Family { support, zset, terms });
    }
    generic.sort_by(|a, b| match (a, b) {
        (Block::Generic(p, _), Block::Generic(q, _)) => p.cmp(q),
        _ => std::cmp::Ordering::Equal,
    });
    out.extend(generic);
    Ok(out)
}

/// Compiles `steps` repetitions of `U_order(dt)` built from symmetric
/// second-order sweeps over the blocks of `h`.
pub fn compile_trotter(h: &PauliSum, plan: &TrotterPlan) -> Result<Circuit, TrotterError> {
    let coeffs = suzuki_coefficients(plan.order)?;
    let bl = blocks(h, plan.grouping, plan.dense_one_body)?;
    let mut circ = Circuit::new(h.width());
    for _ in 0..plan.steps {
        for &c in &coeffs {
            let tau = 0.5 * c * plan.dt;
            for b in &bl {
                b.emit(&mut circ, tau);
            }
            for b in bl.iter().rev() {
                b.emit(&mut circ, tau);
            }
        }
    }
    Ok(circ)
}

/// Gate counts of one first-order product sweep `prod_j e^{-i H_j dt}`, the
/// unit the per-step count formulas refer to.
pub fn sweep_counts(h: &PauliSum, grouping: Grouping, dense_one_body: bool) -> Result<GateCounts, TrotterError> {
    let bl = blocks(h, grouping, dense_one_body)?;
    let mut circ = Circuit::new(h.width());
    for b in &bl {
        b.emit(&mut circ, 1.0);
    }
    Ok(circ.counts())
}

/// Right-hand side of the second-order error bound for one step of length
/// `t`, with the blocks as the Hamiltonian terms:
/// `t^3/12 sum_g ||[H,[H,H_g]]|| + t^3/24 sum_g ||[H_g,[H_g,H]]||`.
pub fn second_order_bound(bl: &[Block], t: f64) -> Result<f64, crate::pauli::PauliError> {
    use crate::pauli::{commutator, spectral_norm, NormMethod};
    let parts: Vec<PauliSum> = bl.iter().filter(|b| !matches!(b, Block::Phase(_))).map(Block::terms).collect();
    let total = parts.iter().fold(PauliSum::zero(), |acc, p| acc.add(p));
    let mut first = 0.0;
    let mut second = 0.0;
    for hg in &parts {
        first += spectral_norm(&commutator(&total, &commutator(&total, hg)), NormMethod::Dense)?;
        second += spectral_norm(&commutator(hg, &commutator(hg, &total)), NormMethod::Dense)?;
    }
    Ok(t.powi(3) / 12.0 * first + t.powi(3) / 24.0 * second)
}
