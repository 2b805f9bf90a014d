//! MRCISD determinant counting and Givens-rotation preparation of Slater
//! determinants.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64 as C64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::trotter::{compile_one_body, Circuit, Gate, OneBodyKind};

pub const ISOMETRY_TOL: f64 = 1e-8;
const ZERO_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatePrepError {
    #[error("rows of Q are not orthonormal (deviation {0:.3e})")]
    NonIsometry(f64),
    #[error("invalid active space: {0}")]
    InvalidSpace(String),
    #[error("malformed Slater file: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSpaceSpec {
    pub n_ras1: u32,
    pub n_cas: u32,
    pub n_ras3: u32,
    pub n_e: u32,
    pub m_h: u32,
    pub m_e: u32,
}

impl ActiveSpaceSpec {
    pub fn mrcisd(n_ras1: u32, n_cas: u32, n_ras3: u32, n_e: u32) -> Self {
        ActiveSpaceSpec { n_ras1, n_cas, n_ras3, n_e, m_h: 2, m_e: 2 }
    }

    pub fn validate(&self) -> Result<(), StatePrepError> {
        if self.n_e > self.n_ras1 + self.n_cas + self.n_ras3 {
            return Err(StatePrepError::InvalidSpace(format!("{} electrons in {} orbitals", self.n_e, self.n_ras1 + self.n_cas + self.n_ras3)));
        }
        Ok(())
    }
}

/// C(n, k), zero outside 0 <= k <= n.
pub fn binomial(n: u32, k: i64) -> BigUint {
    if k < 0 || k > n as i64 {
        return BigUint::zero();
    }
    let k = (k as u32).min(n - k as u32);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// sum_{i_h <= m_h} sum_{i_e <= m_e} C(N1, i_h) C(Ncas, n_e - N1 + i_h - i_e) C(N3, i_e)
pub fn mrci_determinant_count(s: &ActiveSpaceSpec) -> Result<BigUint, StatePrepError> {
    s.validate()?;
    let mut total = BigUint::zero();
    for ih in 0..=s.m_h {
        for ie in 0..=s.m_e {
            let k = s.n_e as i64 - s.n_ras1 as i64 + ih as i64 - ie as i64;
            total += binomial(s.n_ras1, ih as i64) * binomial(s.n_cas, k) * binomial(s.n_ras3, ie as i64);
        }
    }
    Ok(total)
}

/// N_f x n_s orbital matrix; row i is the orbital d_i^dagger = sum_j Q_ij c_j^dagger.
#[derive(Clone, Debug, PartialEq)]
pub struct SlaterSpec {
    pub q: DMatrix<C64>,
}

impl SlaterSpec {
    pub fn new(q: DMatrix<C64>) -> Result<Self, StatePrepError> {
        let s = SlaterSpec { q };
        let dev = s.isometry_deviation();
        if !(dev <= ISOMETRY_TOL) || s.q.nrows() > s.q.ncols() {
            return Err(StatePrepError::NonIsometry(dev));
        }
        Ok(s)
    }

    pub fn n_f(&self) -> usize {
        self.q.nrows()
    }

    pub fn n_s(&self) -> usize {
        self.q.ncols()
    }

    /// max |Q Q^dagger - 1|
    pub fn isometry_deviation(&self) -> f64 {
        let g = &self.q * self.q.adjoint();
        let mut dev = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g[(i, j)] - C64::new(want, 0.0)).norm());
            }
        }
        dev
    }

    /// Reads `nf,ns` (optionally preceded by that literal header line),
    /// then N_f * n_s lines of `re,im` in row-major order.
    pub fn from_csv(text: &str) -> Result<Self, StatePrepError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut first = lines.next().ok_or_else(|| StatePrepError::Parse("empty file".into()))?;
        if first.eq_ignore_ascii_case("nf,ns") {
            first = lines.next().ok_or_else(|| StatePrepError::Parse("missing dimensions".into()))?;
        }
        let dims = parse_pair::<usize>(first)?;
        let (nf, ns) = dims;
        let mut vals = Vec::with_capacity(nf * ns);
        for l in lines {
            let (re, im) = parse_pair::<f64>(l)?;
            vals.push(C64::new(re, im));
        }
        if vals.len() != nf * ns {
            return Err(StatePrepError::Parse(format!("expected {} entries, found {}", nf * ns, vals.len())));
        }
        SlaterSpec::new(DMatrix::from_row_slice(nf, ns, &vals))
    }
}

fn parse_pair<T: std::str::FromStr>(line: &str) -> Result<(T, T), StatePrepError> {
    let mut it = line.split(',').map(str::trim);
    let bad = || StatePrepError::Parse(format!("expected two comma-separated values: {line:?}"));
    let a = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let b = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if it.next().is_some() {
        return Err(bad());
    }
    Ok((a, b))
}

/// Mode rotation [[cos t, -e^{i phi} sin t], [sin t, e^{i phi} cos t]] on (p, q).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GivensRotation {
    pub p: u32,
    pub q: u32,
    pub theta: f64,
    pub phi: f64,
}

impl GivensRotation {
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let e = C64::from_polar(1.0, self.phi);
        [[C64::new(c, 0.0), -e * s], [C64::new(s, 0.0), e * c]]
    }
}

/// Rotations in application order, followed by a diagonal phase layer
/// e^{i phases[k] n_k}. The phase layer is needed because the rotation form
/// puts its phase on the second mode only, so e.g. (1, i)/sqrt 2 on two
/// modes is not reachable from |10> by rotations alone.
#[derive(Clone, Debug, PartialEq)]
pub struct GivensDecomposition {
    pub n_s: usize,
    pub n_f: usize,
    pub rotations: Vec<GivensRotation>,
    pub phases: Vec<f64>,
}

impl GivensDecomposition {
    /// (n_s - N_f) N_f
    pub fn bound(&self) -> usize {
        (self.n_s - self.n_f) * self.n_f
    }

    /// Single-particle unitary T with T a_j^dagger T^dagger = sum_k T_kj a_k^dagger.
    pub fn unitary(&self) -> DMatrix<C64> {
        let n = self.n_s;
        let mut t = DMatrix::<C64>::identity(n, n);
        for r in &self.rotations {
            let g = r.matrix();
            let (p, q) = (r.p as usize, r.q as usize);
            for col in 0..n {
                let (a, b) = (t[(p, col)], t[(q, col)]);
                t[(p, col)] = g[0][0] * a + g[0][1] * b;
                t[(q, col)] = g[1][0] * a + g[1][1] * b;
            }
        }
        for (k, ph) in self.phases.iter().enumerate() {
            let e = C64::from_polar(1.0, *ph);
            for col in 0..n {
                t[(k, col)] *= e;
            }
        }
        t
    }
}

fn rotate_cols(x: &mut DMatrix<C64>, c: usize, r: usize, a: C64, b: C64) {
    // [col_c, col_r] <- [col_c, col_r] [[a, -conj b], [b, conj a]]
    for i in 0..x.nrows() {
        let (u, v) = (x[(i, c)], x[(i, r)]);
        x[(i, c)] = a * u + b * v;
        x[(i, r)] = -b.conj() * u + a.conj() * v;
    }
}

/// Givens decomposition of the determinant of `spec` with at most
/// (n_s - N_f) N_f rotations, reference state = modes 0..N_f occupied.
///
/// Works on X = Q^T: orbital mixing (free up to a global phase) first makes
/// the bottom N_f x N_f block upper triangular, then each column is zeroed
/// bottom-up below the diagonal with adjacent-row rotations.
pub fn givens_decompose(spec: &SlaterSpec) -> Result<GivensDecomposition, StatePrepError> {
    let dev = spec.isometry_deviation();
    if !(dev <= ISOMETRY_TOL) {
        return Err(StatePrepError::NonIsometry(dev));
    }
    let (nf, ns) = (spec.n_f(), spec.n_s());
    let mut x = spec.q.transpose();
    let off = ns - nf;
    for r in (1..nf).rev() {
        for c in 0..r {
            let (u, v) = (x[(off + r, c)], x[(off + r, r)]);
            let rho = (u.norm_sqr() + v.norm_sqr()).sqrt();
            if u.norm() < ZERO_TOL || rho == 0.0 {
                continue;
            }
            rotate_cols(&mut x, c, r, v / rho, -u / rho);
        }
    }

    // reduction steps: phase row q by psi, then apply R(theta)^T on (p, q)
    let mut steps: Vec<(usize, usize, f64, f64)> = Vec::new();
    for c in 0..nf {
        for j in ((c + 1)..=(off + c)).rev() {
            let (p, q) = (j - 1, j);
            let (xp, xq) = (x[(p, c)], x[(q, c)]);
            if xq.norm() < ZERO_TOL {
                continue;
            }
            let psi = if xp.norm() < ZERO_TOL { 0.0 } else { xp.arg() } - xq.arg();
            let theta = xq.norm().atan2(xp.norm());
            let e = C64::from_polar(1.0, psi);
            let (s, co) = theta.sin_cos();
            for col in 0..nf {
                let a = x[(p, col)];
                let b = x[(q, col)] * e;
                x[(p, col)] = a * co + b * s;
                x[(q, col)] = -a * s + b * co;
            }
            steps.push((p, q, theta, psi));
        }
    }

    // T = Psi_1^dag R_1 Psi_2^dag R_2 ... ; push the phases left into each
    // rotation's phi, leaving a diagonal layer applied last
    let mut d = vec![0.0f64; ns];
    let mut rotations = Vec::with_capacity(steps.len());
    for &(p, q, theta, psi) in steps.iter().rev() {
        // R d = d' G(theta, d_q - d_p), d' equal to d_p on both modes
        let phi = d[q] - d[p];
        d[q] = d[p];
        rotations.push(GivensRotation { p: p as u32, q: q as u32, theta, phi: wrap(phi) });
        d[q] -= psi;
    }
    Ok(GivensDecomposition { n_s: ns, n_f: nf, rotations, phases: d.into_iter().map(wrap).collect() })
}

fn wrap(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * std::f64::consts::PI);
    if t > std::f64::consts::PI {
        t - 2.0 * std::f64::consts::PI
    } else {
        t
    }
}

/// Circuit on `n` qubits (mode k = qubit k) realizing the rotations and the
/// phase layer. Each rotation is Rz(phi) on q followed by the antisymmetric
/// one-body template e^{theta (a_q^+ a_p - a_p^+ a_q)}.
pub fn compile_givens(dec: &GivensDecomposition, n: u32) -> Circuit {
    let mut circ = Circuit::new(n);
    let push_phase = |circ: &mut Circuit, q: u32, phi: f64| {
        if phi.abs() > ZERO_TOL {
            // e^{i phi n} = e^{i phi / 2} Rz(phi)
            circ.push(Gate::Rz(q, phi));
            circ.global_phase += phi / 2.0;
        }
    };
    for r in &dec.rotations {
        push_phase(&mut circ, r.q, r.phi);
        if r.theta.abs() <= ZERO_TOL {
            continue;
        }
        let (lo, hi) = (r.p.min(r.q), r.p.max(r.q));
        // i(a_lo^+ a_hi - h.c.) = -(1/2)(X Z.. Y - Y Z.. X)
        let sign = if r.p < r.q { -1.0 } else { 1.0 };
        let zset: Vec<u32> = (lo + 1..hi).collect();
        let t = compile_one_body(n, lo, hi, &zset, OneBodyKind::Antisymmetric, sign * r.theta / 2.0)
            .expect("rotation modes are distinct and inside the register");
        circ.append(&t);
    }
    for (k, &ph) in dec.phases.iter().enumerate() {
        push_phase(&mut circ, k as u32, ph);
    }
    circ
}

/// How the positron block of a four-component register is filled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PositronFill {
    #[default]
    Unoccupied,
    Occupied,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatePrepReport {
    pub n_s: usize,
    pub n_f: usize,
    pub rotations: usize,
    pub bound: usize,
    pub circuit: Circuit,
}

/// Full preparation from |0>: X on the N_f reference modes, Givens circuit on
/// the electron register (qubits 0..n_s), and the positron block
/// (qubits n_s..n_s + n_positron) filled per `fill`.
pub fn slater_state_circuit(spec: &SlaterSpec, n_positron: usize, fill: PositronFill) -> Result<StatePrepReport, StatePrepError> {
    let dec = givens_decompose(spec)?;
    assert!(dec.rotations.len() <= dec.bound(), "Givens count above (n_s - N_f) N_f");
    let n = (spec.n_s() + n_positron) as u32;
    let mut circ = Circuit::new(n);
    for k in 0..spec.n_f() {
        circ.push(Gate::X(k as u32));
    }
    circ.append(&compile_givens(&dec, n));
    if fill == PositronFill::Occupied {
        for k in spec.n_s()..n as usize {
            circ.push(Gate::X(k as u32));
        }
    }
    Ok(StatePrepReport { n_s: spec.n_s(), n_f: spec.n_f(), rotations: dec.rotations.len(), bound: dec.bound(), circuit: circ })
}
