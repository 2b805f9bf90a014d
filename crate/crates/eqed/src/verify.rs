//! Dense oracles for small systems: Pauli sums and circuits as matrices,
//! exact evolution, Trotter error and emulated phase estimation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use thiserror::Error;

use crate::linalg::{dense_spectral_norm, hermitian_eigen, is_hermitian};
use crate::pauli::{PauliString, PauliSum, PauliTerm};
use crate::trotter::{compile_trotter, Circuit, Gate, TrotterError, TrotterPlan};

pub const MATRIX_MAX_QUBITS: u32 = 14;
pub const CIRCUIT_MAX_QUBITS: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("{0} qubits exceeds the dense limit of {1}")]
    TooLarge(u32, u32),
    #[error("operator is not Hermitian")]
    NonHermitian,
    #[error("t (||H|| + eps) = {0} is not below pi; eigenphases would wrap")]
    PhaseWrap(f64),
    #[error(transparent)]
    Trotter(#[from] TrotterError),
}

/// Dense matrix of `s` on `n` qubits; qubit q is bit q of the basis index.
pub fn pauli_to_dense(s: &PauliSum, n: u32) -> Result<DMatrix<C64>, VerifyError> {
    if n > MATRIX_MAX_QUBITS {
        return Err(VerifyError::TooLarge(n, MATRIX_MAX_QUBITS));
    }
    if s.width() > n {
        return Err(VerifyError::TooLarge(s.width(), n));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for (p, &c) in s.iter() {
        let (x, z) = p.masks64().expect("width checked");
        let base = c * crate::pauli::phase(((x & z).count_ones() % 4) as u8);
        for b in 0..dim as u64 {
            let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[((b ^ x) as usize, b as usize)] += base * sign;
        }
    }
    Ok(m)
}

fn gate_matrix(g: &Gate) -> [[C64; 2]; 2] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match *g {
        Gate::X(_) => [[o, l], [l, o]],
        Gate::H(_) => [[l * r, l * r], [l * r, -l * r]],
        Gate::S(_) => [[l, o], [o, C64::new(0.0, 1.0)]],
        Gate::Sdg(_) => [[l, o], [o, C64::new(0.0, -1.0)]],
        Gate::Rz(_, a) => [[C64::from_polar(1.0, -a / 2.0), o], [o, C64::from_polar(1.0, a / 2.0)]],
        Gate::Cnot(..) => unreachable!(),
    }
}

/// Applies one gate to every column of `m` (rows index the basis).
fn apply_gate_rows(m: &mut DMatrix<C64>, g: &Gate) {
    let dim = m.nrows();
    let ncols = m.ncols();
    match *g {
        Gate::Cnot(c, t) => {
            let (cb, tb) = (1usize << c, 1usize << t);
            for r in 0..dim {
                if r & cb != 0 && r & tb == 0 {
                    m.swap_rows(r, r | tb);
                }
            }
        }
        _ => {
            let (q, _) = g.qubits();
            let u = gate_matrix(g);
            let qb = 1usize << q;
            for r0 in 0..dim {
                if r0 & qb != 0 {
                    continue;
                }
                let r1 = r0 | qb;
                for col in 0..ncols {
                    let (a, b) = (m[(r0, col)], m[(r1, col)]);
                    m[(r0, col)] = u[0][0] * a + u[0][1] * b;
                    m[(r1, col)] = u[1][0] * a + u[1][1] * b;
                }
            }
        }
    }
}

/// Exact unitary of a circuit, including its global phase.
pub fn circuit_to_unitary(c: &Circuit) -> Result<DMatrix<C64>, VerifyError> {
    if c.num_qubits > CIRCUIT_MAX_QUBITS {
        return Err(VerifyError::TooLarge(c.num_qubits, CIRCUIT_MAX_QUBITS));
    }
    let dim = 1usize << c.num_qubits;
    let mut m = DMatrix::identity(dim, dim);
    for g in &c.gates {
        apply_gate_rows(&mut m, g);
    }
    Ok(m * C64::from_polar(1.0, c.global_phase))
}

/// Runs a circuit on a statevector.
pub fn apply_circuit(c: &Circuit, state: &mut DVector<C64>) {
    let mut m = DMatrix::from_column_slice(state.len(), 1, state.as_slice());
    for g in &c.gates {
        apply_gate_rows(&mut m, g);
    }
    let ph = C64::from_polar(1.0, c.global_phase);
    for (s, v) in state.iter_mut().zip(m.iter()) {
        *s = v * ph;
    }
}

/// `e^{-i h t}` by eigendecomposition.
pub fn exact_evolution(h: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>, VerifyError> {
    if !is_hermitian(h, 1e-10) {
        return Err(VerifyError::NonHermitian);
    }
    let (vals, vecs) = hermitian_eigen(h);
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&e| C64::from_polar(1.0, -e * t))));
    Ok(&vecs * phases * vecs.adjoint())
}

/// `||U_circuit - e^{-i H T}||` for the compiled plan, T = dt * steps.
pub fn measure_trotter_error(h: &PauliSum, plan: &TrotterPlan) -> Result<f64, VerifyError> {
    let n = h.width().max(1);
    if n > CIRCUIT_MAX_QUBITS {
        return Err(VerifyError::TooLarge(n, CIRCUIT_MAX_QUBITS));
    }
    let mut circ = compile_trotter(h, plan)?;
    circ.num_qubits = n;
    let u = circuit_to_unitary(&circ)?;
    let exact = exact_evolution(&pauli_to_dense(h, n)?, plan.total_time())?;
    Ok(dense_spectral_norm(&(u - exact)))
}

/// Diagonalization table of the GHZ circuit G: (word, image, sign) with
/// G^dagger word G = sign * image.
pub const APPENDIX_TABLE: [(&str, &str, f64); 8] = [
    ("XYYY", "ZZZZ", -1.0),
    ("YYYX", "ZZZI", -1.0),
    ("YYXY", "ZZIZ", -1.0),
    ("YXYY", "ZIZZ", -1.0),
    ("YXXX", "ZIII", 1.0),
    ("XXXY", "ZIIZ", 1.0),
    ("XXYX", "ZIZI", 1.0),
    ("XYXX", "ZZII", 1.0),
];

/// Max entrywise deviation of G^dagger P G from the tabulated image, per row,
/// as 16 x 16 matrices.
pub fn appendix_table_check() -> Result<Vec<(&'static str, &'static str, f64, f64)>, VerifyError> {
    let g = circuit_to_unitary(&crate::trotter::ghz_diagonalizer(&[0, 1, 2, 3])?)?;
    let dense = |w: &str, c: f64| {
        let p = PauliString::from_word(w).expect("table words are valid");
        pauli_to_dense(&PauliSum::from_terms([PauliTerm::new(C64::new(c, 0.0), p)]), 4)
    };
    APPENDIX_TABLE
        .iter()
        .map(|&(w, d, s)| {
            let lhs = g.adjoint() * dense(w, 1.0)? * &g;
            let err = (lhs - dense(d, s)?).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            Ok((w, d, s, err))
        })
        .collect()
}

/// Probability of each `n`-bit outcome of textbook phase estimation for an
/// eigenphase `phi` in turns: `|2^-n sum_j e^{2 pi i j (phi - m/2^n)}|^2`.
pub fn qpe_outcome_distribution(phi: f64, n: u32) -> Vec<f64> {
    let size = 1usize << n;
    let nn = size as f64;
    (0..size)
        .map(|m| {
            let d = phi - m as f64 / nn;
            let s = (std::f64::consts::PI * d).sin();
            if s.abs() < 1e-15 {
                1.0
            } else {
                let num = (std::f64::consts::PI * nn * d).sin();
                (num * num) / (nn * nn * s * s)
            }
        })
        .collect()
}

/// One emulated phase-estimation run of `U = e^{-i h t}` on `state`.
///
/// Samples an eigenvector with the Born probabilities of `state`, then a
/// phase-register outcome from the exact textbook distribution, and maps it
/// back to an energy in `(-pi/t, pi/t]`. Requires `t ||h|| < pi`.
pub fn phase_estimate_emulation<R: Rng>(
    h: &DMatrix<C64>,
    state: &DVector<C64>,
    t: f64,
    n_ancilla: u32,
    rng: &mut R,
) -> Result<f64, VerifyError> {
    let qpe = PhaseEstimator::new(h, t, n_ancilla)?;
    Ok(qpe.sample(state, rng))
}

/// Precomputed spectrum for repeated phase-estimation sampling.
pub struct PhaseEstimator {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
    pub t: f64,
    pub n_ancilla: u32,
}

impl PhaseEstimator {
    pub fn new(h: &DMatrix<C64>, t: f64, n_ancilla: u32) -> Result<Self, VerifyError> {
        if !is_hermitian(h, 1e-10) {
            return Err(VerifyError::NonHermitian);
        }
        let (vals, vecs) = hermitian_eigen(h);
        let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if t * norm >= std::f64::consts::PI {
            return Err(VerifyError::PhaseWrap(t * norm));
        }
        Ok(Self { eigenvalues: vals, eigenvectors: vecs, t, n_ancilla })
    }

    /// Eigenphase of `e^{-i E t}` in turns, in [0, 1).
    pub fn phase_of(&self, e: f64) -> f64 {
        (-e * self.t / std::f64::consts::TAU).rem_euclid(1.0)
    }

    /// Energy read off outcome `m`.
    pub fn energy_of(&self, m: usize) -> f64 {
        let mut theta = std::f64::consts::TAU * m as f64 / (1usize << self.n_ancilla) as f64;
        if theta > std::f64::consts::PI {
            theta -= std::f64::consts::TAU;
        }
        -theta / self.t
    }

    pub fn sample<R: Rng>(&self, state: &DVector<C64>, rng: &mut R) -> f64 {
        let weights: Vec<f64> = (0..self.eigenvalues.len())
            .map(|k| self.eigenvectors.column(k).dotc(state).norm_sqr())
            .collect();
        let k = pick(&weights, rng);
        self.sample_eigen(k, rng)
    }

    /// Outcome energy for the eigenstate with index `k`.
    pub fn sample_eigen<R: Rng>(&self, k: usize, rng: &mut R) -> f64 {
        let dist = qpe_outcome_distribution(self.phase_of(self.eigenvalues[k]), self.n_ancilla);
        self.energy_of(pick(&dist, rng))
    }
}

fn pick<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliString, PauliTerm};

    #[test]
    fn small_dense_examples() {
        let z = PauliSum::from_terms([PauliTerm::letter(1.0, 0, Pauli::Z)]);
        let m = pauli_to_dense(&z, 1).unwrap();
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(m[(1, 1)], C64::new(-1.0, 0.0));
        let xx = PauliSum::from_terms([PauliTerm::new(C64::new(1.0, 0.0), PauliString::from_word("XX").unwrap())]);
        let m = pauli_to_dense(&xx, 2).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r + c == 3 { 1.0 } else { 0.0 };
                assert_eq!(m[(r, c)], C64::new(want, 0.0));
            }
        }
        let y = PauliSum::from_terms([PauliTerm::letter(1.0, 0, Pauli::Y)]);
        let m = pauli_to_dense(&y, 1).unwrap();
        assert_eq!(m[(1, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn evolution_examples() {
        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]));
        let u = exact_evolution(&z, std::f64::consts::PI).unwrap();
        assert!((u + DMatrix::identity(2, 2)).norm() < 1e-12);
        let zero = DMatrix::<C64>::zeros(4, 4);
        assert!((exact_evolution(&zero, 3.0).unwrap() - DMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn empty_circuit_is_identity_and_cnot_permutes() {
        let c = Circuit::new(2);
        assert_eq!(circuit_to_unitary(&c).unwrap(), DMatrix::identity(4, 4));
        let mut c = Circuit::new(2);
        c.push(Gate::Cnot(0, 1));
        let u = circuit_to_unitary(&c).unwrap();
        // |01> (bit 0 set) -> |11>
        assert_eq!(u[(3, 1)], C64::new(1.0, 0.0));
        assert_eq!(u[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn qpe_distribution_normalized() {
        let d = qpe_outcome_distribution(0.3712, 6);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = qpe_outcome_distribution(0.25, 4);
        assert!((d[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_wrap_rejected() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(-1.0, 0.0)]));
        assert!(matches!(PhaseEstimator::new(&h, 2.0, 4), Err(VerifyError::PhaseWrap(_))));
    }
}
