//! Closed-form cost model: QPE sizing, Trotter rotation counts, T counts,
//! qubitization normalizations and planewave cutoffs for heavy atoms.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use thiserror::Error;

use crate::fermion::FermionPolynomial;

/// Speed of light in Hartree atomic units.
pub const C_AU: f64 = 137.035_999_084;
pub const HARTREE_EV: f64 = 27.211_386_245_988;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResourceError {
    #[error("Z alpha = {0} leaves no bound Dirac state for this j")]
    SupercriticalZ(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpePlan {
    pub epsilon: f64,
    pub n_ancilla: u32,
    pub t: f64,
    pub eps_ts: f64,
    pub eps_syn: f64,
    /// pi / (t 2^n), at most `epsilon`.
    pub achieved_epsilon: f64,
}

impl QpePlan {
    /// RMS energy error sqrt((pi/2^{n+1})^2 + (eps_ts + eps_syn)^2) / t.
    pub fn rms_error(&self) -> f64 {
        let a = PI / 2f64.powi(self.n_ancilla as i32 + 1);
        (a * a + (self.eps_ts + self.eps_syn).powi(2)).sqrt() / self.t
    }
}

/// eps_TS = eps_syn = pi sqrt(3) / 2^{n+2}.
pub fn error_share(n: u32) -> f64 {
    PI * 3f64.sqrt() / 2f64.powi(n as i32 + 2)
}

/// Ancilla count and step size for commutator sum `chi_h` and target error.
pub fn qpe_plan(chi_h: f64, epsilon: f64) -> Result<QpePlan, ResourceError> {
    if !(chi_h > 0.0 && epsilon > 0.0) {
        return Err(ResourceError::Invalid(format!("chi_H = {chi_h}, epsilon = {epsilon} must be positive")));
    }
    let arg = (PI * PI * chi_h / (2.0 * 3f64.sqrt() * epsilon.powi(3))).ln() / (2.0 * 2f64.ln());
    let n = arg.ceil().max(1.0) as u32;
    let t = (PI * 3f64.sqrt() / (chi_h * 2f64.powi(n as i32 - 1))).cbrt();
    let share = error_share(n);
    Ok(QpePlan { epsilon, n_ancilla: n, t, eps_ts: share, eps_syn: share, achieved_epsilon: PI / (t * 2f64.powi(n as i32)) })
}

/// chi_H = A n_s^b.
pub fn chi_h(a: f64, b: f64, n_s: f64) -> f64 {
    a * n_s.powf(b)
}

/// (N_terms, N_Rot) = (2 n_s + 9 n_s^3, 8 * 2 * N_terms).
pub fn trotter_step_counts(n_s: u64) -> (u64, u64) {
    let terms = 2 * n_s + 9 * n_s.pow(3);
    (terms, 16 * terms)
}

/// (20 n_s (4 n_s - 1), (8/3) n_s (16 n_s^2 - 1)) for the lattice free
/// Hamiltonian. The second is integral: 3 divides n_s (4 n_s - 1)(4 n_s + 1).
pub fn lattice_free_counts(n_s: u64) -> (u64, u64) {
    if n_s == 0 {
        return (0, 0);
    }
    let rot = 20 * n_s * (4 * n_s - 1);
    let num = 8 * n_s * (16 * n_s * n_s - 1);
    debug_assert_eq!(num % 3, 0);
    (rot, num / 3)
}

/// N_T = ceil(1.15 2^n N_Rot log2(N_Rot / (pi sqrt 3 / 2^{n+2}))), floored at 0.
pub fn t_count(n_rot_per_step: u64, n_ancilla: u32) -> u128 {
    if n_rot_per_step == 0 {
        return 0;
    }
    let r = n_rot_per_step as f64;
    let v = 1.15 * 2f64.powi(n_ancilla as i32) * r * (r / error_share(n_ancilla)).log2();
    v.ceil().max(0.0) as u128
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResourceReport {
    pub n_s: u64,
    pub epsilon: f64,
    pub chi_h: f64,
    pub plan: QpePlan,
    pub n_terms: u64,
    pub n_rot_per_step: u64,
    pub n_rot_total: u128,
    /// Only known when a compiled circuit is supplied.
    pub n_cnot_per_step: Option<u64>,
    pub n_t_gates: u128,
    pub lambda_pos: f64,
    pub lambda_mom: f64,
    pub qubits: u64,
}

/// Momentum-basis QPE report with chi_H = a n_s^b. The lambda fields use the
/// closed forms with m = e = L = 1 and no external potential.
pub fn qpe_report(n_s: u64, epsilon: f64, a: f64, b: f64) -> Result<ResourceReport, ResourceError> {
    let chi = chi_h(a, b, n_s as f64);
    let plan = qpe_plan(chi, epsilon)?;
    let (n_terms, n_rot) = trotter_step_counts(n_s);
    let lp = LambdaParams { n_s: n_s as f64, m: 1.0, e: 1.0, l: 1.0, a_max: 0.0 };
    Ok(ResourceReport {
        n_s,
        epsilon,
        chi_h: chi,
        n_terms,
        n_rot_per_step: n_rot,
        n_rot_total: (n_rot as u128) << plan.n_ancilla,
        n_cnot_per_step: None,
        n_t_gates: t_count(n_rot, plan.n_ancilla),
        lambda_pos: lambda_pos(&lp).total,
        lambda_mom: lambda_mom(&lp),
        qubits: 4 * n_s,
        plan,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n_s: u64,
    pub epsilon: f64,
    pub n_ancilla: u32,
    pub t: f64,
    pub n_rot: u64,
    pub n_t: u128,
}

pub fn sweep(ns: &[u64], eps: &[f64], a: f64, b: f64) -> Result<Vec<SweepRow>, ResourceError> {
    let mut rows = Vec::with_capacity(ns.len() * eps.len());
    for &n in ns {
        for &e in eps {
            let r = qpe_report(n, e, a, b)?;
            rows.push(SweepRow { n_s: n, epsilon: e, n_ancilla: r.plan.n_ancilla, t: r.plan.t, n_rot: r.n_rot_per_step, n_t: r.n_t_gates });
        }
    }
    Ok(rows)
}

/// Inputs to the closed-form lambda envelopes (all big-O constants set to 1).
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaParams {
    pub n_s: f64,
    pub m: f64,
    pub e: f64,
    pub l: f64,
    /// max_x |A^ex(x)|
    pub a_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPos {
    pub mass: f64,
    pub ext: f64,
    pub slac: f64,
    pub int: f64,
    pub total: f64,
}

/// lambda_m = m n_s, lambda_ext = n_s e |A|, lambda_SLAC = n_s^{5/3} / L,
/// lambda_int = n_s^2 e^2 / L.
pub fn lambda_pos(p: &LambdaParams) -> LambdaPos {
    let mass = p.m * p.n_s;
    let ext = p.n_s * p.e * p.a_max;
    let slac = p.n_s.powf(5.0 / 3.0) / p.l;
    let int = p.n_s * p.n_s * p.e * p.e / p.l;
    LambdaPos { mass, ext, slac, int, total: mass + ext + slac + int }
}

/// m n_s + n_s^3 / L + n_s^2 e |A|.
pub fn lambda_mom(p: &LambdaParams) -> f64 {
    p.m * p.n_s + p.n_s.powi(3) / p.l + p.n_s * p.n_s * p.e * p.a_max
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaEmpirical {
    /// Sum of |c| over non-identity Pauli strings of the JW image.
    pub pauli_one_norm: f64,
    /// Distinct fermionic coefficient values (dedup at 1e-12).
    pub unique_coefficients: usize,
    pub terms: usize,
}

pub fn lambda_empirical(h: &FermionPolynomial) -> LambdaEmpirical {
    let jw = h.jordan_wigner();
    let pauli_one_norm = jw.iter().filter(|(s, _)| !s.is_identity()).map(|(_, c)| c.norm()).sum();
    let canon = h.normal_ordered();
    let q = |x: f64| (x / 1e-12).round() as i64;
    let unique: BTreeSet<(i64, i64)> = canon.terms.iter().map(|t| (q(t.coeff.re), q(t.coeff.im))).collect();
    LambdaEmpirical { pauli_one_norm, unique_coefficients: unique.len(), terms: canon.len() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnergyUnit {
    Hartree,
    Rydberg,
    ElectronVolt,
}

impl EnergyUnit {
    pub const ALL: [EnergyUnit; 3] = [EnergyUnit::Hartree, EnergyUnit::Rydberg, EnergyUnit::ElectronVolt];

    pub fn per_hartree(self) -> f64 {
        match self {
            EnergyUnit::Hartree => 1.0,
            EnergyUnit::Rydberg => 2.0,
            EnergyUnit::ElectronVolt => HARTREE_EV,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnergyUnit::Hartree => "hartree",
            EnergyUnit::Rydberg => "rydberg",
            EnergyUnit::ElectronVolt => "ev",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutoffEstimate {
    pub z: u32,
    pub n_quantum: u32,
    pub j: f64,
    pub l: f64,
    /// Dirac energy above rest mass, Hartree (negative when bound).
    pub e_1s: f64,
    /// |E| expressed in `unit`, used as E_cut.
    pub e_cut: f64,
    pub unit: EnergyUnit,
    /// (L^3 / 2 pi^2) E_cut^{3/2}
    pub n_pw: f64,
    pub logical_qubits: u64,
}

/// c^2 [ (1 + Z^2 alpha^2 / (n - (j + 1/2) + sqrt((j + 1/2)^2 - Z^2 alpha^2))^2)^{-1/2} - 1 ]
/// in Hartree.
pub fn dirac_energy(z: u32, n: u32, j: f64) -> Result<f64, ResourceError> {
    let za = z as f64 / C_AU;
    let k = j + 0.5;
    let rad = k * k - za * za;
    if rad <= 0.0 {
        return Err(ResourceError::SupercriticalZ(za));
    }
    let den = n as f64 - k + rad.sqrt();
    if den <= 0.0 {
        return Err(ResourceError::Invalid(format!("n = {n} is not allowed for j = {j}")));
    }
    Ok(C_AU * C_AU * (1.0 / (1.0 + za * za / (den * den)).sqrt() - 1.0))
}

pub fn planewave_cutoff(z: u32, n: u32, j: f64, l: f64, unit: EnergyUnit) -> Result<CutoffEstimate, ResourceError> {
    if !(l > 0.0) {
        return Err(ResourceError::Invalid(format!("L = {l} must be positive")));
    }
    let e = dirac_energy(z, n, j)?;
    let e_cut = e.abs() * unit.per_hartree();
    let n_pw = l.powi(3) / (2.0 * PI * PI) * e_cut.powf(1.5);
    Ok(CutoffEstimate { z, n_quantum: n, j, l, e_1s: e, e_cut, unit, n_pw, logical_qubits: 4 * n_pw.ceil() as u64 })
}

/// Cutoff estimates in every unit convention, plus the index of the one
/// closest (in log ratio) to `reference` planewaves.
pub fn cutoff_conventions(z: u32, n: u32, j: f64, l: f64, reference: f64) -> Result<(Vec<CutoffEstimate>, usize), ResourceError> {
    let all: Vec<CutoffEstimate> = EnergyUnit::ALL.iter().map(|&u| planewave_cutoff(z, n, j, l, u)).collect::<Result<_, _>>()?;
    let best = (0..all.len())
        .min_by(|&a, &b| {
            let da = (all[a].n_pw / reference).ln().abs();
            let db = (all[b].n_pw / reference).ln().abs();
            da.total_cmp(&db)
        })
        .unwrap_or(0);
    Ok((all, best))
}
