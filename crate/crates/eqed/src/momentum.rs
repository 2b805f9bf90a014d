//! Momentum-space rellium Hamiltonian: relativistic free energies, the six
//! tree-level four-fermion amplitudes, mass counterterm, vacuum constant and
//! the external potential in the planewave basis.
//!
//! Modes are (species, grid point nu, spin label 0/1). Physical momentum of
//! grid point nu is k = 2 pi nu / L. Qubit order follows [`ModeSpace`]: all
//! electrons, then all positrons; grid points sorted lexicographically; spin
//! fastest.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fermion::{FermionPolynomial, FermionTerm, ModeIndex, ModeSpace, Op, Species};
use crate::spinor::{self, contract, current, dispersion, GammaSet, HelicitySpinor, SpinorKind};

/// Denominators below this magnitude are treated as the zero-transfer pole.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentumError {
    #[error("zero four-momentum transfer in the {0} channel")]
    SingularDenominator(&'static str),
    #[error("momentum not conserved: residual {0:e}")]
    MomentumNotConserved(f64),
    #[error("invalid rellium config: {0}")]
    ConfigInvalid(String),
    #[error("external potential is required")]
    MissingPotential,
}

/// How the planewave grid is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    /// The listed integer grid points.
    Explicit(Vec<[i32; 3]>),
    /// All nu with |2 pi nu / L|^2 / 2 <= e_cut.
    Cutoff { e_cut: f64, include_origin: bool },
    /// All nu with |nu|^2 <= max_norm2.
    Shells { max_norm2: i32, include_origin: bool },
    /// The first `n` points ordered by |nu|^2, then lexicographically.
    Nearest(usize),
    /// As `Nearest`, skipping the origin.
    NearestNonzero(usize),
}

impl GridSpec {
    pub fn points(&self, l: f64) -> Result<Vec<[i32; 3]>, MomentumError> {
        let mut pts = match self {
            GridSpec::Explicit(p) => p.clone(),
            GridSpec::Cutoff { e_cut, include_origin } => {
                if !(*e_cut > 0.0) {
                    return Err(MomentumError::ConfigInvalid(format!("E_cut = {e_cut} must be positive")));
                }
                let scale = 2.0 * PI / l;
                let r = ((2.0 * e_cut).sqrt() / scale).floor() as i32;
                ball(r, |n2| 0.5 * scale * scale * n2 as f64 <= *e_cut, *include_origin)
            }
            GridSpec::Shells { max_norm2, include_origin } => {
                let r = (*max_norm2 as f64).sqrt().floor() as i32;
                ball(r, |n2| n2 <= *max_norm2, *include_origin)
            }
            GridSpec::Nearest(n) | GridSpec::NearestNonzero(n) => {
                let origin = matches!(self, GridSpec::Nearest(_));
                let mut r = 0;
                loop {
                    let mut all = ball(r, |n2| n2 <= r * r, origin);
                    if all.len() >= *n {
                        all.sort_by_key(|v| (norm2(*v), *v));
                        all.truncate(*n);
                        break all;
                    }
                    r += 1;
                }
            }
        };
        pts.sort();
        pts.dedup();
        if pts.is_empty() {
            return Err(MomentumError::ConfigInvalid("empty momentum grid".into()));
        }
        Ok(pts)
    }
}

fn norm2(v: [i32; 3]) -> i32 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

fn ball(r: i32, keep: impl Fn(i32) -> bool, include_origin: bool) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let v = [x, y, z];
                if keep(norm2(v)) && (include_origin || v != [0, 0, 0]) {
                    out.push(v);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelliumConfig {
    pub l: f64,
    pub grid: GridSpec,
    pub m: f64,
    pub e_charge: f64,
    pub delta_m: f64,
    pub lambda_vac: f64,
    pub include_pair_terms: bool,
    /// A~^ex_mu(nu), lower index, keyed by integer grid point.
    pub external_potential: Option<BTreeMap<[i32; 3], [C64; 4]>>,
}

impl RelliumConfig {
    pub fn new(l: f64, grid: GridSpec, m: f64, e_charge: f64) -> Self {
        Self {
            l,
            grid,
            m,
            e_charge,
            delta_m: 0.0,
            lambda_vac: 0.0,
            include_pair_terms: true,
            external_potential: None,
        }
    }

    pub fn validate(&self) -> Result<(), MomentumError> {
        if !(self.l > 0.0) {
            return Err(MomentumError::ConfigInvalid(format!("L = {} must be positive", self.l)));
        }
        if !(self.m >= 0.0) {
            return Err(MomentumError::ConfigInvalid(format!("m = {} must be nonnegative", self.m)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    /// e- e- -> e- e-
    EeEe,
    /// e+ e+ -> e+ e+
    PpPp,
    /// e- e+ -> e- e+
    EpEp,
    /// e- -> e+ e- e-
    EToEep,
    /// e+ -> e- e+ e+
    PToPpe,
    /// 0 -> e- e+ e- e+
    Vacuum,
}

impl Process {
    pub const ALL: [Process; 6] =
        [Process::EeEe, Process::PpPp, Process::EpEp, Process::EToEep, Process::PToPpe, Process::Vacuum];

    pub fn name(self) -> &'static str {
        match self {
            Process::EeEe => "ee->ee",
            Process::PpPp => "pp->pp",
            Process::EpEp => "ep->ep",
            Process::EToEep => "e->eep",
            Process::PToPpe => "p->ppe",
            Process::Vacuum => "vac->eepp",
        }
    }

    /// Leg species (true = positron) in request order.
    pub fn legs(self) -> [bool; 4] {
        match self {
            Process::EeEe => [false; 4],
            Process::PpPp => [true; 4],
            Process::EpEp => [false, true, false, true],
            Process::EToEep => [false, true, false, false],
            Process::PToPpe => [true, false, true, true],
            Process::Vacuum => [false, true, false, true],
        }
    }

    /// Which legs are incoming; the rest are outgoing.
    fn incoming(self) -> [bool; 4] {
        match self {
            Process::EeEe | Process::PpPp | Process::EpEp => [true, true, false, false],
            Process::EToEep | Process::PToPpe => [true, false, false, false],
            Process::Vacuum => [false; 4],
        }
    }

    fn channels(self) -> &'static [Channel] {
        match self {
            Process::EeEe => &EE,
            Process::PpPp => &PP,
            Process::EpEp => &EP,
            Process::EToEep => &E_EEP,
            Process::PToPpe => &P_PPE,
            Process::Vacuum => &VAC,
        }
    }
}

const fn ch(name: &'static str, a: (usize, usize), b: (usize, usize), den: Den, sign: f64) -> Channel {
    Channel { name, a, b, den, sign }
}

const EE: [Channel; 2] = [ch("direct", (2, 0), (3, 1), Den::Minus(2, 0), 1.0), ch("exchange", (3, 0), (2, 1), Den::Minus(3, 0), -1.0)];
const PP: [Channel; 2] = [ch("direct", (0, 2), (1, 3), Den::Minus(2, 0), 1.0), ch("exchange", (0, 3), (1, 2), Den::Minus(3, 0), -1.0)];
const EP: [Channel; 2] =
    [ch("annihilation", (1, 0), (2, 3), Den::Plus(0, 1), 1.0), ch("scattering", (2, 0), (1, 3), Den::Minus(0, 2), 1.0)];
const E_EEP: [Channel; 2] = [ch("direct", (2, 0), (3, 1), Den::Minus(0, 2), 1.0), ch("exchange", (3, 0), (2, 1), Den::Minus(0, 3), -1.0)];
const P_PPE: [Channel; 2] = [ch("direct", (1, 3), (0, 2), Den::Minus(0, 2), 1.0), ch("exchange", (1, 2), (0, 3), Den::Minus(0, 3), -1.0)];
const VAC: [Channel; 1] = [ch("annihilation", (0, 1), (2, 3), Den::Plus(0, 1), 1.0)];

#[derive(Clone, Copy, Debug)]
enum Den {
    /// (E_i - E_j)^2 - |k_i - k_j|^2
    Minus(usize, usize),
    /// (E_i + E_j)^2 - |k_i + k_j|^2
    Plus(usize, usize),
}

/// sign * (leg a.0 bar gamma^mu leg a.1)(leg b.0 bar gamma_mu leg b.1) / den.
#[derive(Clone, Copy, Debug)]
struct Channel {
    name: &'static str,
    a: (usize, usize),
    b: (usize, usize),
    den: Den,
    sign: f64,
}

impl Den {
    fn eval(self, e: &[f64; 4], k: &[[f64; 3]; 4]) -> f64 {
        let (i, j, s) = match self {
            Den::Minus(i, j) => (i, j, -1.0),
            Den::Plus(i, j) => (i, j, 1.0),
        };
        let de = e[i] + s * e[j];
        let dk: f64 = (0..3).map(|c| (k[i][c] + s * k[j][c]).powi(2)).sum();
        de * de - dk
    }
}

/// Per-channel values e^2 * sign * numerator / denominator; None for a
/// channel sitting on its zero-transfer pole.
fn eval_channels(
    process: Process,
    e2: f64,
    cur: impl Fn(usize, usize) -> [C64; 4],
    e: &[f64; 4],
    k: &[[f64; 3]; 4],
) -> [(&'static str, Option<C64>); 2] {
    let mut out = [("", None), ("", Some(C64::new(0.0, 0.0)))];
    for (slot, c) in process.channels().iter().enumerate() {
        let d = c.den.eval(e, k);
        let v = if d.abs() < SINGULAR_TOL {
            None
        } else {
            let num = contract(&cur(c.a.0, c.a.1), &cur(c.b.0, c.b.1));
            Some(num * (e2 * c.sign / d))
        };
        out[slot] = (c.name, v);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeRequest {
    pub process: Process,
    /// Physical 3-momenta in the leg order of [`Process::legs`].
    pub momenta: [[f64; 3]; 4],
    /// Spin labels 1 or 2.
    pub spins: [u8; 4],
}

/// Tree-level amplitude e^2 (direct -/+ exchange) for the requested legs with
/// mass `m`.
pub fn amplitude(req: &AmplitudeRequest, m: f64, e_charge: f64) -> Result<C64, MomentumError> {
    let inc = req.process.incoming();
    let mut resid = [0.0f64; 3];
    let mut scale = 1.0f64;
    for (i, p) in req.momenta.iter().enumerate() {
        let s = if inc[i] { 1.0 } else { -1.0 };
        for c in 0..3 {
            resid[c] += s * p[c];
            scale = scale.max(p[c].abs());
        }
    }
    let r = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r > 1e-9 * scale {
        return Err(MomentumError::MomentumNotConserved(r));
    }
    let gs = GammaSet::dirac();
    let legs = req.process.legs();
    let sp: Vec<HelicitySpinor> = (0..4)
        .map(|i| spinor::spinor(SpinorKind::for_label(legs[i], req.spins[i]), req.momenta[i], m))
        .collect();
    let e = [0, 1, 2, 3].map(|i| dispersion(req.momenta[i], m));
    let mut total = C64::new(0.0, 0.0);
    for (name, v) in eval_channels(req.process, e_charge * e_charge, |a, b| current(&gs, &sp[a], &sp[b]), &e, &req.momenta) {
        total += v.ok_or(MomentumError::SingularDenominator(name))?;
    }
    Ok(total)
}

/// Term counts for one build, by class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentumManifest {
    pub grid_points: usize,
    pub spin_orbitals: usize,
    /// Monomials emitted per class before normal ordering.
    pub class_terms: BTreeMap<&'static str, usize>,
    /// Spin-summed momentum blocks: 2 n_s free blocks plus one per emitted
    /// (p, q, r) tuple and class (h.c. blocks counted separately). Bounded by
    /// 2 n_s + 9 n_s^3.
    pub n_terms: usize,
    /// Normal-ordered monomials in the final polynomial.
    pub total_terms: usize,
    /// Constant produced by normal ordering the external b b^dagger block.
    pub external_constant: C64,
}

impl MomentumManifest {
    pub fn n_terms_bound(&self) -> usize {
        let n = self.grid_points;
        2 * n + 9 * n * n * n
    }
}

/// Precomputed spinors, energies and currents on a grid.
pub struct MomentumBasis {
    pub l: f64,
    pub m: f64,
    pub points: Vec<[i32; 3]>,
    index: HashMap<[i32; 3], usize>,
    pub energy: Vec<f64>,
    pub k: Vec<[f64; 3]>,
    spinors: Vec<HelicitySpinor>,
    currents: Vec<[C64; 4]>,
}

impl MomentumBasis {
    pub fn new(points: Vec<[i32; 3]>, l: f64, m: f64) -> Self {
        let gs = GammaSet::dirac();
        let index = points.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let k: Vec<[f64; 3]> = points.iter().map(|p| p.map(|c| 2.0 * PI * c as f64 / l)).collect();
        let energy = k.iter().map(|k| dispersion(*k, m)).collect();
        let mut spinors = Vec::with_capacity(4 * points.len());
        for positron in [false, true] {
            for kk in &k {
                for sigma in [1, 2] {
                    spinors.push(spinor::spinor(SpinorKind::for_label(positron, sigma), *kk, m));
                }
            }
        }
        let ns = spinors.len();
        let mut currents = Vec::with_capacity(ns * ns);
        for a in &spinors {
            for b in &spinors {
                currents.push(current(&gs, a, b));
            }
        }
        Self { l, m, points, index, energy, k, spinors, currents }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn find(&self, nu: [i32; 3]) -> Option<usize> {
        self.index.get(&nu).copied()
    }

    /// Spinor slot: u or v at grid index g, spin 0/1. Also the qubit of the
    /// matching a or b mode.
    pub fn slot(&self, positron: bool, g: usize, s: usize) -> usize {
        (usize::from(positron) * self.len() + g) * 2 + s
    }

    pub fn mode(&self, positron: bool, g: usize, s: usize) -> u32 {
        self.slot(positron, g, s) as u32
    }

    pub fn spinor(&self, slot: usize) -> &HelicitySpinor {
        &self.spinors[slot]
    }

    /// psi-bar_a gamma^mu psi_b for spinor slots a, b.
    pub fn current(&self, a: usize, b: usize) -> [C64; 4] {
        self.currents[a * self.spinors.len() + b]
    }

    pub fn mode_space(&self) -> ModeSpace {
        let mut modes = Vec::with_capacity(4 * self.len());
        for sp in [Species::Electron, Species::Positron] {
            for p in &self.points {
                for s in 0..2u8 {
                    modes.push(ModeIndex::new(sp, *p, s));
                }
            }
        }
        ModeSpace::new(modes)
    }

    fn sum3(&self, a: usize, b: usize, c: usize, sb: i32, sc: i32) -> Option<usize> {
        let (p, q, r) = (self.points[a], self.points[b], self.points[c]);
        self.find([0, 1, 2].map(|i| p[i] + sb * q[i] + sc * r[i]))
    }
}

/// Emitted amplitude terms for one class and one leading momentum index.
struct ClassOut {
    terms: Vec<FermionTerm>,
    blocks: usize,
}

fn neg(g: [i32; 3]) -> [i32; 3] {
    g.map(|c| -c)
}

/// Terms for all spin labels of one momentum tuple. `legs` lists the grid
/// index of each amplitude leg; `ops_for` maps spins to the operator string.
fn tuple_terms(
    basis: &MomentumBasis,
    process: Process,
    e2: f64,
    legs: [usize; 4],
    weight: f64,
    ops_for: impl Fn([usize; 4]) -> [Op; 4],
    out: &mut Vec<FermionTerm>,
) -> bool {
    let species = process.legs();
    let e = legs.map(|g| basis.energy[g]);
    let k = legs.map(|g| basis.k[g]);
    let mut any = false;
    for spins in 0..16usize {
        let s = [spins & 1, (spins >> 1) & 1, (spins >> 2) & 1, (spins >> 3) & 1];
        let slot = |i: usize| basis.slot(species[i], legs[i], s[i]);
        let ch = eval_channels(process, e2, |a, b| basis.current(slot(a), slot(b)), &e, &k);
        let v: C64 = ch.iter().filter_map(|(_, v)| *v).sum::<C64>() * weight;
        if v.norm() < 1e-14 {
            continue;
        }
        any = true;
        out.push(FermionTerm::new(v, &ops_for(s)));
    }
    any
}

fn build_class(basis: &MomentumBasis, cfg: &RelliumConfig, process: Process) -> ClassOut {
    let n = basis.len();
    let e2 = cfg.e_charge * cfg.e_charge;
    let omega = cfg.l.powi(3);
    let w = |g: [usize; 4]| 1.0 / (2.0 * omega * g.iter().map(|&i| basis.energy[i]).product::<f64>().sqrt());
    let parts: Vec<ClassOut> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut terms = Vec::new();
            let mut blocks = 0;
            for q in 0..n {
                for r in 0..n {
                    let emitted = match process {
                        Process::EeEe | Process::PpPp | Process::EpEp => {
                            let Some(s) = basis.sum3(p, q, r, 1, -1) else { continue };
                            let legs = [p, q, r, s];
                            let (sp, sq, sr, ss) = match process {
                                Process::EeEe => (false, false, false, false),
                                Process::PpPp => (true, true, true, true),
                                _ => (false, true, false, true),
                            };
                            // a_s^+ a_r^+ a_q a_p (b's for positron legs);
                            // for e-e+ the operator order is b_s^+ a_r^+ b_q a_p
                            let ops = |sg: [usize; 4]| {
                                [
                                    Op::create(basis.mode(ss, s, sg[3])),
                                    Op::create(basis.mode(sr, r, sg[2])),
                                    Op::annihilate(basis.mode(sq, q, sg[1])),
                                    Op::annihilate(basis.mode(sp, p, sg[0])),
                                ]
                            };
                            tuple_terms(basis, process, e2, legs, 0.5 * w(legs), ops, &mut terms)
                        }
                        Process::EToEep | Process::PToPpe => {
                            // legs [p in, q opposite species out, p1 = r out, p - q - p1 out]
                            let Some(s) = basis.sum3(p, q, r, -1, -1) else { continue };
                            let legs = [p, q, r, s];
                            let pos = process == Process::PToPpe;
                            let ops = |sg: [usize; 4]| {
                                [
                                    Op::create(basis.mode(pos, s, sg[3])),
                                    Op::create(basis.mode(pos, r, sg[2])),
                                    Op::create(basis.mode(!pos, q, sg[1])),
                                    Op::annihilate(basis.mode(pos, p, sg[0])),
                                ]
                            };
                            tuple_terms(basis, process, e2, legs, w(legs), ops, &mut terms)
                        }
                        Process::Vacuum => {
                            let (pp, qq, rr) = (basis.points[p], basis.points[q], basis.points[r]);
                            let Some(t) = basis.find([0, 1, 2].map(|i| -(pp[i] + qq[i] + rr[i]))) else { continue };
                            let legs = [p, q, r, t];
                            let ops = |sg: [usize; 4]| {
                                [
                                    Op::create(basis.mode(false, p, sg[0])),
                                    Op::create(basis.mode(true, q, sg[1])),
                                    Op::create(basis.mode(false, r, sg[2])),
                                    Op::create(basis.mode(true, t, sg[3])),
                                ]
                            };
                            tuple_terms(basis, process, e2, legs, w(legs), ops, &mut terms)
                        }
                    };
                    if emitted {
                        blocks += 1;
                    }
                }
            }
            ClassOut { terms, blocks }
        })
        .collect();
    let mut terms = Vec::new();
    let mut blocks = 0;
    for part in parts {
        terms.extend(part.terms);
        blocks += part.blocks;
    }
    // 2->2 blocks are symmetrized (weight already halved); 1->3 and 0->4
    // blocks get their explicit Hermitian conjugate
    let adj: Vec<FermionTerm> = terms.iter().map(FermionTerm::adjoint).collect();
    terms.extend(adj);
    if matches!(process, Process::EToEep | Process::PToPpe | Process::Vacuum) {
        blocks *= 2;
    }
    ClassOut { terms, blocks }
}

/// The rellium Hamiltonian and its term manifest.
pub fn build_rellium(cfg: &RelliumConfig) -> Result<(FermionPolynomial, MomentumManifest), MomentumError> {
    cfg.validate()?;
    let basis = MomentumBasis::new(cfg.grid.points(cfg.l)?, cfg.l, cfg.m);
    build_rellium_on(&basis, cfg)
}

pub fn build_rellium_on(basis: &MomentumBasis, cfg: &RelliumConfig) -> Result<(FermionPolynomial, MomentumManifest), MomentumError> {
    let n = basis.len();
    let mut manifest = MomentumManifest { grid_points: n, spin_orbitals: 4 * n, ..Default::default() };
    let mut h = FermionPolynomial::zero();
    let mut free = 0;
    for positron in [false, true] {
        for g in 0..n {
            for s in 0..2 {
                let q = basis.mode(positron, g, s);
                h.push(C64::new(basis.energy[g], 0.0), &[Op::create(q), Op::annihilate(q)]);
                free += 1;
            }
        }
    }
    manifest.class_terms.insert("free", free);
    manifest.n_terms += 2 * n;

    let mut classes = vec![Process::EeEe, Process::PpPp, Process::EpEp];
    if cfg.include_pair_terms {
        classes.extend([Process::EToEep, Process::PToPpe, Process::Vacuum]);
    }
    for pr in classes {
        let out = build_class(basis, cfg, pr);
        manifest.class_terms.insert(pr.name(), out.terms.len());
        manifest.n_terms += out.blocks;
        h.terms.extend(out.terms);
    }

    if cfg.delta_m != 0.0 {
        let dm = mass_counterterm(basis, cfg.delta_m);
        manifest.class_terms.insert("delta_m", dm.len());
        h.extend(dm);
    }
    if cfg.lambda_vac != 0.0 {
        h.push(C64::new(cfg.lambda_vac * n as f64, 0.0), &[]);
        manifest.class_terms.insert("vacuum_constant", 1);
    }
    if cfg.external_potential.is_some() {
        let (ext, c) = external_on(basis, cfg)?;
        manifest.class_terms.insert("external", ext.len());
        manifest.external_constant = c;
        h.extend(ext);
    }
    let h = h.normal_ordered();
    manifest.total_terms = h.len();
    Ok((h, manifest))
}

/// delta_m sum_p 1/(2 E_p n_s) (u-bar u a^+ a - v-bar v b^+ b
/// + v-bar(-p) u(p) b_{-p} a_p + u-bar(-p) v(p) a^+_{-p} b^+_p).
fn mass_counterterm(basis: &MomentumBasis, dm: f64) -> FermionPolynomial {
    let n = basis.len();
    let mut out = FermionPolynomial::zero();
    let bil = |a: usize, b: usize| spinor::bilinear(basis.spinor(a), &[], basis.spinor(b), true);
    for g in 0..n {
        let w = dm / (2.0 * basis.energy[g] * n as f64);
        let mg = basis.find(neg(basis.points[g]));
        for s1 in 0..2 {
            for s2 in 0..2 {
                let c = bil(basis.slot(false, g, s1), basis.slot(false, g, s2)) * w;
                out.push(c, &[Op::create(basis.mode(false, g, s1)), Op::annihilate(basis.mode(false, g, s2))]);
                let c = -bil(basis.slot(true, g, s1), basis.slot(true, g, s2)) * w;
                out.push(c, &[Op::create(basis.mode(true, g, s1)), Op::annihilate(basis.mode(true, g, s2))]);
                if let Some(mg) = mg {
                    let c = bil(basis.slot(true, mg, s1), basis.slot(false, g, s2)) * w;
                    out.push(c, &[Op::annihilate(basis.mode(true, mg, s1)), Op::annihilate(basis.mode(false, g, s2))]);
                    let c = bil(basis.slot(false, mg, s1), basis.slot(true, g, s2)) * w;
                    out.push(c, &[Op::create(basis.mode(false, mg, s1)), Op::create(basis.mode(true, g, s2))]);
                }
            }
        }
    }
    out
}

/// Momentum-space external potential block alone.
pub fn build_external_momentum(cfg: &RelliumConfig) -> Result<(FermionPolynomial, C64), MomentumError> {
    cfg.validate()?;
    let basis = MomentumBasis::new(cfg.grid.points(cfg.l)?, cfg.l, cfg.m);
    external_on(&basis, cfg)
}

/// Returns the normal-ordered block and the constant from b b^dagger.
pub fn external_on(basis: &MomentumBasis, cfg: &RelliumConfig) -> Result<(FermionPolynomial, C64), MomentumError> {
    let pot = cfg.external_potential.as_ref().ok_or(MomentumError::MissingPotential)?;
    let a = |nu: [i32; 3]| pot.get(&nu).copied();
    let n = basis.len();
    let l3 = cfg.l.powi(3);
    let mut raw = FermionPolynomial::zero();
    for p in 0..n {
        for q in 0..n {
            let (pp, qq) = (basis.points[p], basis.points[q]);
            let w = -cfg.e_charge / (2.0 * (basis.energy[p] * basis.energy[q]).sqrt() * l3);
            let blocks: [([i32; 3], bool, bool, [bool; 2]); 4] = [
                // (argument of A, left spinor is v, right spinor is v, operator daggers)
                ([pp[0] - qq[0], pp[1] - qq[1], pp[2] - qq[2]], false, false, [true, false]),
                ([-pp[0] - qq[0], -pp[1] - qq[1], -pp[2] - qq[2]], false, true, [true, true]),
                ([pp[0] + qq[0], pp[1] + qq[1], pp[2] + qq[2]], true, false, [false, false]),
                ([qq[0] - pp[0], qq[1] - pp[1], qq[2] - pp[2]], true, true, [false, true]),
            ];
            for (arg, lv, rv, dag) in blocks {
                let Some(amu) = a(arg) else { continue };
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        let j = basis.current(basis.slot(lv, q, s2), basis.slot(rv, p, s1));
                        // gamma^mu A_mu: upper-index current against lower-index potential
                        let c: C64 = (0..4).map(|mu| j[mu] * amu[mu]).sum::<C64>() * w;
                        if c.norm() < 1e-14 {
                            continue;
                        }
                        raw.push(c, &[Op::new(basis.mode(lv, q, s2), dag[0]), Op::new(basis.mode(rv, p, s1), dag[1])]);
                    }
                }
            }
        }
    }
    let h = raw.normal_ordered();
    let constant = h.terms.iter().filter(|t| t.ops.is_empty()).map(|t| t.coeff).sum();
    Ok((h, constant))
}

/// Electron number minus positron number weight for [`crate::fermion::conserves`].
pub fn charge_weight(basis: &MomentumBasis) -> impl Fn(u32) -> i32 + '_ {
    move |q| if (q as usize) < 2 * basis.len() { 1 } else { -1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rules() {
        let sh = GridSpec::Shells { max_norm2: 1, include_origin: false }.points(1.0).unwrap();
        assert_eq!(sh.len(), 6);
        let sh = GridSpec::Shells { max_norm2: 3, include_origin: false }.points(1.0).unwrap();
        assert_eq!(sh.len(), 26);
        let c = GridSpec::Cutoff { e_cut: 0.5 * (2.0 * PI).powi(2) * 1.0001, include_origin: true }.points(1.0).unwrap();
        assert_eq!(c.len(), 7);
        assert_eq!(GridSpec::Nearest(24).points(1.0).unwrap().len(), 24);
        let nz = GridSpec::NearestNonzero(10).points(1.0).unwrap();
        assert_eq!(nz.len(), 10);
        assert!(!nz.contains(&[0, 0, 0]));
    }

    #[test]
    fn single_point_free_part() {
        let cfg = RelliumConfig::new(1.0, GridSpec::Explicit(vec![[0, 0, 0]]), 1.0, 0.3);
        let (h, man) = build_rellium(&cfg).unwrap();
        assert_eq!(man.spin_orbitals, 4);
        for q in 0..4 {
            let t = h.terms.iter().find(|t| t.ops.as_slice() == [Op::create(q), Op::annihilate(q)]).unwrap();
            assert!((t.coeff - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(h.terms.iter().all(|t| !t.ops.is_empty()));
    }
}
