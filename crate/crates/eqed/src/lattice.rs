//! Position-space lattice Hamiltonian: mass, SLAC kinetic, instantaneous
//! current-current interaction and external potential.
//!
//! Mode layout: site (x, y, z) with x, y, z in 0..n_side, spinor component
//! 0..4. Qubit of (site, c) is `4 * (x n^2 + y n + z) + c`, which is also its
//! position in the sorted [`ModeSpace`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::fermion::{FermionPolynomial, ModeIndex, ModeSpace, Op, Species};
use crate::spinor::{GammaSet, M4, METRIC};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("n_side = {0} must be even and at least 2")]
    OddLattice(usize),
    #[error("external potential is required")]
    MissingPotential,
    #[error("invalid lattice config: {0}")]
    ConfigInvalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeConfig {
    pub n_side: usize,
    pub l: f64,
    pub m: f64,
    pub e_charge: f64,
    /// A^ex_mu(x), lower index, keyed by integer site.
    pub external_potential: Option<BTreeMap<[i32; 3], [f64; 4]>>,
}

impl LatticeConfig {
    pub fn new(n_side: usize, l: f64, m: f64, e_charge: f64) -> Self {
        Self { n_side, l, m, e_charge, external_potential: None }
    }

    pub fn n_sites(&self) -> usize {
        self.n_side.pow(3)
    }

    pub fn n_modes(&self) -> usize {
        4 * self.n_sites()
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.n_side < 2 || self.n_side % 2 != 0 {
            return Err(LatticeError::OddLattice(self.n_side));
        }
        if !(self.l > 0.0) {
            return Err(LatticeError::ConfigInvalid(format!("L = {} must be positive", self.l)));
        }
        Ok(())
    }

    pub fn sites(&self) -> impl Iterator<Item = [i32; 3]> + '_ {
        let n = self.n_side as i32;
        (0..n).flat_map(move |x| (0..n).flat_map(move |y| (0..n).map(move |z| [x, y, z])))
    }

    pub fn qubit(&self, site: [i32; 3], comp: usize) -> u32 {
        let n = self.n_side as i32;
        (4 * ((site[0] * n + site[1]) * n + site[2])) as u32 + comp as u32
    }

    pub fn mode_space(&self) -> ModeSpace {
        ModeSpace::new(
            self.sites()
                .flat_map(|s| (0..4u8).map(move |c| ModeIndex::new(Species::Electron, s, c)))
                .collect(),
        )
    }
}

fn push_bilinear(out: &mut FermionPolynomial, m: &M4, scale: C64, left: impl Fn(usize) -> u32, right: impl Fn(usize) -> u32) {
    for a in 0..4 {
        for b in 0..4 {
            let c = m[(a, b)] * scale;
            if c.norm() > 0.0 {
                out.push(c, &[Op::create(left(a)), Op::annihilate(right(b))]);
            }
        }
    }
}

/// sum_x m a_x^dagger gamma^0 a_x.
pub fn build_mass(cfg: &LatticeConfig) -> FermionPolynomial {
    let mut out = FermionPolynomial::zero();
    if cfg.m == 0.0 {
        return out;
    }
    for s in cfg.sites() {
        for c in 0..4 {
            let q = cfg.qubit(s, c);
            let sign = if c < 2 { 1.0 } else { -1.0 };
            out.push(C64::new(sign * cfg.m, 0.0), &[Op::create(q), Op::annihilate(q)]);
        }
    }
    out
}

/// 1D SLAC kernel (1/n) sum_p p e^{i 2 pi p d / n} over p in {-n/2+1, ..., n/2}.
pub fn slac_kernel_1d(n: usize, d: i32) -> C64 {
    let half = (n / 2) as i32;
    let mut acc = C64::new(0.0, 0.0);
    for p in (1 - half)..=half {
        acc += C64::from_polar(p as f64, 2.0 * PI * (p * d) as f64 / n as f64);
    }
    acc / n as f64
}

/// SLAC kinetic term sum_{x,y} a_y^dagger gamma^0 gamma^j K_j(x - y) a_x with
/// K_j = (2 pi / L) (1/n_s) sum_p p_j e^{i 2 pi p.(x-y)/n}. The sum over the
/// transverse momentum components forces the hop to lie along axis j.
pub fn build_slac(cfg: &LatticeConfig) -> Result<FermionPolynomial, LatticeError> {
    cfg.validate()?;
    let n = cfg.n_side as i32;
    let g = GammaSet::dirac();
    let kern: Vec<C64> = (0..n).map(|d| slac_kernel_1d(cfg.n_side, d) * (2.0 * PI / cfg.l)).collect();
    let mut out = FermionPolynomial::zero();
    for x in cfg.sites() {
        for j in 0..3 {
            let alpha = g.alpha(j + 1);
            for step in 0..n {
                let mut y = x;
                y[j] = (x[j] + step) % n;
                // x - y along j, as a residue mod n
                let d = ((x[j] - y[j]) % n + n) % n;
                let k = kern[d as usize];
                if k.norm() < 1e-15 {
                    continue;
                }
                push_bilinear(&mut out, &alpha, k, |a| cfg.qubit(y, a), |b| cfg.qubit(x, b));
            }
        }
    }
    Ok(out)
}

fn distance(x: [i32; 3], y: [i32; 3]) -> f64 {
    let d: i32 = (0..3).map(|k| (x[k] - y[k]).pow(2)).sum();
    (d as f64).sqrt()
}

/// sum_{x != y} sum_mu g_mumu e^2 n^{1/3} / (8 pi L |x - y|)
/// (a_x^dagger gamma^0 gamma^mu a_x)(a_y^dagger gamma^0 gamma^mu a_y), with
/// |x - y| the Euclidean distance in lattice units.
pub fn build_interaction(cfg: &LatticeConfig) -> FermionPolynomial {
    let g = GammaSet::dirac();
    let alphas: Vec<M4> = (0..4).map(|mu| g.alpha(mu)).collect();
    let sites: Vec<[i32; 3]> = cfg.sites().collect();
    let pref = cfg.e_charge * cfg.e_charge * cfg.n_side as f64 / (8.0 * PI * cfg.l);
    let mut out = FermionPolynomial::zero();
    for &x in &sites {
        for &y in &sites {
            if x == y {
                continue;
            }
            let w = pref / distance(x, y);
            for (mu, al) in alphas.iter().enumerate() {
                for a in 0..4 {
                    for b in 0..4 {
                        let c1 = al[(a, b)];
                        if c1.norm() == 0.0 {
                            continue;
                        }
                        for c in 0..4 {
                            for d in 0..4 {
                                let c2 = al[(c, d)];
                                if c2.norm() == 0.0 {
                                    continue;
                                }
                                out.push(
                                    c1 * c2 * (METRIC[mu] * w),
                                    &[
                                        Op::create(cfg.qubit(x, a)),
                                        Op::annihilate(cfg.qubit(x, b)),
                                        Op::create(cfg.qubit(y, c)),
                                        Op::annihilate(cfg.qubit(y, d)),
                                    ],
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    out.normal_ordered()
}

/// -e sum_x a_x^dagger gamma^0 gamma^mu A_mu(x) a_x.
pub fn build_external_lattice(cfg: &LatticeConfig) -> Result<FermionPolynomial, LatticeError> {
    let pot = cfg.external_potential.as_ref().ok_or(LatticeError::MissingPotential)?;
    let g = GammaSet::dirac();
    let mut out = FermionPolynomial::zero();
    for (&site, a) in pot {
        if site.iter().any(|&c| c < 0 || c >= cfg.n_side as i32) {
            return Err(LatticeError::ConfigInvalid(format!("potential site {site:?} is off the lattice")));
        }
        let mut block = M4::zeros();
        for (mu, &amu) in a.iter().enumerate() {
            block += g.alpha(mu) * C64::new(amu, 0.0);
        }
        push_bilinear(&mut out, &block, C64::new(-cfg.e_charge, 0.0), |i| cfg.qubit(site, i), |j| cfg.qubit(site, j));
    }
    Ok(out.normal_ordered())
}

/// H_SLAC + H_m.
pub fn build_free(cfg: &LatticeConfig) -> Result<FermionPolynomial, LatticeError> {
    let mut h = build_slac(cfg)?;
    h.extend(build_mass(cfg));
    Ok(h.normal_ordered())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBuild {
    pub hamiltonian: FermionPolynomial,
    pub manifest: LatticeManifest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeManifest {
    pub n_sites: usize,
    pub qubits: usize,
    pub mass_terms: usize,
    pub slac_terms: usize,
    pub interaction_terms: usize,
    pub external_terms: usize,
    pub total_terms: usize,
}

/// H_SLAC + H_m + H_int (+ H_ext when a potential is configured).
pub fn build_lattice(cfg: &LatticeConfig) -> Result<LatticeBuild, LatticeError> {
    cfg.validate()?;
    let mass = build_mass(cfg).normal_ordered();
    let slac = build_slac(cfg)?.normal_ordered();
    let int = build_interaction(cfg);
    let ext = match cfg.external_potential {
        Some(_) => build_external_lattice(cfg)?,
        None => FermionPolynomial::zero(),
    };
    let mut h = FermionPolynomial::zero();
    let manifest_counts = (mass.len(), slac.len(), int.len(), ext.len());
    for part in [mass, slac, int, ext] {
        h.extend(part);
    }
    let hamiltonian = h.normal_ordered();
    let manifest = LatticeManifest {
        n_sites: cfg.n_sites(),
        qubits: cfg.n_modes(),
        mass_terms: manifest_counts.0,
        slac_terms: manifest_counts.1,
        interaction_terms: manifest_counts.2,
        external_terms: manifest_counts.3,
        total_terms: hamiltonian.len(),
    };
    Ok(LatticeBuild { hamiltonian, manifest })
}
