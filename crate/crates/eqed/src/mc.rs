//! Monte Carlo estimate of the mean nested-commutator norm
//! E ||[H_i, [H_j, H_k]]|| over uniformly drawn term triples, and power-law
//! fits of that mean against the term count.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use smallvec::SmallVec;
use thiserror::Error;

use crate::fermion::{commutator, fock_spectral_norm, FermionError, FermionPolynomial, FermionTerm};
use crate::momentum::{build_rellium, MomentumError, RelliumConfig};
use crate::pauli::{spectral_norm, NormMethod, PauliError, DENSE_MAX_QUBITS};

pub use crate::resources::chi_h;

/// Samples per RNG stream; stream b covers samples [b * BLOCK, (b + 1) * BLOCK).
pub const BLOCK: u64 = 1024;

#[derive(Debug, Error)]
pub enum McError {
    #[error("need at least 3 terms, got {0}")]
    TooFewTerms(usize),
    #[error("invalid campaign: {0}")]
    Config(String),
    #[error(transparent)]
    Momentum(#[from] MomentumError),
    #[error(transparent)]
    Fermion(#[from] FermionError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Sampling view of a Hamiltonian: one entry per canonical monomial.
pub struct TermTable {
    terms: Vec<FermionTerm>,
    modes: Vec<SmallVec<[u32; 4]>>,
}

impl TermTable {
    pub fn new(h: &FermionPolynomial) -> Result<Self, McError> {
        let terms: Vec<FermionTerm> = h.normal_ordered().terms.into_iter().filter(|t| !t.ops.is_empty()).collect();
        if terms.len() < 3 {
            return Err(McError::TooFewTerms(terms.len()));
        }
        let modes = terms.iter().map(|t| t.modes().into_iter().collect()).collect();
        Ok(TermTable { terms, modes })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, i: usize) -> &FermionTerm {
        &self.terms[i]
    }

    fn overlaps(&self, i: usize, modes: &[u32]) -> bool {
        self.modes[i].iter().any(|m| modes.contains(m))
    }

    /// [H_i, [H_j, H_k]] in canonical form; empty when supports make it vanish.
    pub fn nested(&self, i: usize, j: usize, k: usize) -> FermionPolynomial {
        if !self.overlaps(j, &self.modes[k]) {
            return FermionPolynomial::zero();
        }
        let inner = commutator(&single(&self.terms[j]), &single(&self.terms[k]));
        if inner.is_empty() || !inner.modes().iter().any(|m| self.modes[i].contains(m)) {
            return FermionPolynomial::zero();
        }
        commutator(&single(&self.terms[i]), &inner)
    }

    /// ||[H_i, [H_j, H_k]]|| evaluated on the reduced support.
    pub fn triple_norm(&self, i: usize, j: usize, k: usize) -> Result<f64, McError> {
        let c = self.nested(i, j, k);
        if c.is_empty() {
            return Ok(0.0);
        }
        Ok(fock_spectral_norm(&c)?)
    }

    /// Norm of the Jordan-Wigner image on the full register, or `None` when
    /// its Pauli support (strings included) is too wide for a dense solve.
    pub fn triple_norm_full(&self, i: usize, j: usize, k: usize) -> Result<Option<f64>, McError> {
        let c = self.nested(i, j, k);
        if c.is_empty() {
            return Ok(Some(0.0));
        }
        // rescale so tiny couplings survive the Pauli zero tolerance
        let scale = c.terms.iter().fold(0.0f64, |a, t| a.max(t.coeff.norm()));
        let jw = c.scale(C64::new(1.0 / scale, 0.0)).jordan_wigner();
        if jw.support().len() > DENSE_MAX_QUBITS {
            return Ok(None);
        }
        Ok(Some(scale * spectral_norm(&jw, NormMethod::Dense)?))
    }

    /// Uniform triple with replacement.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> (usize, usize, usize) {
        let n = self.terms.len();
        (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))
    }
}

fn single(t: &FermionTerm) -> FermionPolynomial {
    FermionPolynomial::from_terms(vec![t.clone()])
}

/// Mean and sample variance of `f` over `n` draws. Stream `run * 2^32 + b`
/// drives block b, so results do not depend on the thread count.
pub fn sample_mean<F>(n: u64, seed: u64, run: u64, f: F) -> Result<(f64, f64), McError>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64, McError> + Sync,
{
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let blocks = n.div_ceil(BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((run << 32) | b);
            let count = BLOCK.min(n - b * BLOCK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let v = f(&mut rng)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect::<Result<_, McError>>()?;
    let (s, s2) = pairwise(&partial);
    let mean = s / n as f64;
    let var = if n > 1 { ((s2 - s * mean) / (n - 1) as f64).max(0.0) } else { 0.0 };
    Ok((mean, var))
}

fn pairwise(v: &[(f64, f64)]) -> (f64, f64) {
    match v.len() {
        0 => (0.0, 0.0),
        1 => v[0],
        n => {
            let (a, b) = (pairwise(&v[..n / 2]), pairwise(&v[n / 2..]));
            (a.0 + b.0, a.1 + b.1)
        }
    }
}

/// One draw of ||[H_i, [H_j, H_k]]||.
pub fn sample_commutator<R: Rng>(table: &TermTable, rng: &mut R) -> Result<f64, McError> {
    let (i, j, k) = table.draw(rng);
    table.triple_norm(i, j, k)
}

#[derive(Clone, Debug)]
pub struct McSystem {
    pub label: String,
    pub config: RelliumConfig,
}

#[derive(Clone, Debug)]
pub struct McConfig {
    /// Ascending, one independent run per entry.
    pub sample_counts: Vec<u64>,
    pub seed: u64,
    pub systems: Vec<McSystem>,
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.systems.is_empty() {
            return Err(McError::Config("no systems".into()));
        }
        if self.sample_counts.is_empty() || self.sample_counts.windows(2).any(|w| w[0] > w[1]) || self.sample_counts[0] == 0 {
            return Err(McError::Config(format!("sample_counts must be positive and ascending: {:?}", self.sample_counts)));
        }
        Ok(())
    }
}

/// `n` counts log-spaced between `lo` and `hi` inclusive.
pub fn log_spaced(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    if n <= 1 {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as u64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemResult {
    pub label: String,
    pub n_planewaves: usize,
    /// number of Hamiltonian terms (monomials)
    pub m: usize,
    /// mean over runs of the per-run means
    pub mean: f64,
    /// standard deviation of the per-run means
    pub stddev: f64,
    pub samples_used: u64,
    pub run_means: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub a: f64,
    pub b: f64,
}

impl PowerFit {
    pub fn eval(&self, m: f64) -> f64 {
        self.a * m.powf(self.b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McResult {
    pub systems: Vec<SystemResult>,
    /// Absent with fewer than two distinct M.
    pub fit: Option<PowerFit>,
}

impl McResult {
    /// `n_planewaves,M,samples,mean,stddev` rows plus a `# fit` line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_planewaves,M,samples,mean,stddev\n");
        for r in &self.systems {
            s.push_str(&format!("{},{},{},{:.12e},{:.12e}\n", r.n_planewaves, r.m, r.samples_used, r.mean, r.stddev));
        }
        match self.fit {
            Some(f) => s.push_str(&format!("# fit A={:.6e} b={:.6}\n", f.a, f.b)),
            None => s.push_str("# fit absent\n"),
        }
        s
    }
}

/// Least squares on (ln M, ln mean); points with mean <= 0 are skipped.
pub fn power_law_fit(points: &[(f64, f64)]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(m, y)| *m > 0.0 && *y > 0.0).map(|(m, y)| (m.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Some(PowerFit { a: (my - b * mx).exp(), b })
}

pub fn run_system(table: &TermTable, counts: &[u64], seed: u64) -> Result<(f64, f64, u64, Vec<f64>), McError> {
    let mut means = Vec::with_capacity(counts.len());
    for (run, &n) in counts.iter().enumerate() {
        let (m, _) = sample_mean(n, seed, run as u64, |rng| sample_commutator(table, rng))?;
        means.push(m);
    }
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let sd = if means.len() > 1 { (means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() } else { 0.0 };
    Ok((mean, sd, counts.iter().sum(), means))
}

pub fn run_campaign(cfg: &McConfig) -> Result<McResult, McError> {
    cfg.validate()?;
    let mut systems = Vec::with_capacity(cfg.systems.len());
    for (idx, sys) in cfg.systems.iter().enumerate() {
        let (h, manifest) = build_rellium(&sys.config)?;
        let table = TermTable::new(&h)?;
        let (mean, stddev, used, run_means) = run_system(&table, &cfg.sample_counts, cfg.seed.wrapping_add(idx as u64))?;
        systems.push(SystemResult {
            label: sys.label.clone(),
            n_planewaves: manifest.spin_orbitals,
            m: table.len(),
            mean,
            stddev,
            samples_used: used,
            run_means,
        });
    }
    let mut distinct: Vec<usize> = systems.iter().map(|s| s.m).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let fit = if distinct.len() < 2 { None } else { power_law_fit(&systems.iter().map(|s| (s.m as f64, s.mean)).collect::<Vec<_>>()) };
    Ok(McResult { systems, fit })
}

/// a n_s^7 / M^{-b} with M = n_s^3, i.e. a n_s^{7 + 3 b}.
pub fn chi_h_from_fit(n_s: f64, fit: &PowerFit) -> f64 {
    fit.a * n_s.powi(7) * n_s.powi(3).powf(fit.b)
}
