use std::collections::BTreeMap;
use std::f64::consts::PI;

use eqed::fermion::{check_hermitian, conserves, one_body_matrix, Op};
use eqed::lattice::*;
use eqed::linalg::hermitian_eigen;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Expected one-body spectrum: +-sqrt(m^2 + |2 pi p / L|^2), each twice, for
/// every p in {-n/2+1..n/2}^3.
fn continuum_spectrum(n: usize, l: f64, m: f64) -> Vec<f64> {
    let half = (n / 2) as i32;
    let mut out = Vec::new();
    for px in (1 - half)..=half {
        for py in (1 - half)..=half {
            for pz in (1 - half)..=half {
                let k2 = (2.0 * PI / l).powi(2) * (px * px + py * py + pz * pz) as f64;
                let e = (m * m + k2).sqrt();
                out.extend([e, e, -e, -e]);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn free_spectrum(cfg: &LatticeConfig) -> Vec<f64> {
    let h = build_free(cfg).unwrap();
    let m = one_body_matrix(&h, cfg.n_modes()).unwrap();
    hermitian_eigen(&m).0
}

#[test]
fn slac_dispersion_matches_continuum() {
    for (n, l, m) in [(2, 1.0, 1.0), (4, 1.0, 1.0), (4, 2.5, 0.3)] {
        let cfg = LatticeConfig::new(n, l, m, 0.3);
        let got = free_spectrum(&cfg);
        let want = continuum_spectrum(n, l, m);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "n={n}: {g} vs {w}");
        }
    }
}

#[test]
fn naive_lattice_derivative_doubles() {
    // sin-dispersion of the nearest-neighbour derivative puts p = 0 and
    // p = n/2 on the same shell; SLAC keeps them apart
    let n = 4usize;
    let sin_e = |p: i32| (1.0 + ((2.0 * PI * p as f64 / n as f64).sin()).powi(2)).sqrt();
    assert!((sin_e(0) - sin_e(2)).abs() < 1e-12);
    let slac = free_spectrum(&LatticeConfig::new(n, 1.0, 1.0, 0.3));
    let at_rest = slac.iter().filter(|e| (**e - 1.0).abs() < 1e-9).count();
    assert_eq!(at_rest, 2);
}

#[test]
fn slac_kernel_values() {
    // (1/n) sum_p p over {-n/2+1..n/2} is 1/2 on the diagonal
    for n in [2, 4, 6, 8] {
        assert!((slac_kernel_1d(n, 0) - C64::new(0.5, 0.0)).norm() < 1e-12);
    }
    // K(-d) = conj K(d)
    for n in [4, 6] {
        for d in 1..n as i32 {
            let a = slac_kernel_1d(n, d);
            let b = slac_kernel_1d(n, (n as i32) - d);
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn lattice_builds_are_hermitian_and_conserve_charge() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 4] {
        let mut cfg = LatticeConfig::new(n, 1.3, 0.7, 0.4);
        let mut pot = BTreeMap::new();
        for s in cfg.sites() {
            pot.insert(s, [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        }
        cfg.external_potential = Some(pot);
        let b = build_lattice(&cfg).unwrap();
        assert!(check_hermitian(&b.hamiltonian));
        assert!(conserves(&b.hamiltonian, |_| 1));
        assert_eq!(b.manifest.qubits, 4 * n * n * n);
        assert!(b.hamiltonian.modes().iter().all(|&q| (q as usize) < cfg.n_modes()));
    }
}

#[test]
fn scalar_potential_shifts_all_components() {
    let mut cfg = LatticeConfig::new(2, 1.0, 1.0, 0.5);
    let mut pot = BTreeMap::new();
    pot.insert([1, 0, 1], [2.0, 0.0, 0.0, 0.0]);
    cfg.external_potential = Some(pot);
    let h = build_external_lattice(&cfg).unwrap();
    assert_eq!(h.len(), 4);
    for c in 0..4 {
        let q = cfg.qubit([1, 0, 1], c);
        let t = h.terms.iter().find(|t| t.ops.as_slice() == [Op::create(q), Op::annihilate(q)]).unwrap();
        assert!((t.coeff - C64::new(-1.0, 0.0)).norm() < 1e-14);
    }
    cfg.external_potential = Some(BTreeMap::new());
    assert!(build_external_lattice(&cfg).unwrap().is_empty());
    cfg.external_potential = None;
    assert_eq!(build_external_lattice(&cfg), Err(LatticeError::MissingPotential));
}

#[test]
fn interaction_metric_signs() {
    let cfg = LatticeConfig::new(2, 1.0, 1.0, 1.0);
    let h = build_interaction(&cfg);
    // build the same pair with mu = 0 only and mu = 3 only by hand and check
    // the spatial part carries the opposite sign on a component-diagonal term
    let (x, y) = ([0, 0, 0], [1, 0, 0]);
    let w = 2.0 / (8.0 * PI);
    // alpha_3 = [[0, sigma_3], [sigma_3, 0]] couples component 0 to 2
    let ops = [
        Op::create(cfg.qubit(x, 0)),
        Op::create(cfg.qubit(y, 0)),
        Op::annihilate(cfg.qubit(y, 2)),
        Op::annihilate(cfg.qubit(x, 2)),
    ];
    let t = h.terms.iter().find(|t| t.ops.as_slice() == ops).unwrap();
    // two orderings of the pair, metric -1, alpha_3 entries +1 each
    assert!((t.coeff - C64::new(-2.0 * w, 0.0)).norm() < 1e-12, "{}", t.coeff);
    assert!(!h.terms.iter().any(|t| {
        let m = t.modes();
        m.iter().all(|&q| q / 4 == m[0] / 4)
    }));
}
