use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use eqed::fermion::{check_hermitian, commutator, conserves, FermionPolynomial, Op, Ops};
use eqed::momentum::*;
use eqed::spinor::{bilinear, spinor, GammaSet, SpinorKind};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_vec(rng: &mut ChaCha8Rng, scale: f64) -> [f64; 3] {
    [0, 1, 2].map(|_| rng.gen_range(-scale..scale))
}

fn ee(p: [f64; 3], q: [f64; 3], r: [f64; 3], spins: [u8; 4]) -> AmplitudeRequest {
    let s = [0, 1, 2].map(|i| p[i] + q[i] - r[i]);
    AmplitudeRequest { process: Process::EeEe, momenta: [p, q, r, s], spins }
}

#[test]
fn ee_amplitude_is_antisymmetric_in_outgoing_legs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (p, q, r) = (rand_vec(&mut rng, 3.0), rand_vec(&mut rng, 3.0), rand_vec(&mut rng, 3.0));
        let sp: [u8; 4] = [0, 1, 2, 3].map(|_| rng.gen_range(1..=2));
        let a = ee(p, q, r, sp);
        let mut b = a.clone();
        b.momenta.swap(2, 3);
        b.spins.swap(2, 3);
        let (ma, mb) = (amplitude(&a, 1.0, 0.5).unwrap(), amplitude(&b, 1.0, 0.5).unwrap());
        assert!((ma + mb).norm() < 1e-10 * ma.norm().max(1.0), "{ma} {mb}");
    }
}

#[test]
fn zero_transfer_is_singular() {
    let p = [0.3, -0.2, 0.5];
    let q = [1.0, 0.0, -0.4];
    let req = ee(p, q, p, [1, 1, 1, 1]);
    assert_eq!(amplitude(&req, 1.0, 0.3), Err(MomentumError::SingularDenominator("direct")));
    let bad = AmplitudeRequest { momenta: [p, q, p, p], ..req };
    assert!(matches!(amplitude(&bad, 1.0, 0.3), Err(MomentumError::MomentumNotConserved(_))));
}

#[test]
fn nonrelativistic_limit_is_coulomb() {
    // |p|/m = 1e-3, e^2 = 4 pi: M / 4m^2 -> -(4 pi / |p3 - p1|^2 - 4 pi / |p4 - p1|^2 exchange)
    // with spin-conserving deltas; the minus sign is absorbed by the
    // a_s^+ a_r^+ operator order in the Hamiltonian
    let m = 1.0;
    let e = (4.0 * PI).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (p, q, r) = (rand_vec(&mut rng, 1e-3), rand_vec(&mut rng, 1e-3), rand_vec(&mut rng, 1e-3));
        let s = [0, 1, 2].map(|i| p[i] + q[i] - r[i]);
        let d2 = |a: [f64; 3], b: [f64; 3]| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>();
        for sp in [[1u8, 1, 1, 1], [1, 2, 1, 2], [2, 1, 1, 2]] {
            let got = amplitude(&ee(p, q, r, sp), m, e).unwrap() / (4.0 * m * m);
            let direct = if sp[2] == sp[0] && sp[3] == sp[1] { 4.0 * PI / d2(r, p) } else { 0.0 };
            let exch = if sp[3] == sp[0] && sp[2] == sp[1] { 4.0 * PI / d2(s, p) } else { 0.0 };
            let want = -(direct - exch);
            let scale = 4.0 * PI / d2(r, p).min(d2(s, p));
            assert!((got.re - want).abs() < 1e-2 * scale && got.im.abs() < 1e-2 * scale, "{sp:?}: {got} vs {want}");
        }
    }
}

#[test]
fn heavy_mass_two_body_terms_follow_jellium() {
    let points = GridSpec::Nearest(7).points(1.0).unwrap();
    let e = PI.sqrt();
    let m = 1e4;
    let mut cfg = RelliumConfig::new(1.0, GridSpec::Explicit(points.clone()), m, e);
    cfg.include_pair_terms = false;
    let (h, _) = build_rellium(&cfg).unwrap();
    let n_e = 2 * points.len() as u32;
    // electron-only 4-operator monomials, coefficient by coefficient. Each
    // channel gives e^2/pi times jellium; summing the antisymmetrized amplitude
    // over both outgoing labelings doubles that
    let rel: BTreeMap<Ops, C64> = h
        .terms
        .iter()
        .filter(|t| t.ops.len() == 4 && t.ops.iter().all(|o| o.mode() < n_e))
        .map(|t| (t.ops.clone(), t.coeff))
        .collect();
    let jel = jellium_unique(&points, 1.0);
    let scale = jel.values().fold(0.0f64, |a, c| a.max(c.norm()));
    let ratio = 2.0 * e * e / PI;
    for (ops, c) in &jel {
        let r = rel.get(ops).copied().unwrap_or_default();
        assert!((r - c * ratio).norm() < 1e-2 * scale, "{ops:?}: {r} vs {}", c * ratio);
    }
    for (ops, r) in &rel {
        if !jel.contains_key(ops) {
            assert!(r.norm() < 1e-2 * scale, "{ops:?}: {r}");
        }
    }
}

/// Jellium with each momentum transfer counted once.
fn jellium_unique(points: &[[i32; 3]], l: f64) -> BTreeMap<Ops, C64> {
    let idx: HashMap<[i32; 3], usize> = points.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut nus: Vec<[i32; 3]> = points.iter().flat_map(|a| points.iter().map(move |b| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])).collect();
    nus.sort();
    nus.dedup();
    let mode = |g: usize, s: usize| (2 * g + s) as u32;
    let mut h = FermionPolynomial::zero();
    for (pi, p) in points.iter().enumerate() {
        for (qi, q) in points.iter().enumerate() {
            for nu in &nus {
                if *nu == [0, 0, 0] {
                    continue;
                }
                let (Some(&a), Some(&b)) = (idx.get(&[q[0] + nu[0], q[1] + nu[1], q[2] + nu[2]]), idx.get(&[p[0] - nu[0], p[1] - nu[1], p[2] - nu[2]]))
                else {
                    continue;
                };
                let k2 = (2.0 * PI / l).powi(2) * (nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2]) as f64;
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        h.push(
                            C64::new(4.0 * PI / k2 / (2.0 * l.powi(3)), 0.0),
                            &[Op::create(mode(pi, s1)), Op::create(mode(qi, s2)), Op::annihilate(mode(a, s2)), Op::annihilate(mode(b, s1))],
                        );
                    }
                }
            }
        }
    }
    h.normal_ordered().terms.into_iter().map(|t| (t.ops, t.coeff)).collect()
}

#[test]
fn builds_are_hermitian_conserve_charge_and_momentum() {
    for n in 1..=8 {
        let cfg = RelliumConfig::new(1.0, GridSpec::Nearest(n), 1.0, 0.3);
        let basis = MomentumBasis::new(cfg.grid.points(1.0).unwrap(), 1.0, 1.0);
        let (h, man) = build_rellium_on(&basis, &cfg).unwrap();
        assert!(check_hermitian(&h), "n = {n}");
        assert!(conserves(&h, charge_weight(&basis)), "n = {n}");
        assert!(man.n_terms <= man.n_terms_bound());
        for t in &h.terms {
            let mut tot = [0i32; 3];
            for o in &t.ops {
                let g = (o.mode() as usize % (2 * n)) / 2;
                let s = if o.dagger() { 1 } else { -1 };
                for c in 0..3 {
                    tot[c] += s * basis.points[g][c];
                }
            }
            assert_eq!(tot, [0, 0, 0], "{:?}", t.ops);
        }
        if n <= 2 {
            let mut q = FermionPolynomial::zero();
            for m in 0..4 * n as u32 {
                q.push(C64::new(charge_weight(&basis)(m) as f64, 0.0), &[Op::create(m), Op::annihilate(m)]);
            }
            assert!(commutator(&h, &q).is_empty(), "n = {n}");
        }
    }
}

#[test]
fn pair_terms_toggle() {
    let mut cfg = RelliumConfig::new(1.0, GridSpec::Nearest(4), 1.0, 0.3);
    let number_preserving = |h: &FermionPolynomial| conserves(h, |_| 1);
    let (h, man) = build_rellium(&cfg).unwrap();
    assert!(!number_preserving(&h));
    assert!(man.class_terms["e->eep"] > 0 && man.class_terms["vac->eepp"] > 0);
    cfg.include_pair_terms = false;
    let (h, _) = build_rellium(&cfg).unwrap();
    assert!(number_preserving(&h));
}

#[test]
fn n_terms_within_bound_on_explicit_grids() {
    let four = vec![[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let eight: Vec<[i32; 3]> = (0..8).map(|i| [i & 1, (i >> 1) & 1, (i >> 2) & 1]).collect();
    for pts in [four, eight] {
        let n = pts.len();
        let cfg = RelliumConfig::new(1.0, GridSpec::Explicit(pts), 1.0, 0.3);
        let (_, man) = build_rellium(&cfg).unwrap();
        assert!(man.n_terms <= 2 * n + 9 * n * n * n, "{} > bound", man.n_terms);
        assert!(man.n_terms > 2 * n);
    }
}

#[test]
fn counterterms_keep_hermiticity_and_charge() {
    let mut cfg = RelliumConfig::new(1.0, GridSpec::Nearest(7), 1.0, 0.3);
    cfg.delta_m = 0.2;
    cfg.lambda_vac = 0.5;
    let basis = MomentumBasis::new(cfg.grid.points(1.0).unwrap(), 1.0, 1.0);
    let (h, man) = build_rellium_on(&basis, &cfg).unwrap();
    assert!(check_hermitian(&h));
    assert!(conserves(&h, charge_weight(&basis)));
    let c: C64 = h.terms.iter().filter(|t| t.ops.is_empty()).map(|t| t.coeff).sum();
    assert!((c - C64::new(3.5, 0.0)).norm() < 1e-12);
    assert!(man.class_terms["delta_m"] > 0);
}

fn external_cfg(pot: BTreeMap<[i32; 3], [C64; 4]>) -> RelliumConfig {
    let mut cfg = RelliumConfig::new(1.3, GridSpec::Nearest(7), 1.0, 0.4);
    cfg.external_potential = Some(pot);
    cfg
}

#[test]
fn external_potential_blocks() {
    let (h, c) = build_external_momentum(&external_cfg(BTreeMap::new())).unwrap();
    assert!(h.is_empty() && c == C64::new(0.0, 0.0));
    let zero = GridSpec::Nearest(7).points(1.3).unwrap().into_iter().map(|p| (p, [C64::new(0.0, 0.0); 4])).collect();
    assert!(build_external_momentum(&external_cfg(zero)).unwrap().0.is_empty());
    let mut none = external_cfg(BTreeMap::new());
    none.external_potential = None;
    assert_eq!(build_external_momentum(&none), Err(MomentumError::MissingPotential));

    // constant scalar potential at nu = 0
    let v0 = 0.7;
    let mut pot = BTreeMap::new();
    pot.insert([0, 0, 0], [C64::new(v0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    let cfg = external_cfg(pot);
    let basis = MomentumBasis::new(cfg.grid.points(cfg.l).unwrap(), cfg.l, cfg.m);
    let (h, _) = external_on(&basis, &cfg).unwrap();
    let g0 = GammaSet::dirac().gamma[0];
    for g in 0..basis.len() {
        let k = basis.k[g];
        for s1 in 1..=2u8 {
            for s2 in 1..=2u8 {
                let (u1, u2) = (spinor(SpinorKind::for_label(false, s1), k, 1.0), spinor(SpinorKind::for_label(false, s2), k, 1.0));
                let want = -cfg.e_charge * bilinear(&u2, &[g0], &u1, true) * v0 / (2.0 * basis.energy[g] * cfg.l.powi(3));
                let ops = [Op::create(basis.mode(false, g, s2 as usize - 1)), Op::annihilate(basis.mode(false, g, s1 as usize - 1))];
                let got = h.terms.iter().find(|t| t.ops.as_slice() == ops).map(|t| t.coeff).unwrap_or_default();
                assert!((got - want).norm() < 1e-12, "{got} vs {want}");
            }
        }
    }
    // a^+ a block is diagonal in momentum
    assert!(h.terms.iter().filter(|t| t.ops.len() == 2).all(|t| t.ops[0].mode() / 2 == t.ops[1].mode() / 2));
}

#[test]
fn random_real_potential_is_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pts = GridSpec::Nearest(19).points(1.0).unwrap();
    let mut pot: BTreeMap<[i32; 3], [C64; 4]> = BTreeMap::new();
    for p in &pts {
        if pot.contains_key(p) {
            continue;
        }
        let a = [0; 4].map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let m = [-p[0], -p[1], -p[2]];
        if m == *p {
            pot.insert(*p, a.map(|z| C64::new(z.re, 0.0)));
        } else {
            pot.insert(*p, a);
            pot.insert(m, a.map(|z| z.conj()));
        }
    }
    let mut cfg = RelliumConfig::new(1.0, GridSpec::Explicit(pts), 1.0, 0.3);
    cfg.external_potential = Some(pot);
    let (h, _) = build_external_momentum(&cfg).unwrap();
    assert!(!h.is_empty());
    assert!(check_hermitian(&h));
}
