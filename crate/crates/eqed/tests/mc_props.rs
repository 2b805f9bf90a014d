use eqed::fermion::{FermionPolynomial, Op};
use eqed::mc::*;
use eqed::momentum::{build_rellium, GridSpec, RelliumConfig};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rellium(points: usize) -> FermionPolynomial {
    let pts: Vec<[i32; 3]> = GridSpec::Shells { max_norm2: 2, include_origin: false }.points(1.0).unwrap().into_iter().take(points).collect();
    build_rellium(&RelliumConfig::new(1.0, GridSpec::Explicit(pts), 1.0, 0.3)).unwrap().0
}

#[test]
fn trivial_triples_vanish() {
    let mut h = FermionPolynomial::zero();
    h.push(C64::new(1.0, 0.0), &[Op::create(0), Op::annihilate(0)]);
    h.push(C64::new(0.5, 0.0), &[Op::create(1), Op::annihilate(2)]);
    h.push(C64::new(0.5, 0.0), &[Op::create(3), Op::create(4), Op::annihilate(4), Op::annihilate(3)]);
    let t = TermTable::new(&h).unwrap();
    let diag = (0..t.len()).find(|&i| t.term(i).ops.len() == 2 && t.term(i).ops[0].mode() == t.term(i).ops[1].mode()).unwrap();
    assert_eq!(t.triple_norm(diag, diag, diag).unwrap(), 0.0);
    let (a, b) = ((0..t.len()).find(|&i| t.term(i).ops.len() == 4).unwrap(), diag);
    assert_eq!(t.triple_norm(a, b, a).unwrap(), 0.0);
    // [n_0, [n_0, a1^+ a2]] = 0 since mode 0 is untouched; overlapping pair is not
    let hop = (0..t.len()).find(|&i| t.term(i).ops.len() == 2 && t.term(i).ops[0].mode() != t.term(i).ops[1].mode()).unwrap();
    assert_eq!(t.triple_norm(diag, diag, hop).unwrap(), 0.0);
    assert!(TermTable::new(&FermionPolynomial::zero()).is_err());
}

#[test]
fn reduced_support_matches_full_register() {
    for points in [2, 3, 4] {
        let table = TermTable::new(&rellium(points)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(points as u64);
        let (mut checked, mut nonzero, mut drawn) = (0, 0, 0);
        while nonzero < 150 {
            drawn += 1;
            let (i, j, k) = table.draw(&mut rng);
            // bias towards overlapping triples so the check is not vacuous
            let k = if rng.gen_bool(0.5) { j } else { k };
            let i = if rng.gen_bool(0.5) { k } else { i };
            let a = table.triple_norm(i, j, k).unwrap();
            if a > 0.0 {
                nonzero += 1;
            }
            if let Some(b) = table.triple_norm_full(i, j, k).unwrap() {
                assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{points}: {a} vs {b}");
                checked += 1;
            }
        }
        // 12 modes or fewer always fit the dense limit
        if points <= 3 {
            assert_eq!(checked, drawn);
        }
        assert!(checked > 0);
    }
}

#[test]
fn weak_coupling_full_register_norms_are_relative() {
    // coefficients far below the Pauli zero tolerance must not be dropped
    let pts: Vec<[i32; 3]> = GridSpec::NearestNonzero(2).points(1.0).unwrap();
    let h = build_rellium(&RelliumConfig::new(1.0, GridSpec::Explicit(pts), 1.0, 1e-5)).unwrap().0;
    let table = TermTable::new(&h).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut nonzero = 0;
    while nonzero < 50 {
        let (i, j, k) = table.draw(&mut rng);
        let a = table.triple_norm(i, j, k).unwrap();
        if a == 0.0 {
            continue;
        }
        nonzero += 1;
        let b = table.triple_norm_full(i, j, k).unwrap().unwrap();
        assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
    }
}

#[test]
fn relabeling_preserves_samples() {
    let h = rellium(3);
    let n = 12u32;
    let perm: Vec<u32> = (0..n).map(|q| (q * 5 + 3) % n).collect();
    let a = TermTable::new(&h).unwrap();
    // same index sequence, each term relabeled
    let relabeled: Vec<FermionPolynomial> = (0..a.len())
        .map(|i| FermionPolynomial::from_terms(vec![a.term(i).clone()]).relabel(|q| perm[q as usize]).normal_ordered())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..400 {
        let (i, j, k) = a.draw(&mut rng);
        let x = a.triple_norm(i, j, k).unwrap();
        let tb = TermTableFromParts::build(&relabeled, i, j, k);
        assert!((x - tb).abs() <= 1e-10 * x.max(1.0));
    }
}

/// Evaluates the nested norm from three independently supplied terms.
struct TermTableFromParts;
impl TermTableFromParts {
    fn build(parts: &[FermionPolynomial], i: usize, j: usize, k: usize) -> f64 {
        let inner = eqed::fermion::commutator(&parts[j], &parts[k]);
        let outer = eqed::fermion::commutator(&parts[i], &inner);
        if outer.is_empty() {
            0.0
        } else {
            eqed::fermion::fock_spectral_norm(&outer).unwrap()
        }
    }
}

#[test]
fn mean_error_shrinks_as_inverse_sqrt() {
    let mut pts = Vec::new();
    for n in [64u64, 256, 1024, 4096] {
        let means: Vec<f64> = (0..200).map(|run| sample_mean(n, 17, run, |r| Ok(r.gen::<f64>())).unwrap().0).collect();
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt();
        pts.push((n as f64, sd));
    }
    let fit = power_law_fit(&pts).unwrap();
    assert!((fit.b + 0.5).abs() < 0.05, "{fit:?}");
}

#[test]
fn synthetic_fit_and_degenerate_campaign() {
    let pts: Vec<(f64, f64)> = (1..6).map(|i| (10f64.powi(i), 3.0 / 10f64.powi(i))).collect();
    let f = power_law_fit(&pts).unwrap();
    assert!((f.b + 1.0).abs() < 1e-6);
    let cfg = McConfig {
        sample_counts: vec![500, 1000],
        seed: 4,
        systems: vec![McSystem { label: "two".into(), config: RelliumConfig::new(1.0, GridSpec::Nearest(2), 1.0, 0.3) }],
    };
    let r = run_campaign(&cfg).unwrap();
    assert!(r.fit.is_none());
    assert_eq!(r.systems[0].samples_used, 1500);
    assert!(r.systems[0].mean >= 0.0);
    assert!(r.to_csv().starts_with("n_planewaves,M,samples,mean,stddev\n8,"));
    assert!(run_campaign(&McConfig { sample_counts: vec![10, 5], ..cfg.clone() }).is_err());
    assert!(run_campaign(&McConfig { systems: vec![], ..cfg }).is_err());
}

#[test]
fn campaign_is_deterministic_across_thread_counts() {
    let cfg = McConfig {
        sample_counts: vec![3000, 5000],
        seed: 11,
        systems: [2usize, 3]
            .iter()
            .map(|&n| McSystem { label: format!("{n}"), config: RelliumConfig::new(1.0, GridSpec::Nearest(n), 1.0, 0.3) })
            .collect(),
    };
    let a = run_campaign(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_campaign(&cfg).unwrap());
    assert_eq!(a, b);
    assert!(a.fit.is_some());
}
