use eqed::spinor::*;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_p(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]
}

#[test]
fn clifford_relations() {
    let g = GammaSet::dirac();
    for mu in 0..4 {
        for nu in 0..4 {
            let anti = g.gamma[mu] * g.gamma[nu] + g.gamma[nu] * g.gamma[mu];
            let want = if mu == nu { 2.0 * METRIC[mu] } else { 0.0 };
            for r in 0..4 {
                for col in 0..4 {
                    let e = if r == col { want } else { 0.0 };
                    assert!((anti[(r, col)] - C64::new(e, 0.0)).norm() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn normalization_at_random_momenta() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = GammaSet::dirac();
    for _ in 0..1000 {
        let p = random_p(&mut rng);
        let m = rng.gen_range(0.1..3.0);
        let e = dispersion(p, m);
        for kind in [SpinorKind::U1, SpinorKind::U2, SpinorKind::V1, SpinorKind::V2] {
            let s = spinor(kind, p, m);
            let dag = bilinear(&s, &[], &s, false);
            assert!((dag.re - 2.0 * e).abs() < 1e-10 * e && dag.im.abs() < 1e-10 * e);
            let bar = bilinear(&s, &[], &s, true);
            let want = if matches!(kind, SpinorKind::U1 | SpinorKind::U2) { 2.0 * m } else { -2.0 * m };
            assert!((bar - C64::new(want, 0.0)).norm() < 1e-10 * e);
        }
        let u1 = spinor(SpinorKind::U1, p, m);
        let u2 = spinor(SpinorKind::U2, p, m);
        assert!(bilinear(&u1, &[], &u2, false).norm() < 1e-10 * e);
        // u and v of opposite momentum are orthogonal under u^dagger v
        let v_neg = spinor(SpinorKind::V1, [-p[0], -p[1], -p[2]], m);
        assert!(bilinear(&u1, &[], &v_neg, false).norm() < 1e-10 * e);
        // barred current of a spinor with itself is 2 p^mu
        let j = current(&g, &u1, &u1);
        assert!((j[0].re - 2.0 * e).abs() < 1e-9 * e);
        for k in 0..3 {
            assert!((j[k + 1].re - 2.0 * p[k]).abs() < 1e-9 * e);
        }
    }
}

#[test]
fn completeness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = GammaSet::dirac();
    for _ in 0..100 {
        let p = random_p(&mut rng);
        let m = rng.gen_range(0.1..3.0);
        let e = dispersion(p, m);
        let pslash = g.gamma[0] * C64::new(e, 0.0) - g.gamma[1] * C64::new(p[0], 0.0)
            - g.gamma[2] * C64::new(p[1], 0.0)
            - g.gamma[3] * C64::new(p[2], 0.0);
        let id = M4::identity() * C64::new(m, 0.0);
        let mut su = M4::zeros();
        let mut sv = M4::zeros();
        for kind in [SpinorKind::U1, SpinorKind::U2] {
            let s = spinor(kind, p, m).components;
            su += s * (s.adjoint() * g.gamma[0]);
        }
        for kind in [SpinorKind::V1, SpinorKind::V2] {
            let s = spinor(kind, p, m).components;
            sv += s * (s.adjoint() * g.gamma[0]);
        }
        assert!((su - (pslash + id)).norm() < 1e-10 * e);
        assert!((sv - (pslash - id)).norm() < 1e-10 * e);
    }
}
