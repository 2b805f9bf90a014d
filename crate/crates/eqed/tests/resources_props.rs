use std::f64::consts::PI;

use eqed::lattice::{build_free, build_mass, LatticeConfig};
use eqed::resources::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn qpe_plan_closes_error_budget(log_chi in -2.0f64..8.0, log_eps in -5.0f64..-0.5) {
        let chi = 10f64.powf(log_chi);
        let eps = 10f64.powf(log_eps);
        let p = qpe_plan(chi, eps).unwrap();
        // substituting t and n back gives pi / (t 2^n), which the ceiling keeps below target
        prop_assert!((p.rms_error() - p.achieved_epsilon).abs() <= 1e-12 * p.achieved_epsilon);
        prop_assert!(p.achieved_epsilon <= eps * (1.0 + 1e-12) || p.n_ancilla == 1);
        // step size: chi t^3 2^{n-1} = pi sqrt 3
        let lhs = chi * p.t.powi(3) * 2f64.powi(p.n_ancilla as i32 - 1);
        prop_assert!((lhs - PI * 3f64.sqrt()).abs() <= 1e-10);
        prop_assert_eq!(p.eps_ts, p.eps_syn);
    }

    #[test]
    fn qpe_plan_monotone(log_chi in -1.0f64..6.0, log_eps in -4.0f64..-1.0, f in 1.0f64..50.0) {
        let chi = 10f64.powf(log_chi);
        let eps = 10f64.powf(log_eps);
        let base = qpe_plan(chi, eps).unwrap().n_ancilla;
        prop_assert!(qpe_plan(chi * f, eps).unwrap().n_ancilla >= base);
        prop_assert!(qpe_plan(chi, eps / f).unwrap().n_ancilla >= base);
    }

    #[test]
    fn counts_monotone(n in 1u64..400) {
        let (t0, r0) = trotter_step_counts(n);
        let (t1, r1) = trotter_step_counts(n + 1);
        prop_assert!(t1 > t0 && r1 > r0);
        let (a0, b0) = lattice_free_counts(n);
        let (a1, b1) = lattice_free_counts(n + 1);
        prop_assert!(a1 > a0 && b1 > b0);
        prop_assert!(t_count(r1, 10) >= t_count(r0, 10));
        prop_assert!(t_count(r0, 11) >= t_count(r0, 10));
    }
}

/// log-domain recomputation of the ancilla count, step size and T count
fn t_count_oracle(n_s: f64, eps: f64) -> (u32, f64) {
    let chi = 0.3 * n_s.powf(4.3);
    let log2_arg = (PI.log2() * 2.0 + chi.log2() - 1.0 - 0.5 * 3f64.log2() - 3.0 * eps.log2()) / 2.0;
    let n = log2_arg.ceil() as i32;
    let rot = 16.0 * (2.0 * n_s + 9.0 * n_s.powi(3));
    let syn = PI * 3f64.sqrt() * 2f64.powi(-n - 2);
    (n as u32, 1.15 * 2f64.powi(n) * rot * (rot.log2() - syn.log2()))
}

#[test]
fn momentum_qpe_headline_inputs() {
    for n_s in [20u64, 100] {
        let r = qpe_report(n_s, 1.6e-3, 0.3, 4.3).unwrap();
        let (n, nt) = t_count_oracle(n_s as f64, 1.6e-3);
        assert_eq!(r.plan.n_ancilla, n);
        assert!(((r.n_t_gates as f64) - nt).abs() <= 1e-9 * nt + 1.0);
        assert_eq!(r.qubits, 4 * n_s);
        assert_eq!(r.n_rot_total, (r.n_rot_per_step as u128) << n);
    }
    assert_eq!(qpe_report(20, 1.6e-3, 0.3, 4.3).unwrap().plan.n_ancilla, 24);
    assert_eq!(qpe_report(100, 1.6e-3, 0.3, 4.3).unwrap().plan.n_ancilla, 29);
}

#[test]
fn sweep_rows_match_reports() {
    let rows = sweep(&[4, 8], &[1e-2, 1e-3], 0.3, 4.3).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let rep = qpe_report(r.n_s, r.epsilon, 0.3, 4.3).unwrap();
        assert_eq!(r.n_t, rep.n_t_gates);
        assert_eq!(r.n_ancilla, rep.plan.n_ancilla);
    }
    assert!(qpe_plan(0.0, 1e-3).is_err());
    assert!(qpe_plan(1.0, -1e-3).is_err());
}

#[test]
fn dirac_energy_nonrelativistic_limit() {
    for z in 1..=5u32 {
        let e = dirac_energy(z, 1, 0.5).unwrap();
        let nr = -((z * z) as f64) / 2.0;
        assert!(((e - nr) / nr).abs() < 0.01, "Z={z}: {e}");
    }
    // closed form for the 1s level: c^2 (sqrt(1 - Z^2 alpha^2) - 1)
    let za = 79.0 / C_AU;
    let want = C_AU * C_AU * ((1.0 - za * za).sqrt() - 1.0);
    assert!((dirac_energy(79, 1, 0.5).unwrap() - want).abs() < 1e-9 * want.abs());
}

#[test]
fn gold_cutoff_conventions() {
    #[allow(clippy::approx_constant)]
    let l = 2.0 * 3.14; // twice the gold radius in bohr
    let h = planewave_cutoff(79, 1, 0.5, l, EnergyUnit::Hartree).unwrap();
    assert!((h.e_cut - 3434.59).abs() < 0.01);
    let want = l.powi(3) / (2.0 * PI * PI) * h.e_cut.powf(1.5);
    assert!((h.n_pw - want).abs() < 1e-9 * want);
    assert_eq!(h.logical_qubits, 4 * h.n_pw.ceil() as u64);
    let (all, best) = cutoff_conventions(79, 1, 0.5, l, 3.08e7).unwrap();
    assert_eq!(all.len(), 3);
    assert_eq!(all[best].unit, EnergyUnit::Rydberg);
    let ry = &all[1];
    assert!((ry.n_pw / h.n_pw - 2f64.powf(1.5)).abs() < 1e-12);
}

#[test]
fn supercritical_and_bad_inputs() {
    assert!(matches!(planewave_cutoff(140, 1, 0.5, 1.0, EnergyUnit::Hartree), Err(ResourceError::SupercriticalZ(_))));
    assert!(planewave_cutoff(79, 1, 0.5, 0.0, EnergyUnit::Hartree).is_err());
    // j = 3/2 survives beyond Z alpha = 1
    assert!(dirac_energy(140, 2, 1.5).is_ok());
}

#[test]
fn lambda_mass_term() {
    for (n, m) in [(2usize, 1.0), (2, 0.37), (4, 2.0)] {
        let cfg = LatticeConfig::new(n, 1.0, m, 0.3);
        let n_s = cfg.n_sites() as f64;
        let emp = lambda_empirical(&build_mass(&cfg));
        // m (n0 + n1 - n2 - n3) = (m/2)(-Z0 - Z1 + Z2 + Z3) per site
        assert!((emp.pauli_one_norm - 2.0 * m * n_s).abs() < 1e-10);
        let closed = lambda_pos(&LambdaParams { n_s, m, e: 0.3, l: 1.0, a_max: 0.0 });
        assert!((closed.mass - m * n_s).abs() < 1e-12);
        assert_eq!(emp.unique_coefficients, 2);
    }
}

#[test]
fn lambda_slac_scaling() {
    // empirical / closed-form ratio stays bounded between n_side = 2 and 4
    let ratio = |n: usize| {
        let cfg = LatticeConfig::new(n, 1.0, 0.0, 0.3);
        let emp = lambda_empirical(&build_free(&cfg).unwrap()).pauli_one_norm;
        let p = LambdaParams { n_s: cfg.n_sites() as f64, m: 0.0, e: 0.3, l: 1.0, a_max: 0.0 };
        emp / lambda_pos(&p).slac
    };
    let (a, b) = (ratio(2), ratio(4));
    assert!(a > 0.0 && b > 0.0);
    assert!((b / a).ln().abs() < 2f64.ln() * 3.0, "{a} {b}");
}
