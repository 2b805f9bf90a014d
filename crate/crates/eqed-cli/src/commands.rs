//! Subcommand implementations.

use eqed::fermion::{check_hermitian, conserves, jordan_wigner, FermionPolynomial, ModeSpace};
use eqed::lattice::{build_lattice, LatticeError};
use eqed::mc::{power_law_fit, run_campaign, McConfig, McSystem};
use eqed::momentum::{build_rellium, charge_weight, GridSpec, MomentumBasis, RelliumConfig};
use eqed::resources::{cutoff_conventions, lattice_free_counts, sweep, trotter_step_counts};
use eqed::stateprep::{mrci_determinant_count, slater_state_circuit, ActiveSpaceSpec, PositronFill, SlaterSpec};
use eqed::trotter::{blocks, compile_trotter, second_order_bound, sweep_counts, GateCounts, Grouping, TrotterPlan};
use eqed::verify::{appendix_table_check, measure_trotter_error, CIRCUIT_MAX_QUBITS};
use serde_json::{json, Value};

use crate::config::{physical_charge, Basis, Fill, RunConfig, SystemSection, MAX_GRID_POINTS};
use crate::output::OutputDir;
use crate::{Cli, CliError, Command};

/// Tolerance of the appendix table identities.
pub const APPENDIX_TOL: f64 = 1e-12;

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let out = OutputDir::create(dir, cfg.output.formats.clone())?;
    match cli.command {
        Command::Build => cmd_build(&cfg, &out),
        Command::Compile => cmd_compile(&cfg, &out, cli.verify),
        Command::Estimate => cmd_estimate(&cfg, &out),
        Command::Mc => cmd_mc(&cfg, &out, cli.seed.unwrap_or(cfg.mc.seed)),
        Command::Stateprep => cmd_stateprep(&cfg, &out),
        Command::Cutoff => cmd_cutoff(&cfg, &out),
        Command::VerifyAppendix => cmd_verify_appendix(&out),
    }
}

fn counts_json(c: &GateCounts) -> Value {
    json!({
        "rz": c.rz,
        "cnot": c.cnot,
        "h": c.h,
        "s": c.s,
        "x": c.x,
        "single_qubit": c.single_qubit(),
        "total": c.total(),
    })
}

pub struct Built {
    pub hamiltonian: FermionPolynomial,
    pub space: ModeSpace,
    pub qubits: usize,
    pub manifest: Value,
    pub hermitian: bool,
    pub charge_conserving: bool,
}

fn lattice_error(e: LatticeError) -> CliError {
    match e {
        LatticeError::OddLattice(_) => CliError::Config(format!("system.n_side: {e}")),
        e => CliError::Config(e.to_string()),
    }
}

pub fn build_system(sys: &SystemSection) -> Result<Built, CliError> {
    match sys.basis {
        Basis::Lattice => {
            let cfg = sys.lattice()?;
            let b = build_lattice(&cfg).map_err(lattice_error)?;
            let m = &b.manifest;
            let hermitian = check_hermitian(&b.hamiltonian);
            let charge_conserving = conserves(&b.hamiltonian, |_| 1);
            let manifest = json!({
                "basis": "lattice",
                "n_side": cfg.n_side,
                "n_sites": m.n_sites,
                "qubits": m.qubits,
                "blocks": {
                    "mass": m.mass_terms,
                    "slac": m.slac_terms,
                    "interaction": m.interaction_terms,
                    "external": m.external_terms,
                },
                "total_terms": m.total_terms,
                "checks": { "hermitian": hermitian, "charge_conserving": charge_conserving },
            });
            Ok(Built { space: cfg.mode_space(), qubits: m.qubits, hamiltonian: b.hamiltonian, manifest, hermitian, charge_conserving })
        }
        Basis::Momentum => {
            let cfg = sys.rellium()?;
            let (h, man) = build_rellium(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
            let points = cfg.grid.points(cfg.l).map_err(|e| CliError::Config(e.to_string()))?;
            let basis = MomentumBasis::new(points, cfg.l, cfg.m);
            let hermitian = check_hermitian(&h);
            let charge_conserving = conserves(&h, charge_weight(&basis));
            let number_ops: Vec<_> = h
                .terms
                .iter()
                .filter(|t| t.ops.len() == 2 && t.ops[0].mode() == t.ops[1].mode() && t.ops[0].dagger() && !t.ops[1].dagger())
                .collect();
            let free_pauli: usize = number_ops.iter().map(|t| jordan_wigner(t).len()).sum();
            let manifest = json!({
                "basis": "momentum",
                "grid_points": man.grid_points,
                "spin_orbitals": man.spin_orbitals,
                "qubits": man.spin_orbitals,
                "blocks": man.class_terms,
                "free_terms": number_ops.len(),
                "free_pauli_terms": free_pauli,
                "n_terms": man.n_terms,
                "n_terms_bound": man.n_terms_bound(),
                "total_terms": man.total_terms,
                "external_constant": [man.external_constant.re, man.external_constant.im],
                "checks": { "hermitian": hermitian, "charge_conserving": charge_conserving },
            });
            Ok(Built { space: basis.mode_space(), qubits: man.spin_orbitals, hamiltonian: h, manifest, hermitian, charge_conserving })
        }
    }
}

fn check_built(b: &Built) -> Result<(), CliError> {
    if !b.hermitian {
        return Err(CliError::Verification("Hamiltonian is not Hermitian".into()));
    }
    if !b.charge_conserving {
        return Err(CliError::Verification("Hamiltonian does not conserve charge".into()));
    }
    Ok(())
}

pub fn cmd_build(cfg: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let b = build_system(cfg.system()?)?;
    out.write("hamiltonian.dump", &b.hamiltonian.to_dump(&b.space))?;
    out.report("manifest", &b.manifest)?;
    check_built(&b)
}

pub fn cmd_compile(cfg: &RunConfig, out: &OutputDir, verify: bool) -> Result<(), CliError> {
    let sys = cfg.system()?;
    let b = build_system(sys)?;
    check_built(&b)?;
    let pauli = b.hamiltonian.jordan_wigner();
    let t = &cfg.trotter;
    let plan = TrotterPlan { grouping: Grouping::Families, dense_one_body: t.dense_one_body, ..TrotterPlan::new(t.order, t.dt, t.steps) };
    let trotter_err = |e: eqed::trotter::TrotterError| CliError::Config(format!("trotter: {e}"));
    let mut circ = compile_trotter(&pauli, &plan).map_err(trotter_err)?;
    circ.num_qubits = circ.num_qubits.max(b.qubits as u32);
    let per_sweep = sweep_counts(&pauli, plan.grouping, plan.dense_one_body).map_err(trotter_err)?;

    let formula = match sys.basis {
        Basis::Lattice if sys.e == 0.0 => {
            let n_s = b.qubits as u64 / 4;
            let (single, cnot) = lattice_free_counts(n_s);
            // the mass term is diagonal: one Z rotation per mode
            let mass = if sys.m != 0.0 { 4 * n_s } else { 0 };
            json!({
                "model": "lattice free",
                "n_s": n_s,
                "rotations": single,
                "mass_rotations": mass,
                "cnot": cnot,
                "rz_matches": per_sweep.rz as u64 == single + mass,
                "single_qubit_matches": per_sweep.single_qubit() as u64 == single + mass,
                "cnot_matches": per_sweep.cnot as u64 == cnot,
            })
        }
        Basis::Momentum => {
            let n_s = b.manifest["grid_points"].as_u64().unwrap_or(0);
            let (terms, rot) = trotter_step_counts(n_s);
            json!({ "model": "momentum upper bound", "n_s": n_s, "n_terms": terms, "rotations": rot })
        }
        Basis::Lattice => Value::Null,
    };

    let mut report = json!({
        "qubits": circ.num_qubits,
        "pauli_terms": pauli.len(),
        "plan": { "order": plan.order, "dt": plan.dt, "steps": plan.steps, "dense_one_body": plan.dense_one_body },
        "counts": counts_json(&circ.counts()),
        "per_sweep": counts_json(&per_sweep),
        "formula": formula,
    });

    let mut failure = None;
    if verify {
        let n = pauli.width().max(1);
        if n > CIRCUIT_MAX_QUBITS {
            eprintln!("warning: {n} qubits exceed the verification limit of {CIRCUIT_MAX_QUBITS}; skipping --verify");
            report["verify"] = json!({ "skipped": format!("{n} qubits > {CIRCUIT_MAX_QUBITS}") });
        } else {
            let err = measure_trotter_error(&pauli, &plan).map_err(|e| CliError::Other(e.to_string()))?;
            let bound = if plan.order == 2 {
                let bl = blocks(&pauli, plan.grouping, plan.dense_one_body).map_err(trotter_err)?;
                Some(plan.steps as f64 * second_order_bound(&bl, plan.dt).map_err(|e| CliError::Other(e.to_string()))?)
            } else {
                None
            };
            let pass = bound.map_or(true, |bd| err <= bd * (1.0 + 1e-9) + 1e-12);
            report["verify"] = json!({ "measured_error": err, "bound": bound, "pass": pass });
            if !pass {
                failure = Some(CliError::Verification(format!("Trotter error {err:e} exceeds the bound {:e}", bound.unwrap_or(0.0))));
            }
        }
    }
    out.write("circuit.txt", &circ.to_text())?;
    out.report("compile", &report)?;
    failure.map_or(Ok(()), Err)
}

pub fn cmd_estimate(cfg: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let e = &cfg.estimate;
    let rows = sweep(&e.n_s, &[cfg.qpe.epsilon], e.a, e.b).map_err(|err| CliError::Config(format!("estimate: {err}")))?;
    let mut csv = String::from("n_s,epsilon,n_ancilla,t,n_rot_per_step,n_t\n");
    for r in &rows {
        csv.push_str(&format!("{},{:e},{},{:.12e},{},{}\n", r.n_s, r.epsilon, r.n_ancilla, r.t, r.n_rot, r.n_t));
    }
    out.write("tgates.csv", &csv)?;
    out.report("gold_cutoff", &cutoff_report(cfg)?)
}

fn cutoff_report(cfg: &RunConfig) -> Result<Value, CliError> {
    let c = &cfg.cutoff;
    let (all, best) = cutoff_conventions(c.z, c.n, c.j, c.l, c.reference).map_err(|e| CliError::Config(format!("cutoff: {e}")))?;
    let conventions: Vec<Value> = all
        .iter()
        .map(|x| {
            json!({
                "unit": x.unit.name(),
                "e_cut": x.e_cut,
                "n_pw": x.n_pw,
                "logical_qubits": x.logical_qubits,
                "ratio_to_reference": x.n_pw / c.reference,
            })
        })
        .collect();
    Ok(json!({
        "Z": c.z,
        "n": c.n,
        "j": c.j,
        "L": c.l,
        "dirac_binding_hartree": all[0].e_1s,
        "reference_n_pw": c.reference,
        "conventions": conventions,
        "best_unit": all[best].unit.name(),
    }))
}

pub fn cmd_cutoff(cfg: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    out.report("cutoff", &cutoff_report(cfg)?)
}

pub fn cmd_mc(cfg: &RunConfig, out: &OutputDir, seed: u64) -> Result<(), CliError> {
    let (l, m, e) = match &cfg.system {
        Some(s) if s.basis == Basis::Momentum => (s.l, s.m, s.e),
        Some(_) => return Err(CliError::Config("system.basis: mc requires the momentum basis".into())),
        None => (1.0, 1.0, physical_charge()),
    };
    let mut systems = Vec::new();
    for &n in &cfg.mc.systems {
        if n > MAX_GRID_POINTS {
            return Err(CliError::ResourceLimit(format!("mc.systems: {n} grid points exceed the limit of {MAX_GRID_POINTS}")));
        }
        systems.push(McSystem { label: n.to_string(), config: RelliumConfig::new(l, GridSpec::NearestNonzero(n), m, e) });
    }
    let mc = McConfig { sample_counts: cfg.mc.sample_counts(), seed, systems };
    let res = run_campaign(&mc).map_err(|err| CliError::Config(format!("mc: {err}")))?;
    let mut csv = res.to_csv();
    // recover a known power law at this campaign's M values
    let mut ms: Vec<f64> = res.systems.iter().map(|s| s.m as f64).collect();
    ms.dedup();
    if ms.len() < 2 {
        ms = vec![10.0, 100.0, 1000.0];
    }
    let synthetic: Vec<(f64, f64)> = ms.iter().map(|&x| (x, 0.3 * x.powf(-0.9))).collect();
    if let Some(f) = power_law_fit(&synthetic) {
        csv.push_str(&format!("# selftest A=0.3 b=-0.9 recovered A={:.6e} b={:.6}\n", f.a, f.b));
    }
    out.write("mc.csv", &csv)?;
    Ok(())
}

pub fn cmd_stateprep(cfg: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let sp = cfg.stateprep.as_ref().ok_or_else(|| CliError::Config("stateprep: section is required".into()))?;
    let path = cfg.resolve(&sp.slater);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("stateprep.slater: {}: {e}", path.display())))?;
    let spec = SlaterSpec::from_csv(&text).map_err(|e| CliError::Config(format!("stateprep.slater: {e}")))?;
    let fill = match sp.fill {
        Fill::Unoccupied => PositronFill::Unoccupied,
        Fill::Occupied => PositronFill::Occupied,
    };
    let rep = slater_state_circuit(&spec, sp.n_positron, fill).map_err(|e| CliError::Config(format!("stateprep: {e}")))?;
    let mrci = match &sp.mrci {
        Some(m) => {
            let s = ActiveSpaceSpec { n_ras1: m.n_ras1, n_cas: m.n_cas, n_ras3: m.n_ras3, n_e: m.n_e, m_h: m.m_h, m_e: m.m_e };
            let n = mrci_determinant_count(&s).map_err(|e| CliError::Config(format!("stateprep.mrci: {e}")))?;
            Value::String(n.to_string())
        }
        None => Value::Null,
    };
    let report = json!({
        "n_s": rep.n_s,
        "n_f": rep.n_f,
        "n_positron": sp.n_positron,
        "qubits": rep.circuit.num_qubits,
        "givens_rotations": rep.rotations,
        "givens_bound": rep.bound,
        "counts": counts_json(&rep.circuit.counts()),
        "mrci_determinants": mrci,
    });
    out.write("stateprep_circuit.txt", &rep.circuit.to_text())?;
    out.report("stateprep", &report)
}

pub fn cmd_verify_appendix(out: &OutputDir) -> Result<(), CliError> {
    let rows = appendix_table_check().map_err(|e| CliError::Other(e.to_string()))?;
    let mut csv = String::from("word,image,sign,max_error\n");
    let mut worst: f64 = 0.0;
    for (w, d, s, err) in &rows {
        let sign = if *s < 0.0 { "-" } else { "+" };
        println!("G^dag {w} G = {sign}{d}  max_error={err:.3e}");
        csv.push_str(&format!("{w},{d},{sign}1,{err:.3e}\n"));
        worst = worst.max(*err);
    }
    out.write("appendix.csv", &csv)?;
    if worst > APPENDIX_TOL {
        return Err(CliError::Verification(format!("appendix table deviation {worst:e} > {APPENDIX_TOL:e}")));
    }
    Ok(())
}
