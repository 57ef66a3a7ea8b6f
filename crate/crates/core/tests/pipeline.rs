//! End-to-end paths through the public API: tabulate → fit → evolve →
//! analyse → persist.

use pseudomode::analysis::{coherence_spectrum, rabi_splitting, Window};
use pseudomode::dynamics::{integrate_ide, source_term, TimeKernel};
use pseudomode::units::HBAR_EV_FS;
use pseudomode::{
    eval_lorentzians, fit_lorentzians, io, make_grid, tables, Evolution, FitOptions, InitialState,
    LorentzianSet, ScenarioConfig, UnitConventions,
};

fn h2(initial: InitialState, t_max: f64) -> ScenarioConfig {
    ScenarioConfig {
        kernel: tables::sphere_h2(),
        omega_e: 2.97,
        initial,
        t_max,
        dt: 0.25,
        grid: make_grid(2.4, 3.4, 2001).unwrap(),
        source_terms: 4,
    }
}

#[test]
fn refit_of_tabulated_model_reproduces_dynamics() {
    let set = tables::sphere_h2();
    let tab = eval_lorentzians(&set, &make_grid(2.4, 3.4, 2001).unwrap());
    let (refit, rep) = fit_lorentzians(&tab, 3, None, &FitOptions::default()).unwrap();
    assert!(rep.residual_rel_l2 < 1e-3, "{}", rep.residual_rel_l2);

    let a = Evolution::new(&h2(InitialState::ExcitedQubit, 200.0)).unwrap();
    let mut cfg = h2(InitialState::ExcitedQubit, 200.0);
    cfg.kernel = refit;
    let b = Evolution::new(&cfg).unwrap();
    for t in (0..=200).step_by(5).map(f64::from) {
        let d = (a.c_e0.eval(t).norm_sqr() - b.c_e0.eval(t).norm_sqr()).abs();
        assert!(d < 1e-3, "t={t}: {d}");
    }
}

#[test]
fn sourced_scenario_agrees_between_solvers() {
    let cfg = h2(
        InitialState::GaussianPhoton {
            omega_s: 2.97,
            sigma: 0.05,
        },
        150.0,
    );
    let evo = Evolution::new(&cfg).unwrap();
    let src = evo.sources.sources();
    let f = |t: f64| source_term(&src, cfg.omega_e, t / HBAR_EV_FS);
    let k = TimeKernel::exponential(cfg.kernel.clone(), cfg.omega_e);
    let tr = integrate_ide(&k, Some(&f), evo.sources.c_e0_init, cfg.t_max, 0.05).unwrap();
    let worst = tr
        .times
        .iter()
        .zip(&tr.c_e0)
        .map(|(&t, c)| (c - evo.c_e0.eval(t)).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
    // the photon is absorbed: the qubit population rises from zero
    let peak = tr.c_e0.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    assert!(peak > 0.05, "{peak}");
}

#[test]
fn strong_coupling_survives_csv_round_trip() {
    let evo = Evolution::new(&h2(InitialState::ExcitedQubit, 600.0)).unwrap();
    let tr = evo.trace();

    let mut buf = Vec::new();
    io::write_trace(&mut buf, &tr, "laplace", &[("scenario", "h2".into())]).unwrap();
    let (back, solver) = io::read_trace(buf.as_slice()).unwrap();
    assert_eq!(solver, "laplace");
    assert_eq!(back, tr);

    let mut buf = Vec::new();
    io::write_exponential_sum(&mut buf, &evo.c_e0, &[]).unwrap();
    assert_eq!(io::read_exponential_sum(buf.as_slice()).unwrap(), evo.c_e0);

    let split = rabi_splitting(&coherence_spectrum(&back, 2.97, Window::None, 8).unwrap()).unwrap();
    assert!((split - 0.134).abs() < 0.01, "{split}");
}

#[test]
fn ingested_j_mu_spectrum_is_rescaled_before_fitting() {
    // a J_mu-convention spectrum with eps_b = 4 is K·8/2 = 4K
    let k = LorentzianSet::single(0.003, 0.03, 2.4).unwrap();
    let mut text = String::from("energy_eV J_mu\n");
    for e in make_grid(2.0, 2.8, 801).unwrap().values() {
        text.push_str(&format!("{e} {}\n", 4.0 * k.eval(*e)));
    }
    let tab = io::ingest_tabulated_kernel(text.as_bytes(), Some(4.0)).unwrap();
    let (fit, _) = fit_lorentzians(&tab, 1, None, &FitOptions::default()).unwrap();
    let t = fit.terms()[0];
    assert!((t.area / 0.003 - 1.0).abs() < 0.02, "{}", t.area);
    assert!((t.center - 2.4).abs() < 1e-6 && (t.half_width - 0.03).abs() < 1e-6);

    let mut buf = Vec::new();
    let conv = UnitConventions::default();
    io::write_lorentzians(&mut buf, &fit, &conv, &[]).unwrap();
    let back = io::read_lorentzians(buf.as_slice(), &conv).unwrap();
    assert!((back.terms()[0].area - t.area).abs() < 1e-15);
}
