//! Orchestration of kernels, fits, dynamics and analyses for one config.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use pseudomode::analysis::{
    beating_period, coherence_spectrum, crossover_scan, interference_map, NodeOptions, Window,
    FWHM_PER_SIGMA,
};
use pseudomode::dynamics::{
    calibrate_drive, integrate_ide, source_term, Evolution, InitialState, ScenarioConfig,
    TimeKernel,
};
use pseudomode::nanophotonics::{kernel_spectrum, Dipole, DrudeMetal, SphereGeometry};
use pseudomode::units::HBAR_EV_FS;
use pseudomode::{
    eval_lorentzians, fit_lorentzians, io, make_grid, tables, EnergyGrid, FitOptions,
    LorentzianSet, TabulatedSpectrum, UnitConventions,
};

use crate::config::{GridSpec, KernelSpec, RunConfig, ScenarioSpec, SolverChoice};
use crate::error::CliError;

/// What a command produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub kernels: bool,
    pub fits: bool,
    pub evolve: bool,
    pub maps: bool,
    pub scan: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        kernels: true,
        fits: true,
        evolve: true,
        maps: true,
        scan: true,
    };
    pub const NONE: Stages = Stages {
        kernels: false,
        fits: false,
        evolve: false,
        maps: false,
        scan: false,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub pseudomode: String,
    pub csv_schema: u32,
}

/// Record of one invocation, written as `manifest.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario_id: String,
    pub command: String,
    /// SHA-256 of the canonical effective configuration.
    pub config_hash: String,
    pub solver: SolverChoice,
    pub outputs: Vec<String>,
    /// Calibrated drive amplitudes (Hz^1/2) per scenario.
    pub calibrated_d0: BTreeMap<String, f64>,
    pub versions: Versions,
    /// Seconds since the Unix epoch; the only non-reproducible field.
    pub created_unix: u64,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    Sha256::digest(cfg.canonical().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Kernel {
    set: LorentzianSet,
    tabulated: TabulatedSpectrum,
    meta: Vec<(&'static str, String)>,
}

pub struct Runner<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    outputs: Vec<String>,
    calibrated: BTreeMap<String, f64>,
}

fn grid(g: &GridSpec) -> Result<EnergyGrid, CliError> {
    Ok(make_grid(g.min, g.max, g.n)?)
}

/// Kernel centers ± 0.5 eV at 0.5 meV spacing.
fn default_grid(set: &LorentzianSet) -> Result<EnergyGrid, CliError> {
    let lo = set
        .terms()
        .iter()
        .map(|t| t.center)
        .fold(f64::INFINITY, f64::min);
    let hi = set
        .terms()
        .iter()
        .map(|t| t.center)
        .fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = ((lo - 0.5).max(0.05), hi + 0.5);
    Ok(make_grid(lo, hi, ((hi - lo) / 5e-4).round() as usize + 1)?)
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a RunConfig, out: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out)
            .map_err(|e| CliError::Output(format!("{}: {e}", out.display())))?;
        Ok(Self {
            cfg,
            out: out.to_path_buf(),
            outputs: Vec::new(),
            calibrated: BTreeMap::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> pseudomode::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.out.join(name);
        let file = File::create(&path)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        std::io::Write::flush(&mut w)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn build_kernel(&self, name: &str) -> Result<Kernel, CliError> {
        let spec = &self.cfg.kernels[name];
        let conv = UnitConventions::default();
        let fit = |tab: &TabulatedSpectrum, n: usize| -> Result<LorentzianSet, CliError> {
            let (set, rep) = fit_lorentzians(tab, n, None, &FitOptions::default())?;
            if !rep.success {
                log::warn!(
                    "kernel '{name}': fit residual {:.3} above threshold",
                    rep.residual_rel_l2
                );
            }
            Ok(set.canonical())
        };
        Ok(match spec {
            KernelSpec::Table { table } => {
                let set = match table.as_str() {
                    "sphere_h2" => tables::sphere_h2(),
                    "sphere_h10" => tables::sphere_h10(),
                    _ => tables::npom(),
                };
                let tabulated = eval_lorentzians(&set, &default_grid(&set)?);
                Kernel {
                    set,
                    tabulated,
                    meta: vec![("source", format!("table {table}"))],
                }
            }
            KernelSpec::Lorentzians { path } => {
                let f = File::open(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let set = io::read_lorentzians(f, &conv)?;
                let tabulated = eval_lorentzians(&set, &default_grid(&set)?);
                Kernel {
                    set,
                    tabulated,
                    meta: vec![("source", format!("lorentzians {}", path.display()))],
                }
            }
            KernelSpec::Mie {
                radius_nm,
                gap_nm,
                eps_background,
                d_eg_debye,
                metal,
                grid: g,
                fit_terms,
            } => {
                let geom = SphereGeometry {
                    radius: *radius_nm,
                    gap: *gap_nm,
                    eps_background: *eps_background,
                };
                let m = DrudeMetal {
                    eps_inf: metal.eps_inf,
                    omega_p: metal.omega_p,
                    gamma: metal.gamma,
                };
                let dip = Dipole {
                    d_eg: *d_eg_debye,
                    omega_e: 0.5 * (g.min + g.max),
                };
                let tabulated = kernel_spectrum(&geom, &m, &dip, &grid(g)?)?;
                let set = fit(&tabulated, *fit_terms)?;
                Kernel {
                    set,
                    tabulated,
                    meta: vec![
                        ("source", "mie".into()),
                        ("radius_nm", radius_nm.to_string()),
                        ("gap_nm", gap_nm.to_string()),
                        ("eps_background", eps_background.to_string()),
                        ("d_eg_debye", d_eg_debye.to_string()),
                        ("eps_inf", m.eps_inf.to_string()),
                        ("omega_p_eV", m.omega_p.to_string()),
                        ("gamma_eV", m.gamma.to_string()),
                    ],
                }
            }
            KernelSpec::Tabulated {
                path,
                eps_background,
                fit_terms,
            } => {
                let f = File::open(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let tabulated = io::ingest_tabulated_kernel(f, *eps_background)?;
                let set = fit(&tabulated, *fit_terms)?;
                Kernel {
                    set,
                    tabulated,
                    meta: vec![
                        ("source", format!("tabulated {}", path.display())),
                        (
                            "rescale",
                            eps_background.map_or("none".into(), |e| format!("sqrt({e})/8")),
                        ),
                    ],
                }
            }
        })
    }

    /// Runs the requested stages.
    pub fn run(&mut self, stages: Stages) -> Result<(), CliError> {
        let cfg = self.cfg;
        let mut needed: Vec<&str> = cfg.kernels.keys().map(String::as_str).collect();
        if !(stages.kernels || stages.fits) {
            needed.retain(|k| {
                cfg.scenarios.iter().any(|s| s.kernel == *k)
                    || cfg.scan.as_ref().is_some_and(|s| s.kernel == *k)
            });
        }
        let mut kernels = BTreeMap::new();
        for name in needed {
            let k = self.build_kernel(name)?;
            if stages.kernels {
                self.write(&format!("kernel_{name}.csv"), |w| {
                    io::write_kernel(w, &k.tabulated, &k.meta)
                })?;
            }
            if stages.fits {
                let conv = UnitConventions::default();
                self.write(&format!("fit_{name}.csv"), |w| {
                    io::write_lorentzians(w, &k.set, &conv, &[("kernel", name.to_string())])
                })?;
            }
            kernels.insert(name.to_string(), k);
        }

        for s in &cfg.scenarios {
            let run_evolve = stages.evolve;
            let run_map = stages.maps && s.map.is_some();
            if !(run_evolve || run_map) {
                continue;
            }
            let set = kernels[&s.kernel].set.clone();
            self.scenario(s, set, run_evolve, run_map)?;
        }

        if stages.scan {
            if let Some(sc) = &cfg.scan {
                let set = kernels[&sc.kernel].set.clone();
                let base = ScenarioConfig {
                    grid: default_grid(&set)?,
                    kernel: set,
                    omega_e: sc.omega_e,
                    initial: InitialState::ExcitedQubit,
                    t_max: cfg.solver.t_max,
                    dt: cfg.solver.dt,
                    source_terms: cfg.solver.source_terms,
                };
                let sigmas: Vec<f64> = sc
                    .ratios
                    .iter()
                    .map(|r| r * sc.kernel_fwhm / FWHM_PER_SIGMA)
                    .collect();
                let scan = crossover_scan(
                    &base,
                    &sigmas,
                    sc.splitting,
                    sc.kernel_fwhm,
                    Window::None,
                    8,
                )?;
                let meta = [
                    ("omega_e_eV", sc.omega_e.to_string()),
                    ("splitting_eV", sc.splitting.to_string()),
                    ("kernel_fwhm_eV", sc.kernel_fwhm.to_string()),
                ];
                self.write("scan.csv", |w| io::write_scan(w, &scan.rows, &meta))?;
                for (i, (row, spec)) in scan.rows.iter().zip(&scan.spectra).enumerate() {
                    let m = [("sigma_eV", row.sigma.to_string())];
                    self.write(&format!("scan_spectrum_{i}.csv"), |w| {
                        io::write_spectrum(w, spec, &m)
                    })?;
                }
            }
            if let Some(b) = &cfg.beating {
                let rows = beating_rows(b, cfg.solver.source_terms)?;
                let meta = [
                    ("omega_e_eV", b.omega_e.to_string()),
                    ("k_max_eV", b.k_max.to_string()),
                ];
                self.write("beating.csv", |w| io::write_beating(w, &rows, &meta))?;
            }
        }
        Ok(())
    }

    fn scenario(
        &mut self,
        s: &ScenarioSpec,
        kernel: LorentzianSet,
        evolve: bool,
        map: bool,
    ) -> Result<(), CliError> {
        let cfg = self.cfg;
        let fit_grid = match &s.fit_grid {
            Some(g) => grid(g)?,
            None => default_grid(&kernel)?,
        };
        let sc = ScenarioConfig {
            kernel: kernel.clone(),
            omega_e: s.omega_e,
            initial: s.initial,
            t_max: cfg.solver.t_max,
            dt: cfg.solver.dt,
            grid: fit_grid,
            source_terms: cfg.solver.source_terms,
        };
        let evo = match s.calibrate_norm {
            Some(bound) => {
                let (d0, evo) = calibrate_drive(&sc, bound)?;
                self.calibrated.insert(s.name.clone(), d0);
                evo
            }
            None => Evolution::new(&sc)?,
        };
        let name = &s.name;
        let meta = vec![
            ("scenario", name.clone()),
            ("omega_e_eV", s.omega_e.to_string()),
        ];

        if evolve {
            let solver = cfg.solver.kind;
            if solver.laplace() {
                let tr = evo.trace();
                self.write(&format!("traces_{name}.csv"), |w| {
                    io::write_trace(w, &tr, "laplace", &meta)
                })?;
                self.write(&format!("expsum_{name}.csv"), |w| {
                    io::write_exponential_sum(w, &evo.c_e0, &meta)
                })?;
                if s.spectrum {
                    let spec = coherence_spectrum(&tr, s.omega_e, Window::None, 8)?;
                    self.write(&format!("spectrum_{name}.csv"), |w| {
                        io::write_spectrum(w, &spec, &meta)
                    })?;
                }
            }
            if solver.volterra() {
                let k = TimeKernel::exponential(kernel, s.omega_e);
                let src = evo.sources.sources();
                let we = s.omega_e;
                let f = move |t: f64| source_term(&src, we, t / HBAR_EV_FS);
                let source: Option<&(dyn Fn(f64) -> pseudomode::Complex64 + Sync)> =
                    if evo.sources.sources().is_empty() {
                        None
                    } else {
                        Some(&f)
                    };
                let tr = integrate_ide(&k, source, evo.sources.c_e0_init, sc.t_max, sc.dt)?;
                self.write(&format!("traces_{name}_volterra.csv"), |w| {
                    io::write_trace(w, &tr, "volterra", &meta)
                })?;
                if s.spectrum && !solver.laplace() {
                    let spec = coherence_spectrum(&tr, s.omega_e, Window::None, 8)?;
                    self.write(&format!("spectrum_{name}.csv"), |w| {
                        io::write_spectrum(w, &spec, &meta)
                    })?;
                }
            }
        }

        if map {
            let m = s.map.as_ref().expect("checked by caller");
            let g = grid(&m.grid)?;
            let n = (m.t_max / m.dt).round() as usize;
            let times: Vec<f64> = (0..=n).map(|i| i as f64 * m.dt).collect();
            let field = evo.photon_field(&g, &times);
            self.write(&format!("map_{name}.csv"), |w| {
                io::write_map(w, &field, &meta)
            })?;
            let nodes = interference_map(&field, s.omega_e, &NodeOptions::default())?;
            let mut nm = vec![("scenario", name.clone())];
            if let Some(b) = m.b {
                nm.push(("b_eV", b.to_string()));
                nm.push((
                    "matching_segments",
                    nodes.matching_segments(b, 0.1, 0.95).len().to_string(),
                ));
                nm.push((
                    "node_contrast",
                    nodes.node_contrast(b, 0.1, 0.95).to_string(),
                ));
            }
            self.write(&format!("nodelines_{name}.csv"), |w| {
                io::write_node_lines(w, &nodes, &nm)
            })?;
        }
        Ok(())
    }

    pub fn manifest(&self, command: &str) -> RunManifest {
        RunManifest {
            scenario_id: self.cfg.id.clone(),
            command: command.to_string(),
            config_hash: config_hash(self.cfg),
            solver: self.cfg.solver.kind,
            outputs: self.outputs.clone(),
            calibrated_d0: self.calibrated.clone(),
            versions: Versions {
                pseudomode: env!("CARGO_PKG_VERSION").to_string(),
                csv_schema: io::SCHEMA_VERSION,
            },
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn write_manifest(&self, command: &str) -> Result<RunManifest, CliError> {
        let m = self.manifest(command);
        let text = toml::to_string(&m).map_err(|e| CliError::Output(e.to_string()))?;
        let path = self.out.join("manifest.toml");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        Ok(m)
    }
}

fn beating_rows(
    b: &crate::config::BeatingSpec,
    source_terms: usize,
) -> Result<Vec<(f64, f64, f64, f64)>, CliError> {
    let probes = EnergyGrid::from_values({
        let mut p = b.probes.clone();
        p.sort_by(f64::total_cmp);
        p
    })?;
    let n = (b.t_window / b.dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * b.dt).collect();
    let mut rows = Vec::new();
    for &area in &b.areas {
        let width = area / (std::f64::consts::PI * b.k_max);
        let set = LorentzianSet::single(area, width, b.omega_e)?;
        let cfg = ScenarioConfig {
            grid: default_grid(&set)?,
            kernel: set,
            omega_e: b.omega_e,
            initial: InitialState::ExcitedQubit,
            t_max: b.t_window,
            dt: b.dt,
            source_terms,
        };
        let field = Evolution::new(&cfg)?.photon_field(&probes, &times);
        for &p in probes.values() {
            rows.push((area, width, p, beating_period(&field, p, b.t_window)?));
        }
    }
    Ok(rows)
}
