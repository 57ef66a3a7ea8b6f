//! Run configuration: a TOML file with named kernels, scenarios and optional
//! scan/beating studies. Physical inputs are in eV, nm, fs and Debye;
//! Lorentzian areas are in THz² at the file boundary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pseudomode::dynamics::InitialState;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Laplace,
    Volterra,
    Both,
}

impl SolverChoice {
    pub fn laplace(self) -> bool {
        matches!(self, SolverChoice::Laplace | SolverChoice::Both)
    }

    pub fn volterra(self) -> bool {
        matches!(self, SolverChoice::Volterra | SolverChoice::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetalSpec {
    pub eps_inf: f64,
    pub omega_p: f64,
    pub gamma: f64,
}

impl Default for MetalSpec {
    fn default() -> Self {
        let s = pseudomode::nanophotonics::DrudeMetal::SILVER;
        Self {
            eps_inf: s.eps_inf,
            omega_p: s.omega_p,
            gamma: s.gamma,
        }
    }
}

/// Where a kernel comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// A bundled pseudo-mode table: `sphere_h2`, `sphere_h10` or `npom`.
    Table { table: String },
    /// Lorentzian rows (A_THz2, B_eV, Omega_eV) from a schema-tagged CSV.
    Lorentzians { path: PathBuf },
    /// Mie kernel of a Drude sphere, fitted with `fit_terms` Lorentzians.
    Mie {
        radius_nm: f64,
        gap_nm: f64,
        #[serde(default = "one")]
        eps_background: f64,
        d_eg_debye: f64,
        #[serde(default)]
        metal: MetalSpec,
        grid: GridSpec,
        fit_terms: usize,
    },
    /// User-supplied two-column spectrum, optionally in the Jμ convention
    /// (rescaled by √εb/8), fitted with `fit_terms` Lorentzians.
    Tabulated {
        path: PathBuf,
        eps_background: Option<f64>,
        fit_terms: usize,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_solver")]
    pub kind: SolverChoice,
    /// Output step (fs).
    pub dt: f64,
    /// Duration (fs).
    pub t_max: f64,
    /// Lorentzians per source fit.
    #[serde(default = "default_source_terms")]
    pub source_terms: usize,
}

fn default_solver() -> SolverChoice {
    SolverChoice::Laplace
}

fn default_source_terms() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub grid: GridSpec,
    /// fs
    pub t_max: f64,
    /// fs
    pub dt: f64,
    /// b (eV) used to classify node lines; written to the node-line file.
    pub b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub kernel: String,
    pub omega_e: f64,
    pub initial: InitialState,
    /// Calibrate the drive amplitude to this maximum |norm − 1|.
    pub calibrate_norm: Option<f64>,
    /// Grid for the source fits; defaults to the kernel centers ± 0.5 eV.
    pub fit_grid: Option<GridSpec>,
    #[serde(default = "yes")]
    pub spectrum: bool,
    pub map: Option<MapSpec>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub kernel: String,
    pub omega_e: f64,
    /// Γ_G/Γ_K values; σ = ratio·Γ_K/(2√(2 ln 2)).
    pub ratios: Vec<f64>,
    /// Reference Rabi splitting (eV).
    pub splitting: f64,
    /// Γ_K (eV).
    pub kernel_fwhm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeatingSpec {
    pub omega_e: f64,
    /// Peak kernel value K(ω_max) (eV) held fixed: B = A/(πK_max).
    pub k_max: f64,
    /// Areas (eV²).
    pub areas: Vec<f64>,
    pub probes: Vec<f64>,
    /// Maxima are collected for t below this (fs).
    pub t_window: f64,
    /// fs
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub id: String,
    pub solver: SolverSpec,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelSpec>,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
    pub scan: Option<ScanSpec>,
    pub beating: Option<BeatingSpec>,
}

pub const PRESETS: [(&str, &str); 8] = [
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("fig8", include_str!("../presets/fig8.toml")),
    ("appendixD", include_str!("../presets/appendixD.toml")),
];

pub fn preset(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::Config(format!(
                "unknown preset '{name}' (have {})",
                names.join(", ")
            ))
        })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // relative data paths are relative to the config file
        if let Some(dir) = path.parent() {
            for k in cfg.kernels.values_mut() {
                match k {
                    KernelSpec::Lorentzians { path } | KernelSpec::Tabulated { path, .. }
                        if path.is_relative() =>
                    {
                        *path = dir.join(&*path)
                    }
                    _ => {}
                }
            }
        }
        Ok(cfg)
    }

    /// Canonical TOML of the effective configuration (hashed for the
    /// manifest).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.id.is_empty() {
            return bad("id must not be empty".into());
        }
        if !(self.solver.dt > 0.0) || !(self.solver.t_max > self.solver.dt) {
            return bad(format!(
                "solver: need 0 < dt < t_max, got dt = {}, t_max = {}",
                self.solver.dt, self.solver.t_max
            ));
        }
        if self.solver.source_terms == 0 {
            return bad("solver.source_terms must be >= 1".into());
        }
        for (name, k) in &self.kernels {
            match k {
                KernelSpec::Table { table } => {
                    if !["sphere_h2", "sphere_h10", "npom"].contains(&table.as_str()) {
                        return bad(format!(
                            "kernels.{name}.table: unknown table '{table}' (sphere_h2, sphere_h10, npom)"
                        ));
                    }
                }
                KernelSpec::Mie {
                    fit_terms, grid, ..
                } => {
                    check_grid(&format!("kernels.{name}.grid"), grid)?;
                    if *fit_terms == 0 {
                        return bad(format!("kernels.{name}.fit_terms must be >= 1"));
                    }
                }
                KernelSpec::Tabulated { fit_terms, .. } if *fit_terms == 0 => {
                    return bad(format!("kernels.{name}.fit_terms must be >= 1"));
                }
                _ => {}
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &self.scenarios {
            let at = format!("scenario '{}'", s.name);
            if s.name.is_empty()
                || !s
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return bad(format!("{at}: name must be non-empty [A-Za-z0-9_-]"));
            }
            if !names.insert(&s.name) {
                return bad(format!("{at}: duplicated name"));
            }
            if !self.kernels.contains_key(&s.kernel) {
                return bad(format!("{at}: unknown kernel '{}'", s.kernel));
            }
            if !(s.omega_e > 0.0) {
                return bad(format!("{at}: omega_e must be positive"));
            }
            if let Some(g) = &s.fit_grid {
                check_grid(&format!("{at}.fit_grid"), g)?;
            }
            if let Some(m) = &s.map {
                check_grid(&format!("{at}.map.grid"), &m.grid)?;
                if !(m.dt > 0.0) || !(m.t_max > m.dt) {
                    return bad(format!("{at}.map: need 0 < dt < t_max"));
                }
            }
            if let Some(c) = s.calibrate_norm {
                if !matches!(s.initial, InitialState::GroundWithDrive { .. }) || !(c > 0.0) {
                    return bad(format!(
                        "{at}: calibrate_norm needs a ground_with_drive start and a positive bound"
                    ));
                }
            }
        }
        if let Some(sc) = &self.scan {
            if !self.kernels.contains_key(&sc.kernel) {
                return bad(format!("scan: unknown kernel '{}'", sc.kernel));
            }
            if sc.ratios.is_empty() || sc.ratios.iter().any(|r| !(*r > 0.0)) {
                return bad("scan.ratios must be non-empty and positive".into());
            }
            if !(sc.splitting > 0.0) || !(sc.kernel_fwhm > 0.0) {
                return bad("scan: splitting and kernel_fwhm must be positive".into());
            }
        }
        if let Some(b) = &self.beating {
            if b.areas.is_empty() || b.areas.iter().any(|a| !(*a > 0.0)) {
                return bad("beating.areas must be non-empty and positive".into());
            }
            if b.probes.is_empty() || !(b.k_max > 0.0) || !(b.dt > 0.0) || !(b.t_window > b.dt) {
                return bad("beating: need probes, k_max > 0 and 0 < dt < t_window".into());
            }
        }
        Ok(())
    }
}

fn check_grid(at: &str, g: &GridSpec) -> Result<(), CliError> {
    if !(g.min > 0.0) || !(g.max > g.min) || g.n < 2 {
        return Err(CliError::Config(format!(
            "{at}: need 0 < min < max and n >= 2, got {g:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for (name, text) in PRESETS {
            let c = RunConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.id, name);
        }
    }

    #[test]
    fn unknown_fields_and_bad_values_are_config_errors() {
        let base = PRESETS[1].1;
        assert!(RunConfig::parse(&base.replace("t_max = ", "tmax_typo = ")).is_err());
        assert!(RunConfig::parse(&base.replace("kernel = \"h2\"", "kernel = \"nope\"")).is_err());
        assert!(RunConfig::parse("id = 'x'").is_err());
    }

    #[test]
    fn canonical_form_is_stable() {
        let c = RunConfig::parse(PRESETS[1].1).unwrap();
        let again = RunConfig::parse(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.canonical(), again.canonical());
    }
}
