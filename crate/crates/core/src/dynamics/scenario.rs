//! Scenario description and preparation of the closed-form sources.
//!
//! Source products √K·C_g1(ω,0) and √K·D(ω) are fitted with Lorentzians so
//! that S(t) is an exponential sum. The photon amplitude and drive that are
//! actually propagated are then *defined* by the fit, F(ω)/√K_model(ω), and
//! the photon is renormalised over the real line. This keeps the pseudo-mode
//! model exactly unitary, so the norm is limited only by quadrature and not
//! by the fit residual.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::laplace::Source;
use crate::error::{Error, Result};
use crate::fit::{fit_source_product, FitOptions, FitReport};
use crate::lorentzian::LorentzianSet;
use crate::spectrum::TabulatedSpectrum;
use crate::units::{EnergyGrid, UnitConventions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    ExcitedQubit,
    /// Normalised Gaussian photon A₀ e^{−(ω−ω_s)²/2σ²}, A₀ = 1/√(σ√π).
    GaussianPhoton {
        omega_s: f64,
        sigma: f64,
    },
    /// Ground state with drive D₀ e^{−(ω−ω_s)²/2σ²}, D₀ in Hz^{1/2}.
    GroundWithDrive {
        d0: f64,
        omega_s: f64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kernel: LorentzianSet,
    /// Qubit transition energy (eV).
    pub omega_e: f64,
    pub initial: InitialState,
    /// Duration (fs).
    pub t_max: f64,
    /// Output time step (fs).
    pub dt: f64,
    /// Grid used for source fits and photon maps.
    pub grid: EnergyGrid,
    /// Lorentzians per source fit.
    pub source_terms: usize,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel.is_empty() {
            return Err(Error::InvalidArgument("kernel has no terms".into()));
        }
        if !(self.omega_e > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_e must be positive, got {}",
                self.omega_e
            )));
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0 and t_max > 0, got dt = {}, t_max = {}",
                self.dt, self.t_max
            )));
        }
        if self.t_max / self.dt > 1e7 {
            return Err(Error::InvalidArgument(format!(
                "t_max/dt = {:.3e} exceeds 1e7 steps",
                self.t_max / self.dt
            )));
        }
        match self.initial {
            InitialState::ExcitedQubit => {}
            InitialState::GaussianPhoton { sigma, omega_s }
            | InitialState::GroundWithDrive { sigma, omega_s, .. } => {
                if !(sigma > 0.0) || !(omega_s > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "need sigma > 0 and omega_s > 0, got sigma = {sigma}, omega_s = {omega_s}"
                    )));
                }
            }
        }
        if self.source_terms == 0 {
            return Err(Error::InvalidArgument("source_terms must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of output samples (including t = 0).
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize + 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_steps()).map(|i| i as f64 * self.dt).collect()
    }
}

/// Gaussian photon normalisation A₀ = 1/√(σ√π).
pub fn gaussian_norm(sigma: f64) -> f64 {
    1.0 / (sigma * std::f64::consts::PI.sqrt()).sqrt()
}

fn gaussian(omega: f64, omega_s: f64, sigma: f64) -> f64 {
    let u = (omega - omega_s) / sigma;
    (-0.5 * u * u).exp()
}

/// Nodes and weights for ∫_ℝ f(ω) dω: a uniform trapezoid core of half-width
/// `half_width` around `center`, plus both tails mapped by δ = L/u onto
/// u ∈ (0, 1] and integrated with the midpoint rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLineQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RealLineQuadrature {
    pub fn new(center: f64, half_width: f64, spacing: f64, n_tail: usize) -> Result<Self> {
        if !(half_width > 0.0) || !(spacing > 0.0) || spacing > half_width {
            return Err(Error::InvalidArgument(format!(
                "bad quadrature: half_width = {half_width}, spacing = {spacing}"
            )));
        }
        let n_core = (2.0 * half_width / spacing).round() as usize;
        let h = 2.0 * half_width / n_core as f64;
        let mut nodes = Vec::with_capacity(n_core + 1 + 2 * n_tail);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for i in (0..n_tail).rev() {
            let u = (i as f64 + 0.5) / n_tail as f64;
            nodes.push(center - half_width / u);
            weights.push(half_width / (u * u) / n_tail as f64);
        }
        for i in 0..=n_core {
            nodes.push(center - half_width + i as f64 * h);
            weights.push(if i == 0 || i == n_core { 0.5 * h } else { h });
        }
        for i in 0..n_tail {
            let u = (i as f64 + 0.5) / n_tail as f64;
            nodes.push(center + half_width / u);
            weights.push(half_width / (u * u) / n_tail as f64);
        }
        Ok(Self { nodes, weights })
    }

    /// Default rule for norm checks: ±2 eV core at 0.5 meV, 400 tail nodes
    /// per side.
    pub fn default_for(center: f64) -> Self {
        Self::new(center, 2.0, 5e-4, 400).expect("valid constants")
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Fitted sources plus the initial amplitudes of the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSources {
    pub kernel: LorentzianSet,
    pub omega_e: f64,
    pub c_e0_init: Complex64,
    pub c_g0_init: Complex64,
    /// F(ω) ≈ √K·C_g1(ω,0), normalised so that ∫|F|²/K dω = 1.
    pub photon: Option<LorentzianSet>,
    /// F_D(ω) ≈ √K·D(ω) in eV^{1/2}·eV^{1/2}.
    pub drive: Option<LorentzianSet>,
    pub reports: Vec<FitReport>,
}

impl ScenarioSources {
    /// Excited-qubit scenario (no sources).
    pub fn excited(kernel: LorentzianSet, omega_e: f64) -> Self {
        Self {
            kernel,
            omega_e,
            c_e0_init: Complex64::new(1.0, 0.0),
            c_g0_init: Complex64::new(0.0, 0.0),
            photon: None,
            drive: None,
            reports: Vec::new(),
        }
    }

    pub fn prepare(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut out = Self::excited(cfg.kernel.clone(), cfg.omega_e);
        let opts = FitOptions::default();
        match cfg.initial {
            InitialState::ExcitedQubit => {}
            InitialState::GaussianPhoton { omega_s, sigma } => {
                let (set, rep) = fit_product(cfg, omega_s, sigma, &opts)?;
                out.c_e0_init = Complex64::new(0.0, 0.0);
                let quad = RealLineQuadrature::default_for(cfg.omega_e);
                let norm2 = quad.integrate(|w| {
                    let f = set.eval(w);
                    f * f / cfg.kernel.eval(w)
                });
                out.photon = Some(set.scaled(1.0 / norm2.sqrt()));
                out.reports.push(rep);
            }
            InitialState::GroundWithDrive { d0, omega_s, sigma } => {
                let (set, rep) = fit_product(cfg, omega_s, sigma, &opts)?;
                let d_ev = UnitConventions::default().drive_hz_sqrt_to_ev_sqrt(d0);
                out.c_e0_init = Complex64::new(0.0, 0.0);
                out.c_g0_init = Complex64::new(1.0, 0.0);
                out.drive = Some(set.scaled(d_ev));
                out.reports.push(rep);
            }
        }
        Ok(out)
    }

    /// Replaces the drive amplitude scale (linear in D₀).
    pub fn with_drive_scale(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.drive = s.drive.map(|d| d.scaled(factor));
        s
    }

    pub fn sources(&self) -> Vec<Source> {
        let mut v = Vec::new();
        if let Some(p) = &self.photon {
            if !p.is_empty() {
                v.push(Source::InitialPhoton(p.clone()));
            }
        }
        if let Some(d) = &self.drive {
            if !d.is_empty() {
                v.push(Source::Drive {
                    set: d.clone(),
                    c_g0: self.c_g0_init,
                });
            }
        }
        v
    }

    /// Effective initial photon amplitude C_g1(ω,0).
    pub fn initial_photon(&self, omega: f64) -> f64 {
        match &self.photon {
            Some(p) => p.eval(omega) / self.kernel.eval(omega).sqrt(),
            None => 0.0,
        }
    }

    /// Effective drive spectrum D(ω) in eV^{1/2}.
    pub fn drive_amplitude(&self, omega: f64) -> f64 {
        match &self.drive {
            Some(d) => d.eval(omega) / self.kernel.eval(omega).sqrt(),
            None => 0.0,
        }
    }

    pub fn has_drive(&self) -> bool {
        self.drive.as_ref().is_some_and(|d| !d.is_empty())
    }
}

/// Fits √K_model(ω)·e^{−(ω−ω_s)²/2σ²} on the scenario grid (unit amplitude).
fn fit_product(
    cfg: &ScenarioConfig,
    omega_s: f64,
    sigma: f64,
    opts: &FitOptions,
) -> Result<(LorentzianSet, FitReport)> {
    let values = cfg
        .grid
        .values()
        .iter()
        .map(|&w| cfg.kernel.eval(w).sqrt() * gaussian(w, omega_s, sigma))
        .collect();
    let target = TabulatedSpectrum::new(cfg.grid.clone(), values)?;
    let (set, rep) = fit_source_product(&target, cfg.source_terms, opts)?;
    if !rep.success {
        log::warn!(
            "source fit residual {:.3} above threshold {:.3}",
            rep.residual_rel_l2,
            opts.threshold
        );
    }
    Ok((set, rep))
}

/// Reference Gaussian photon on a grid (for comparisons with the effective
/// fitted photon).
pub fn gaussian_photon(omega: f64, omega_s: f64, sigma: f64) -> f64 {
    gaussian_norm(sigma) * gaussian(omega, omega_s, sigma)
}
