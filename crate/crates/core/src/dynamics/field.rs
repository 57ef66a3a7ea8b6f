//! Photon and ground-state amplitudes from the closed-form excited amplitude.
//!
//! ```text
//! C_g1(ω,t) = C_g1(ω,0) − i t D(ω) C_g0(0) − i √K(ω) ∫₀ᵗ C_e0(t') e^{iδt'} dt'
//! C_g0(t)   = C_g0(0) − i ∫₀ᵗ dt' ∫ dω D(ω) C_g1(ω,t')
//! ```
//!
//! with δ = ω − ω_e. For C_e0 = Σ X t^k e^{λt} the time integral is the
//! moment ∫₀ᵗ t'^k e^{zt'} dt' with z = λ + iδ.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::laplace::{solve_c_e0, ExponentialSum};
use super::scenario::{RealLineQuadrature, ScenarioConfig, ScenarioSources};
use crate::error::{Error, Result};
use crate::units::{EnergyGrid, HBAR_EV_FS};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// ∫₀ᵗ t'^k e^{zt'} dt' given e^{zt}.
pub fn moment_integral(k: u32, z: Complex64, t: f64, ezt: Complex64) -> Complex64 {
    let zt = z * t;
    if zt.norm() < 0.5 {
        // Σ_m z^m t^{k+m+1} / (m! (k+m+1))
        let mut term = Complex64::new(t.powi(k as i32 + 1), 0.0);
        let mut sum = term / (k as f64 + 1.0);
        for m in 1..60 {
            term *= zt / m as f64;
            let add = term / (k as f64 + m as f64 + 1.0);
            sum += add;
            if add.norm() <= 1e-17 * sum.norm() {
                break;
            }
        }
        return sum;
    }
    let mut acc = (ezt - 1.0) / z;
    let mut tp = 1.0;
    for j in 1..=k {
        tp *= t;
        acc = (tp * ezt - j as f64 * acc) / z;
    }
    acc
}

/// C_g1(ω, t) for t in fs.
pub fn photon_amplitude(
    ce0: &ExponentialSum,
    src: &ScenarioSources,
    omega: f64,
    t: f64,
) -> Complex64 {
    let tn = t / HBAR_EV_FS;
    let delta = omega - src.omega_e;
    let mut acc = ZERO;
    for (x, lambda, k) in ce0.natural_terms() {
        let z = lambda + I * delta;
        acc += x * moment_integral(k, z, tn, (z * tn).exp());
    }
    let sqrt_k = src.kernel.eval(omega).sqrt();
    src.initial_photon(omega)
        - I * tn * src.drive_amplitude(omega) * src.c_g0_init
        - I * sqrt_k * acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTrace {
    /// fs
    pub times: Vec<f64>,
    pub c_e0: Vec<Complex64>,
    pub c_g0: Vec<Complex64>,
    pub norm: Vec<f64>,
}

impl AmplitudeTrace {
    pub fn population(&self) -> Vec<f64> {
        self.c_e0.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn max_norm_error(&self) -> f64 {
        self.norm
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

/// Closed-form solution of one scenario.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub config: ScenarioConfig,
    pub sources: ScenarioSources,
    pub c_e0: ExponentialSum,
}

impl Evolution {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let sources = ScenarioSources::prepare(cfg)?;
        Self::from_sources(cfg, sources)
    }

    pub fn from_sources(cfg: &ScenarioConfig, sources: ScenarioSources) -> Result<Self> {
        let c_e0 = solve_c_e0(
            &sources.kernel,
            &sources.sources(),
            sources.omega_e,
            sources.c_e0_init,
        )?;
        if c_e0.min_decay_rate() < -1e-9 {
            return Err(Error::RootFinding(format!(
                "unstable exponent Re Y = {:.3e} 1/fs",
                c_e0.min_decay_rate()
            )));
        }
        Ok(Self {
            config: cfg.clone(),
            sources,
            c_e0,
        })
    }

    pub fn photon_amplitude(&self, omega: f64, t: f64) -> Complex64 {
        photon_amplitude(&self.c_e0, &self.sources, omega, t)
    }

    /// Trace on the configured time grid with the default real-line rule,
    /// refined for long traces: C_g1(ω,t) varies on the scale ħ/t in ω.
    pub fn trace(&self) -> AmplitudeTrace {
        let spacing = (2.5 * HBAR_EV_FS / self.config.t_max).min(5e-4);
        let quad = RealLineQuadrature::new(self.sources.omega_e, 2.0, spacing, 400)
            .expect("valid constants");
        self.trace_with(&quad)
    }

    /// Trace on the configured time grid. The photon norm and the drive
    /// overlap ∫D C_g1 dω use `quad`; C_g0 is then integrated in time by the
    /// trapezoid rule.
    pub fn trace_with(&self, quad: &RealLineQuadrature) -> AmplitudeTrace {
        let times = self.config.times();
        let nt = times.len();
        let dtn = self.config.dt / HBAR_EV_FS;
        let src = &self.sources;
        let terms = self.c_e0.natural_terms();
        let driven = src.has_drive();

        const BLOCK: usize = 256;
        let blocks: Vec<(Vec<f64>, Vec<Complex64>)> = quad
            .nodes
            .par_chunks(BLOCK)
            .zip(quad.weights.par_chunks(BLOCK))
            .map(|(nodes, weights)| {
                let mut pn = vec![0.0; nt];
                let mut pd = vec![ZERO; if driven { nt } else { 0 }];
                let mut e = vec![ZERO; terms.len()];
                let mut step = vec![ZERO; terms.len()];
                let mut zs = vec![ZERO; terms.len()];
                for (&w, &wt) in nodes.iter().zip(weights) {
                    let delta = w - src.omega_e;
                    let sqrt_k = src.kernel.eval(w).sqrt();
                    let u0 = src.initial_photon(w);
                    let d = src.drive_amplitude(w);
                    for (j, (_, lambda, _)) in terms.iter().enumerate() {
                        zs[j] = lambda + I * delta;
                        step[j] = (zs[j] * dtn).exp();
                        e[j] = Complex64::new(1.0, 0.0);
                    }
                    for (i, t_fs) in times.iter().enumerate() {
                        let tn = t_fs / HBAR_EV_FS;
                        if i > 0 {
                            for j in 0..terms.len() {
                                e[j] *= step[j];
                            }
                        }
                        let mut acc = ZERO;
                        for (j, (x, _, k)) in terms.iter().enumerate() {
                            acc += x * moment_integral(*k, zs[j], tn, e[j]);
                        }
                        let c = u0 - I * tn * d * src.c_g0_init - I * sqrt_k * acc;
                        pn[i] += wt * c.norm_sqr();
                        if driven {
                            pd[i] += wt * d * c;
                        }
                    }
                }
                (pn, pd)
            })
            .collect();

        let mut photon = vec![0.0; nt];
        let mut overlap = vec![ZERO; if driven { nt } else { 0 }];
        for (pn, pd) in &blocks {
            for i in 0..nt {
                photon[i] += pn[i];
            }
            for (o, p) in overlap.iter_mut().zip(pd) {
                *o += p;
            }
        }

        let mut c_g0 = vec![src.c_g0_init; nt];
        if driven {
            let mut acc = ZERO;
            for i in 1..nt {
                acc += 0.5 * dtn * (overlap[i - 1] + overlap[i]);
                c_g0[i] = src.c_g0_init - I * acc;
            }
        }
        let c_e0: Vec<Complex64> = times.iter().map(|&t| self.c_e0.eval(t)).collect();
        let norm = (0..nt)
            .map(|i| c_e0[i].norm_sqr() + c_g0[i].norm_sqr() + photon[i])
            .collect();
        AmplitudeTrace {
            times,
            c_e0,
            c_g0,
            norm,
        }
    }

    /// C_g1 on `grid` × `times` (fs).
    pub fn photon_field(&self, grid: &EnergyGrid, times: &[f64]) -> PhotonField {
        let nt = times.len();
        let amplitude: Vec<Complex64> = grid
            .values()
            .par_iter()
            .flat_map_iter(|&w| {
                let row: Vec<Complex64> =
                    times.iter().map(|&t| self.photon_amplitude(w, t)).collect();
                row.into_iter()
            })
            .collect();
        debug_assert_eq!(amplitude.len(), grid.len() * nt);
        PhotonField {
            grid: grid.clone(),
            times: times.to_vec(),
            amplitude,
        }
    }
}

/// C_g1(ω,t) sampled on an energy grid × time grid, stored row-major with
/// one row per energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonField {
    pub grid: EnergyGrid,
    /// fs
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
}

impl PhotonField {
    pub fn n_energies(&self) -> usize {
        self.grid.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn at(&self, i_omega: usize, i_t: usize) -> Complex64 {
        self.amplitude[i_omega * self.times.len() + i_t]
    }

    /// |C_g1|² along t for one energy index.
    pub fn density_row(&self, i_omega: usize) -> Vec<f64> {
        let nt = self.times.len();
        self.amplitude[i_omega * nt..(i_omega + 1) * nt]
            .iter()
            .map(|c| c.norm_sqr())
            .collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitude.iter().map(|c| c.norm_sqr()).collect()
    }

    /// ∫ |C_g1|² dω at each time (trapezoid on the grid).
    pub fn photon_number(&self) -> Vec<f64> {
        let w = self.grid.trapezoid_weights();
        (0..self.n_times())
            .map(|it| {
                (0..self.n_energies())
                    .map(|iw| w[iw] * self.at(iw, it).norm_sqr())
                    .sum()
            })
            .collect()
    }
}

/// C_g0(t) = C_g0(0) − i∫dt'∫dω D(ω) C_g1(ω,t'), trapezoid in ω (field
/// grid) and t (field times). `drive` is D on the field grid in eV^{1/2}.
pub fn ground_amplitude(
    field: &PhotonField,
    drive: &[f64],
    c_g0_init: Complex64,
) -> Result<Vec<Complex64>> {
    if drive.len() != field.n_energies() {
        return Err(Error::InvalidArgument(format!(
            "drive has {} samples for {} grid points",
            drive.len(),
            field.n_energies()
        )));
    }
    let w = field.grid.trapezoid_weights();
    let overlap: Vec<Complex64> = (0..field.n_times())
        .map(|it| {
            (0..field.n_energies())
                .map(|iw| w[iw] * drive[iw] * field.at(iw, it))
                .sum()
        })
        .collect();
    let mut out = vec![c_g0_init; field.n_times()];
    let mut acc = ZERO;
    for i in 1..field.n_times() {
        let h = (field.times[i] - field.times[i - 1]) / HBAR_EV_FS;
        acc += 0.5 * h * (overlap[i - 1] + overlap[i]);
        out[i] = c_g0_init - I * acc;
    }
    Ok(out)
}

/// Which p(δ) to use in the single-mode analytic photon amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PCoefficient {
    /// (b + iδB/2b − B²/4b)/(B − iδ)
    Exact,
    /// b/(B − iδ)
    Approximate,
}

/// 2b = √(4A − B²) for a resonant single Lorentzian (eV).
pub fn half_splitting(area: f64, half_width: f64) -> f64 {
    0.5 * (4.0 * area - half_width * half_width).sqrt()
}

pub fn p_coefficient(area: f64, half_width: f64, delta: f64, which: PCoefficient) -> Complex64 {
    let b = half_splitting(area, half_width);
    let den = Complex64::new(half_width, -delta);
    match which {
        PCoefficient::Approximate => b / den,
        PCoefficient::Exact => {
            (b + I * delta * half_width / (2.0 * b) - half_width * half_width / (4.0 * b)) / den
        }
    }
}

/// Stationary amplitude −i√K(δ)(B − iδ)/(A − δ² − iBδ) for a resonant
/// single Lorentzian.
pub fn stationary_amplitude(area: f64, half_width: f64, delta: f64) -> Complex64 {
    let k = area / std::f64::consts::PI * half_width / (delta * delta + half_width * half_width);
    -I * k.sqrt() * Complex64::new(half_width, -delta)
        / Complex64::new(area - delta * delta, -half_width * delta)
}

/// C_g1∞(δ)[1 − e^{(iδ−B/2)t}(cos bt − p(δ) sin bt)] (t in fs), for an
/// initially excited qubit and a resonant single-Lorentzian kernel.
pub fn analytic_photon_single(
    area: f64,
    half_width: f64,
    delta: f64,
    t: f64,
    which: PCoefficient,
) -> Complex64 {
    let tn = t / HBAR_EV_FS;
    let b = half_splitting(area, half_width);
    let p = p_coefficient(area, half_width, delta, which);
    let h = ((I * delta - half_width / 2.0) * tn).exp() * ((b * tn).cos() - p * (b * tn).sin());
    stationary_amplitude(area, half_width, delta) * (1.0 - h)
}

/// Largest drive amplitude D₀ (Hz^{1/2}) whose trace keeps |norm − 1| at or
/// below `max_norm_error` over the configured duration, found by bracketing
/// and log-space bisection on the drive scale. Returns D₀ and the evolution.
pub fn calibrate_drive(cfg: &ScenarioConfig, max_norm_error: f64) -> Result<(f64, Evolution)> {
    let d0 = match cfg.initial {
        super::scenario::InitialState::GroundWithDrive { d0, .. } if d0 > 0.0 => d0,
        _ => {
            return Err(Error::InvalidArgument(
                "drive calibration needs a ground-state start with d0 > 0".into(),
            ))
        }
    };
    if !(max_norm_error > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "max_norm_error must be positive, got {max_norm_error}"
        )));
    }
    let base = ScenarioSources::prepare(cfg)?;
    let run = |f: f64| -> Result<(f64, Evolution)> {
        let evo = Evolution::from_sources(cfg, base.with_drive_scale(f))?;
        let err = evo.trace().max_norm_error();
        Ok((err, evo))
    };
    let (mut lo, mut hi);
    let (e1, evo1) = run(1.0)?;
    let mut best;
    if e1 <= max_norm_error {
        (lo, best) = (1.0_f64, evo1);
        loop {
            hi = 2.0 * lo;
            let (e, evo) = run(hi)?;
            if e > max_norm_error {
                break;
            }
            (lo, best) = (hi, evo);
            if lo > 1e30 {
                return Ok((d0 * lo, best));
            }
        }
    } else {
        hi = 1.0_f64;
        loop {
            lo = 0.5 * hi;
            let (e, evo) = run(lo)?;
            if e <= max_norm_error {
                best = evo;
                break;
            }
            hi = lo;
            if hi < 1e-30 {
                return Err(Error::Analysis("drive calibration did not converge".into()));
            }
        }
    }
    for _ in 0..20 {
        let mid = (lo * hi).sqrt();
        let (e, evo) = run(mid)?;
        if e <= max_norm_error {
            lo = mid;
            best = evo;
        } else {
            hi = mid;
        }
    }
    Ok((d0 * lo, best))
}
