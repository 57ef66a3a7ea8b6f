//! Fourier spectra of the excited-state coherence and peak extraction.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::AmplitudeTrace;
use crate::error::{Error, Result};
use crate::units::HBAR_EV_FS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    None,
    Hann,
}

/// Magnitude spectrum on an energy axis, with the reference energy (ω_e, or
/// 0 for detuning axes) used to split it into flanks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSpectrum {
    /// eV
    pub frequencies: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// eV
    pub center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub energy: f64,
    pub height: f64,
}

pub const MIN_TRACE_LEN: usize = 256;

/// |DFT| of Im[C_e0(t) e^{−iω_e t}] on the absolute energy axis (positive
/// frequencies below Nyquist). The trace must be uniformly sampled and fine
/// enough that ω_e sits below the Nyquist energy πħ/dt.
pub fn coherence_spectrum(
    trace: &AmplitudeTrace,
    omega_e: f64,
    window: Window,
    pad_factor: usize,
) -> Result<CoherenceSpectrum> {
    let n = trace.times.len();
    if n < MIN_TRACE_LEN {
        return Err(Error::Analysis(format!(
            "trace has {n} samples, need at least {MIN_TRACE_LEN}"
        )));
    }
    let dt = trace.dt();
    let nyquist = std::f64::consts::PI * HBAR_EV_FS / dt;
    if omega_e >= 0.9 * nyquist {
        return Err(Error::Analysis(format!(
            "dt = {dt} fs cannot resolve {omega_e} eV (Nyquist {nyquist:.3} eV); use dt < {:.3} fs",
            0.9 * std::f64::consts::PI * HBAR_EV_FS / omega_e
        )));
    }
    let signal: Vec<f64> = trace
        .times
        .iter()
        .zip(&trace.c_e0)
        .map(|(&t, c)| (c * Complex64::from_polar(1.0, -omega_e * t / HBAR_EV_FS)).im)
        .collect();
    Ok(real_spectrum(&signal, dt, window, pad_factor, omega_e))
}

/// One-sided |DFT|·dt of a real, uniformly sampled signal (dt in fs).
pub fn real_spectrum(
    signal: &[f64],
    dt: f64,
    window: Window,
    pad_factor: usize,
    center: f64,
) -> CoherenceSpectrum {
    let n = signal.len();
    let m = (n * pad_factor.max(1)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, (b, s)) in buf.iter_mut().zip(signal).enumerate() {
        let w = match window {
            Window::None => 1.0,
            Window::Hann => {
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()
            }
        };
        *b = Complex64::new(s * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let de = 2.0 * std::f64::consts::PI * HBAR_EV_FS / (m as f64 * dt);
    let half = m / 2;
    CoherenceSpectrum {
        frequencies: (0..=half).map(|k| k as f64 * de).collect(),
        magnitude: buf[..=half].iter().map(|c| c.norm() * dt).collect(),
        center,
    }
}

impl CoherenceSpectrum {
    /// Local maxima above `rel_threshold` × global maximum, refined by a
    /// parabola through the three samples around each maximum, sorted by
    /// decreasing height.
    pub fn peaks(&self, rel_threshold: f64) -> Vec<Peak> {
        find_peaks(&self.frequencies, &self.magnitude, rel_threshold)
    }

    /// Linear interpolation of the magnitude at `e`.
    pub fn value_at(&self, e: f64) -> f64 {
        let f = &self.frequencies;
        if e <= f[0] {
            return self.magnitude[0];
        }
        let i = f.partition_point(|&x| x < e).min(f.len() - 1);
        let u = (e - f[i - 1]) / (f[i] - f[i - 1]);
        self.magnitude[i - 1] + u * (self.magnitude[i] - self.magnitude[i - 1])
    }

    /// Largest magnitude over `[lo, hi]`.
    pub fn max_in(&self, lo: f64, hi: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.magnitude)
            .filter(|(f, _)| (lo..=hi).contains(*f))
            .map(|(_, m)| *m)
            .fold(0.0, f64::max)
    }

    pub fn spacing(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }

    /// Σ magnitude² · spacing.
    pub fn total_weight(&self) -> f64 {
        self.magnitude.iter().map(|m| m * m).sum::<f64>() * self.spacing()
    }
}

pub fn find_peaks(x: &[f64], y: &[f64], rel_threshold: f64) -> Vec<Peak> {
    let ymax = y.iter().copied().fold(0.0, f64::max);
    if !(ymax > 0.0) || y.len() < 3 {
        return Vec::new();
    }
    let mut out: Vec<Peak> = (1..y.len() - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= rel_threshold * ymax)
        .map(|i| {
            let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
            let den = a - 2.0 * b + c;
            let off = if den.abs() > 0.0 {
                (0.5 * (a - c) / den).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let h = x[i + 1] - x[i];
            Peak {
                energy: x[i] + off * h,
                height: b - 0.25 * (a - c) * off,
            }
        })
        .collect();
    out.sort_by(|p, q| q.height.total_cmp(&p.height));
    out
}

/// Distance between the highest maxima on either side of the spectrum's
/// center, both above 5% of the global maximum. Maxima within `guard` (eV)
/// of the center are treated as elastic and skipped. `None` when either
/// flank has no qualifying maximum.
pub fn rabi_splitting_with(spec: &CoherenceSpectrum, guard: f64) -> Option<f64> {
    let peaks = spec.peaks(0.05);
    let lower = peaks.iter().find(|p| p.energy < spec.center - guard)?;
    let upper = peaks.iter().find(|p| p.energy > spec.center + guard)?;
    Some(upper.energy - lower.energy)
}

/// [`rabi_splitting_with`] using a guard of four samples.
pub fn rabi_splitting(spec: &CoherenceSpectrum) -> Option<f64> {
    rabi_splitting_with(spec, 4.0 * spec.spacing())
}
