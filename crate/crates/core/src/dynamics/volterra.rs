//! Direct time-domain solution of Ċ(t) = −∫₀ᵗ K(t−t') C(t') dt' + S(t).
//!
//! Second-order product-trapezoidal scheme: the ODE part uses the trapezoid
//! rule and the memory integral is taken against the piecewise-linear
//! interpolant of C. For exponential kernels each term's memory
//! M_j(t) = ∫₀ᵗ e^{−Δ_j(t−t')} C(t') dt' is advanced recursively with exact
//! weights (O(N)); tabulated kernels use the O(N²) trapezoid convolution.

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::AmplitudeTrace;
use super::scenario::RealLineQuadrature;
use crate::error::{Error, Result};
use crate::lorentzian::LorentzianSet;
use crate::spectrum::TabulatedSpectrum;
use crate::units::HBAR_EV_FS;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub enum TimeKernel {
    Exponential {
        set: LorentzianSet,
        omega_e: f64,
    },
    /// K(τ_n) in eV² at τ_n = n·dτ (fs); the spectrum is kept for the
    /// photon-norm quadrature.
    Tabulated {
        dtau: f64,
        values: Vec<Complex64>,
        spectrum: TabulatedSpectrum,
        omega_e: f64,
    },
}

impl TimeKernel {
    pub fn exponential(set: LorentzianSet, omega_e: f64) -> Self {
        TimeKernel::Exponential { set, omega_e }
    }

    /// K(0) (eV²).
    pub fn at_zero(&self) -> Complex64 {
        match self {
            TimeKernel::Exponential { set, .. } => Complex64::new(set.total_area(), 0.0),
            TimeKernel::Tabulated { values, .. } => values[0],
        }
    }

    pub fn omega_e(&self) -> f64 {
        match self {
            TimeKernel::Exponential { omega_e, .. } | TimeKernel::Tabulated { omega_e, .. } => {
                *omega_e
            }
        }
    }

    /// √K(ω) for the photon-field reconstruction.
    fn sqrt_k(&self, omega: f64) -> f64 {
        match self {
            TimeKernel::Exponential { set, .. } => set.eval(omega).sqrt(),
            TimeKernel::Tabulated { spectrum, .. } => {
                spectrum.value_at(omega).unwrap_or(0.0).sqrt()
            }
        }
    }
}

/// Cosine taper over the outer `frac` of the grid on each side.
fn taper(i: usize, n: usize, frac: f64) -> f64 {
    let edge = ((n as f64) * frac).max(1.0);
    let d = i.min(n - 1 - i) as f64;
    if d >= edge {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * d / edge).cos())
    }
}

/// K(τ) = ∫ K(ω) e^{−i(ω−ω_e)τ} dω on τ = 0, dτ, …, τ_max (fs) by direct
/// quadrature with a 5% cosine taper at the window edges.
pub fn tabulate_time_kernel(
    spectrum: &TabulatedSpectrum,
    omega_e: f64,
    tau_max: f64,
    dtau: f64,
) -> Result<TimeKernel> {
    if !(dtau > 0.0) || !(tau_max >= dtau) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dtau <= tau_max, got dtau = {dtau}, tau_max = {tau_max}"
        )));
    }
    let (_, peak) = spectrum.peak();
    let v = spectrum.values();
    let n = v.len();
    if v[0] > 0.01 * peak || v[n - 1] > 0.01 * peak {
        return Err(Error::Grid(format!(
            "spectrum edges ({:.3e}, {:.3e}) exceed 1% of the peak {:.3e}; widen the grid",
            v[0],
            v[n - 1],
            peak
        )));
    }
    let w = spectrum.grid().trapezoid_weights();
    let e = spectrum.energies();
    let weighted: Vec<f64> = (0..n).map(|i| w[i] * v[i] * taper(i, n, 0.05)).collect();
    let n_tau = (tau_max / dtau).round() as usize + 1;
    let values = (0..n_tau)
        .into_par_iter()
        .map(|m| {
            let tau = m as f64 * dtau / HBAR_EV_FS;
            (0..n)
                .map(|i| weighted[i] * (-I * (e[i] - omega_e) * tau).exp())
                .sum()
        })
        .collect();
    Ok(TimeKernel::Tabulated {
        dtau,
        values,
        spectrum: spectrum.clone(),
        omega_e,
    })
}

/// Largest stable step (fs) for an exponential kernel: 0.2/max|B̃_j|.
pub fn step_limit(set: &LorentzianSet, omega_e: f64) -> f64 {
    let m = set
        .terms()
        .iter()
        .map(|t| t.rate(omega_e).norm())
        .fold(0.0, f64::max);
    if m == 0.0 {
        f64::INFINITY
    } else {
        0.2 / m * HBAR_EV_FS
    }
}

/// Solves the memory equation on t = 0, dt, …, t_max (fs).
///
/// `source` returns S at a time in fs, in natural units (eV). The trace's
/// norm includes the photon part reconstructed from the C_e0 history for a
/// vacuum initial field; with a source present (photon or drive initial
/// states) the solver does not know the initial field, so the norm holds
/// |C_e0|² + |C_g0|² only and `c_g0` is the constant `c_g0_init`.
pub fn integrate_ide(
    kernel: &TimeKernel,
    source: Option<&(dyn Fn(f64) -> Complex64 + Sync)>,
    c_init: Complex64,
    t_max: f64,
    dt: f64,
) -> Result<AmplitudeTrace> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t_max > 0, got dt = {dt}, t_max = {t_max}"
        )));
    }
    if t_max / dt > 1e7 {
        return Err(Error::InvalidArgument(format!(
            "t_max/dt = {:.3e} exceeds 1e7 steps",
            t_max / dt
        )));
    }
    let n = (t_max / dt).round() as usize;
    let h = dt / HBAR_EV_FS;
    let s_at = |i: usize| source.map_or(ZERO, |f| f(i as f64 * dt));
    let mut c = Vec::with_capacity(n + 1);
    c.push(c_init);

    match kernel {
        TimeKernel::Exponential { set, omega_e } => {
            let limit = step_limit(set, *omega_e);
            if dt > limit {
                return Err(Error::StepTooLarge { dt, limit });
            }
            let areas: Vec<f64> = set.terms().iter().map(|t| t.area).collect();
            let deltas: Vec<Complex64> = set.terms().iter().map(|t| t.rate(*omega_e)).collect();
            // ∫₀ʰ e^{−Δ(h−s)} [(1 − s/h) C_n + (s/h) C_{n+1}] ds = w0 C_n + w1 C_{n+1}
            let weights: Vec<(Complex64, Complex64, Complex64)> = deltas
                .iter()
                .map(|&d| {
                    let x = d * h;
                    let decay = (-x).exp();
                    let (w0, w1) = if x.norm() < 1e-3 {
                        (
                            h * (0.5 - x / 3.0 + x * x / 8.0),
                            h * (0.5 - x / 6.0 + x * x / 24.0),
                        )
                    } else {
                        let e1 = (ONE - decay) / x; // ∫₀¹ e^{−x(1−u)} du
                        let w1 = h * (ONE - e1) / x; // ∫₀¹ u e^{−x(1−u)} du
                        (h * e1 - w1, w1)
                    };
                    (decay, w0, w1)
                })
                .collect();
            let mut mem = vec![ZERO; areas.len()];
            let mut f_prev = s_at(0);
            for i in 0..n {
                let cn = c[i];
                let mut known = ZERO;
                let mut coeff = ZERO;
                for j in 0..areas.len() {
                    let (decay, w0, w1) = weights[j];
                    known += areas[j] * (decay * mem[j] + w0 * cn);
                    coeff += areas[j] * w1;
                }
                let s_next = s_at(i + 1);
                // C_{n+1} = C_n + h/2 [f_n − known − coeff C_{n+1} + S_{n+1}]
                let c_next = (cn + 0.5 * h * (f_prev - known + s_next)) / (ONE + 0.5 * h * coeff);
                for j in 0..areas.len() {
                    let (decay, w0, w1) = weights[j];
                    mem[j] = decay * mem[j] + w0 * cn + w1 * c_next;
                }
                f_prev = -areas
                    .iter()
                    .zip(&mem)
                    .map(|(a, m)| a * m)
                    .sum::<Complex64>()
                    + s_next;
                c.push(c_next);
            }
        }
        TimeKernel::Tabulated { dtau, values, .. } => {
            if (dtau - dt).abs() > 1e-12 * dt {
                return Err(Error::InvalidArgument(format!(
                    "kernel step {dtau} fs differs from solver step {dt} fs"
                )));
            }
            if values.len() < n + 1 {
                return Err(Error::InvalidArgument(format!(
                    "kernel tabulated to {} steps, need {}",
                    values.len() - 1,
                    n
                )));
            }
            let k = values;
            let mut f_prev = s_at(0);
            for i in 0..n {
                // memory at t_{i+1} without the C_{i+1} endpoint
                let m = i + 1;
                let mut partial = 0.5 * k[m] * c[0];
                for l in 1..m {
                    partial += k[m - l] * c[l];
                }
                partial *= h;
                let s_next = s_at(i + 1);
                let self_w = 0.5 * h * k[0];
                let c_next =
                    (c[i] + 0.5 * h * (f_prev - partial + s_next)) / (ONE + 0.5 * h * self_w);
                f_prev = -(partial + self_w * c_next) + s_next;
                c.push(c_next);
            }
        }
    }

    let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let photon = if source.is_none() {
        photon_number_from_history(kernel, &c, h)
    } else {
        vec![0.0; n + 1]
    };
    let norm = c
        .iter()
        .zip(&photon)
        .map(|(x, p)| x.norm_sqr() + p)
        .collect();
    Ok(AmplitudeTrace {
        times,
        c_e0: c,
        c_g0: vec![ZERO; n + 1],
        norm,
    })
}

/// ∫|C_g1(ω,t)|²dω for a vacuum initial field, with C_g1 advanced exactly
/// against the piecewise-linear C_e0 history.
fn photon_number_from_history(kernel: &TimeKernel, c: &[Complex64], h: f64) -> Vec<f64> {
    let omega_e = kernel.omega_e();
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match kernel {
        TimeKernel::Exponential { .. } => {
            let q = RealLineQuadrature::default_for(omega_e);
            (q.nodes, q.weights)
        }
        TimeKernel::Tabulated { spectrum, .. } => (
            spectrum.energies().to_vec(),
            spectrum.grid().trapezoid_weights(),
        ),
    };
    let nt = c.len();
    const BLOCK: usize = 256;
    let parts: Vec<Vec<f64>> = nodes
        .par_chunks(BLOCK)
        .zip(weights.par_chunks(BLOCK))
        .map(|(ns, ws)| {
            let mut acc = vec![0.0; nt];
            for (&w, &wt) in ns.iter().zip(ws) {
                let sk = kernel.sqrt_k(w);
                if sk == 0.0 {
                    continue;
                }
                let x = I * (w - omega_e) * h;
                let step = x.exp();
                // ∫₀ʰ e^{x s/h}[(1−s/h)a + (s/h)b] ds = u0 a + u1 b
                let (u0, u1) = if x.norm() < 1e-3 {
                    (
                        h * (0.5 + x / 6.0 + x * x / 24.0),
                        h * (0.5 + x / 3.0 + x * x / 8.0),
                    )
                } else {
                    let e1 = (step - ONE) / x;
                    let u1 = h * (step - e1) / x;
                    (h * e1 - u1, u1)
                };
                let mut phase = ONE;
                let mut integral = ZERO;
                for i in 1..nt {
                    integral += phase * (u0 * c[i - 1] + u1 * c[i]);
                    phase *= step;
                    acc[i] += wt * sk * sk * integral.norm_sqr();
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; nt];
    for p in parts {
        for i in 0..nt {
            out[i] += p[i];
        }
    }
    out
}
