//! Scattered Green's function of a sphere for a radially oriented dipole.
//!
//! For a dipole on the z axis at distance d = r + h from the centre of a
//! sphere of radius r, the zz element of the scattered dyadic Green's tensor
//! at the source point is
//!
//! ```text
//! G_scat = -(i k / 4π) Σ_n n(n+1)(2n+1) a_n [h_n(kd)/(kd)]²
//! ```
//!
//! with a_n the electric Mie coefficient (Bohren–Huffman sign convention)
//! and k the wavenumber in the background medium. The free-space part is
//! Im G_0 = k/6π. Each term is assembled in log space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::drude::DrudeMetal;
use super::special::{log_derivative, log_psi, log_xi, psi_ratios, xi_ratios};
use crate::error::{Error, Result};
use crate::units::HBAR_C_EV_NM;

/// Tail criterion for the multipole sum.
pub const MIE_TAIL_TOLERANCE: f64 = 1e-8;
/// Hard cap on the multipole order.
pub const MIE_MAX_ORDER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereGeometry {
    /// Sphere radius (nm).
    pub radius: f64,
    /// Dipole to surface distance h (nm).
    pub gap: f64,
    pub eps_background: f64,
}

impl SphereGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.gap > 0.0) || !(self.eps_background >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid geometry {self:?} (need radius > 0, gap > 0, eps_background >= 1)"
            )));
        }
        Ok(())
    }

    /// Background wavenumber (1/nm) at photon energy `omega` (eV).
    pub fn wavenumber(&self, omega: f64) -> f64 {
        self.eps_background.sqrt() * omega / HBAR_C_EV_NM
    }
}

/// Result of a truncated multipole sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MieSum {
    /// Scattered G_zz at the dipole position (1/m).
    pub g_scat: Complex64,
    pub n_max: usize,
    /// |last term| / |sum|.
    pub tail_ratio: f64,
    pub converged: bool,
}

/// Default truncation order for size parameter `x`.
pub fn default_n_max(x: f64) -> usize {
    let wiscombe = (x + 4.0 * x.cbrt() + 10.0).ceil() as usize;
    wiscombe.max(60)
}

pub fn mie_scattered_gzz(
    geom: &SphereGeometry,
    metal: &DrudeMetal,
    omega: f64,
    n_max: usize,
) -> Result<MieSum> {
    metal.validate()?;
    let eps = metal.permittivity(omega)?;
    mie_scattered_gzz_eps(geom, eps, omega, n_max)
}

/// Same as [`mie_scattered_gzz`] for an arbitrary sphere permittivity.
pub fn mie_scattered_gzz_eps(
    geom: &SphereGeometry,
    eps_sphere: Complex64,
    omega: f64,
    n_max: usize,
) -> Result<MieSum> {
    geom.validate()?;
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let k = geom.wavenumber(omega);
    let x = k * geom.radius;
    let y = k * (geom.radius + geom.gap);
    let m = (eps_sphere / geom.eps_background).sqrt();
    let mx = m * x;

    let d_mx = log_derivative(mx, n_max);
    let rho_x = psi_ratios(x, n_max);
    let r_x = xi_ratios(x, n_max);
    let lpsi_x = log_psi(x, n_max);
    let lxi_x = log_xi(x, n_max);
    let lxi_y = log_xi(y, n_max);
    let ln_y4 = 4.0 * y.ln();

    let mut sum = Complex64::new(0.0, 0.0);
    let mut last = Complex64::new(0.0, 0.0);
    for n in 1..=n_max {
        let nf = n as f64;
        let common = d_mx[n] / m + nf / x;
        let num = common - 1.0 / rho_x[n];
        let den = common - 1.0 / r_x[n];
        if num.norm() == 0.0 {
            last = Complex64::new(0.0, 0.0);
            continue;
        }
        let weight = (nf * (nf + 1.0) * (2.0 * nf + 1.0)).ln();
        let log_term = weight + lpsi_x[n] - lxi_x[n] + num.ln() - den.ln() + 2.0 * lxi_y[n] - ln_y4;
        last = log_term.exp();
        sum += last;
    }
    let prefactor = Complex64::new(0.0, -k / (4.0 * std::f64::consts::PI));
    let g_scat = prefactor * sum * 1e9;
    let tail_ratio = if sum.norm() > 0.0 {
        last.norm() / sum.norm()
    } else {
        0.0
    };
    Ok(MieSum {
        g_scat,
        n_max,
        tail_ratio,
        converged: tail_ratio <= MIE_TAIL_TOLERANCE,
    })
}

/// Sums with the default order, doubling up to [`MIE_MAX_ORDER`] until the
/// tail criterion holds. Returns the last attempt even when unconverged;
/// callers decide whether that is an error.
pub fn mie_scattered_gzz_adaptive(
    geom: &SphereGeometry,
    metal: &DrudeMetal,
    omega: f64,
) -> Result<MieSum> {
    let x = geom.wavenumber(omega) * geom.radius;
    let mut n = default_n_max(x).min(MIE_MAX_ORDER);
    loop {
        let s = mie_scattered_gzz(geom, metal, omega, n)?;
        if s.converged || n == MIE_MAX_ORDER {
            if !s.converged {
                log::warn!(
                    "Mie sum at {omega} eV not converged at the order cap {MIE_MAX_ORDER} \
                     (tail ratio {:.2e})",
                    s.tail_ratio
                );
            }
            return Ok(s);
        }
        n = (2 * n).min(MIE_MAX_ORDER);
    }
}

/// Free-space Im G_zz = k/6π (1/m).
pub fn free_space_im_gzz(geom: &SphereGeometry, omega: f64) -> f64 {
    geom.wavenumber(omega) * 1e9 / (6.0 * std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(h: f64) -> SphereGeometry {
        SphereGeometry {
            radius: 20.0,
            gap: h,
            eps_background: 1.0,
        }
    }

    #[test]
    fn transparent_sphere_scatters_nothing() {
        let g = sphere(2.0);
        let s = mie_scattered_gzz_eps(&g, Complex64::new(1.0, 0.0), 2.9, 80).unwrap();
        assert!(s.g_scat.norm() < 1e-12 * free_space_im_gzz(&g, 2.9));
    }

    #[test]
    fn lossy_sphere_enhances_emission() {
        let g = sphere(2.0);
        for w in [2.5, 2.8, 2.97, 3.3] {
            let s = mie_scattered_gzz_adaptive(&g, &DrudeMetal::SILVER, w).unwrap();
            assert!(s.converged, "{w}: {s:?}");
            assert!(s.g_scat.im > 0.0);
        }
    }

    #[test]
    fn increasing_order_changes_nothing_once_converged() {
        let g = sphere(2.0);
        for w in [2.6, 2.9, 2.97, 3.1] {
            let a = mie_scattered_gzz(&g, &DrudeMetal::SILVER, w, 190).unwrap();
            let b = mie_scattered_gzz(&g, &DrudeMetal::SILVER, w, 195).unwrap();
            let rel = (a.g_scat - b.g_scat).norm() / a.g_scat.norm();
            assert!(rel < 1e-6, "{w}: {rel}");
        }
    }

    #[test]
    fn unconverged_flag_at_low_order() {
        let g = sphere(2.0);
        let s = mie_scattered_gzz(&g, &DrudeMetal::SILVER, 2.97, 5).unwrap();
        assert!(!s.converged);
    }

    #[test]
    fn rejects_bad_input() {
        let g = sphere(2.0);
        assert!(mie_scattered_gzz(&g, &DrudeMetal::SILVER, 0.0, 10).is_err());
        assert!(mie_scattered_gzz(&g, &DrudeMetal::SILVER, 2.0, 0).is_err());
        let bad = SphereGeometry { gap: 0.0, ..g };
        assert!(mie_scattered_gzz(&bad, &DrudeMetal::SILVER, 2.0, 10).is_err());
    }

    #[test]
    fn default_order_floor() {
        assert_eq!(default_n_max(0.3), 60);
        assert!(default_n_max(100.0) > 100);
    }
}
