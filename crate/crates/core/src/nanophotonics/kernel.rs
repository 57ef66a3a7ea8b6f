use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::drude::DrudeMetal;
use super::mie::{free_space_im_gzz, mie_scattered_gzz_adaptive, SphereGeometry};
use crate::error::{Error, Result};
use crate::spectrum::TabulatedSpectrum;
use crate::units::{EnergyGrid, DEBYE, ELECTRON_VOLT, EPSILON_0, HBAR_SI, SPEED_OF_LIGHT};

/// Two-level emitter with a radially oriented transition dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dipole {
    /// Transition dipole moment (Debye).
    pub d_eg: f64,
    /// Transition energy (eV).
    pub omega_e: f64,
}

impl Dipole {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_eg > 0.0) || !(self.omega_e > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid dipole {self:?} (need d_eg > 0, omega_e > 0)"
            )));
        }
        Ok(())
    }
}

/// Angular frequency (rad/s) of a photon energy in eV.
fn rad_per_s(omega_ev: f64) -> f64 {
    omega_ev * ELECTRON_VOLT / HBAR_SI
}

/// K(ω) in eV from Im G_zz (1/m): ħ·d²ω² Im G / (π ε₀ ħ c²).
pub fn kernel_from_im_g(d_eg_debye: f64, omega_ev: f64, im_g: f64) -> f64 {
    let d = d_eg_debye * DEBYE;
    let w = rad_per_s(omega_ev);
    // rate in 1/s, then times ħ in eV·s
    d * d * w * w * im_g
        / (std::f64::consts::PI * EPSILON_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
        / ELECTRON_VOLT
}

/// Free-space kernel K₀(ω) (eV): the spectrum whose golden-rule rate 2πK₀
/// is the vacuum emission rate in the background medium.
pub fn free_space_kernel(geom: &SphereGeometry, dip: &Dipole, omega: f64) -> f64 {
    kernel_from_im_g(dip.d_eg, omega, free_space_im_gzz(geom, omega))
}

/// Exact kernel spectrum K(ω) on `grid` (free-space plus Mie scattered part).
pub fn kernel_spectrum(
    geom: &SphereGeometry,
    metal: &DrudeMetal,
    dip: &Dipole,
    grid: &EnergyGrid,
) -> Result<TabulatedSpectrum> {
    geom.validate()?;
    metal.validate()?;
    dip.validate()?;
    let values: Result<Vec<f64>> = grid
        .values()
        .par_iter()
        .map(|&w| {
            let s = mie_scattered_gzz_adaptive(geom, metal, w)?;
            if !s.converged {
                return Err(Error::MieNotConverged {
                    n_max: s.n_max,
                    ratio: s.tail_ratio,
                });
            }
            let im_g = free_space_im_gzz(geom, w) + s.g_scat.im;
            Ok(kernel_from_im_g(dip.d_eg, w, im_g))
        })
        .collect();
    TabulatedSpectrum::new(grid.clone(), values?)
}

/// Free-space emission rate γ₀ = ω³d²√ε_b/(3πε₀ħc³), returned in eV.
pub fn free_space_rate(dip: &Dipole, eps_background: f64) -> f64 {
    let d = dip.d_eg * DEBYE;
    let w = rad_per_s(dip.omega_e);
    let gamma0 = w.powi(3) * d * d * eps_background.sqrt()
        / (3.0 * std::f64::consts::PI * EPSILON_0 * HBAR_SI * SPEED_OF_LIGHT.powi(3));
    gamma0 * HBAR_SI / ELECTRON_VOLT
}

/// Purcell factor γ/γ₀ with the golden-rule rate γ = 2πK(ω_e).
pub fn purcell_factor(
    kernel: &TabulatedSpectrum,
    dip: &Dipole,
    eps_background: f64,
) -> Result<f64> {
    dip.validate()?;
    let k = kernel.value_at(dip.omega_e).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "omega_e = {} eV outside kernel grid [{}, {}]",
            dip.omega_e,
            kernel.grid().min(),
            kernel.grid().max()
        ))
    })?;
    Ok(2.0 * std::f64::consts::PI * k / free_space_rate(dip, eps_background))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::make_grid;

    const DIP: Dipole = Dipole {
        d_eg: 24.0,
        omega_e: 2.97,
    };

    #[test]
    fn free_space_kernel_gives_unit_purcell() {
        let geom = SphereGeometry {
            radius: 20.0,
            gap: 2.0,
            eps_background: 2.25,
        };
        let grid = make_grid(2.9, 3.0, 11).unwrap();
        let vals = grid
            .values()
            .iter()
            .map(|&w| free_space_kernel(&geom, &DIP, w))
            .collect();
        let k = TabulatedSpectrum::new(grid, vals).unwrap();
        let p = purcell_factor(&k, &DIP, 2.25).unwrap();
        assert!((p - 1.0).abs() < 1e-8, "{p}");
    }

    #[test]
    fn purcell_outside_grid_is_error() {
        let grid = make_grid(2.0, 2.5, 11).unwrap();
        let k = TabulatedSpectrum::new(grid, vec![1.0; 11]).unwrap();
        assert!(purcell_factor(&k, &DIP, 1.0).is_err());
    }

    #[test]
    fn kernel_is_positive() {
        let geom = SphereGeometry {
            radius: 20.0,
            gap: 2.0,
            eps_background: 1.0,
        };
        let grid = make_grid(2.4, 3.4, 101).unwrap();
        let k = kernel_spectrum(&geom, &DrudeMetal::SILVER, &DIP, &grid).unwrap();
        assert!(k.values().iter().all(|v| *v > 0.0));
    }
}
