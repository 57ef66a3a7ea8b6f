use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drude metal, ε(ω) = ε∞ − ωp²/(ω² + iωΓ), energies in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrudeMetal {
    pub eps_inf: f64,
    pub omega_p: f64,
    pub gamma: f64,
}

impl DrudeMetal {
    /// Silver-like parameters used for the nanosphere studies.
    pub const SILVER: DrudeMetal = DrudeMetal {
        eps_inf: 6.0,
        omega_p: 7.9,
        gamma: 0.051,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_p > 0.0) || !(self.gamma >= 0.0) || !(self.eps_inf >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid Drude parameters {self:?} (need omega_p > 0, gamma >= 0, eps_inf >= 1)"
            )));
        }
        Ok(())
    }

    pub fn permittivity(&self, omega: f64) -> Result<Complex64> {
        drude_permittivity(self, omega)
    }
}

pub fn drude_permittivity(metal: &DrudeMetal, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    let denom = Complex64::new(omega * omega, omega * metal.gamma);
    Ok(Complex64::new(metal.eps_inf, 0.0) - metal.omega_p * metal.omega_p / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_dipole_resonance() {
        let m = DrudeMetal {
            gamma: 0.0,
            ..DrudeMetal::SILVER
        };
        let w = 7.9 / 8f64.sqrt();
        let eps = drude_permittivity(&m, w).unwrap();
        assert!((eps.re + 2.0).abs() < 1e-12);
        assert_eq!(eps.im, 0.0);
    }

    #[test]
    fn lossy_value_matches_hand_evaluation() {
        // 30-digit mpmath: -1.0731561088960039785 + 0.1214582362133657249i
        let eps = drude_permittivity(&DrudeMetal::SILVER, 2.97).unwrap();
        let d_re = 2.97f64 * 2.97;
        let d_im = 2.97 * 0.051;
        let mag = d_re * d_re + d_im * d_im;
        let expect_re = 6.0 - 62.41 * d_re / mag;
        let expect_im = 62.41 * d_im / mag;
        assert!((eps.re - expect_re).abs() < 1e-13);
        assert!((eps.im - expect_im).abs() < 1e-13);
        assert!((eps.re - (-1.073_156_108_896_004)).abs() < 1e-13, "{eps}");
        assert!((eps.im - 0.121_458_236_213_365_7).abs() < 1e-13, "{eps}");
        assert!(eps.im > 0.0);
    }

    #[test]
    fn high_frequency_limit() {
        let eps = drude_permittivity(&DrudeMetal::SILVER, 1e6).unwrap();
        assert!((eps.re - 6.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_positive_frequency() {
        assert!(drude_permittivity(&DrudeMetal::SILVER, 0.0).is_err());
        assert!(drude_permittivity(&DrudeMetal::SILVER, -1.0).is_err());
    }
}
