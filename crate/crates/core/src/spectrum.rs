use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::EnergyGrid;

/// Non-negative real samples on an [`EnergyGrid`].
///
/// Kernel spectra are stored in eV (the angular-frequency kernel multiplied
/// by ħ), so that their integral over energy is an area in eV².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSpectrum {
    grid: EnergyGrid,
    values: Vec<f64>,
}

impl TabulatedSpectrum {
    pub fn new(grid: EnergyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "spectrum has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "spectrum value {v} at index {i} is negative or not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn energies(&self) -> &[f64] {
        self.grid.values()
    }

    /// Trapezoid area over the whole grid.
    pub fn area(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Index and value of the global maximum.
    pub fn peak(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
    }

    pub fn value_at(&self, e: f64) -> Option<f64> {
        self.grid.interpolate(&self.values, e)
    }

    /// Full width at half maximum of the feature containing the global
    /// maximum, with linear interpolation of the half-maximum crossings.
    /// Returns `None` when the half maximum is not crossed on both sides.
    pub fn fwhm(&self) -> Option<f64> {
        let (ip, vmax) = self.peak();
        let half = 0.5 * vmax;
        let e = self.grid.values();
        let v = &self.values;
        let mut left = None;
        for i in (0..ip).rev() {
            if v[i] < half {
                let u = (half - v[i]) / (v[i + 1] - v[i]);
                left = Some(e[i] + u * (e[i + 1] - e[i]));
                break;
            }
        }
        let mut right = None;
        for i in ip + 1..v.len() {
            if v[i] < half {
                let u = (v[i - 1] - half) / (v[i - 1] - v[i]);
                right = Some(e[i - 1] + u * (e[i] - e[i - 1]));
                break;
            }
        }
        Some(right? - left?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::make_grid;

    #[test]
    fn rejects_negative_and_mismatched() {
        let g = make_grid(1.0, 2.0, 3).unwrap();
        assert!(TabulatedSpectrum::new(g.clone(), vec![1.0, -1.0, 0.0]).is_err());
        assert!(TabulatedSpectrum::new(g.clone(), vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(TabulatedSpectrum::new(g, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn fwhm_of_lorentzian() {
        let g = make_grid(1.0, 5.0, 40001).unwrap();
        let b = 0.05;
        let v = g
            .values()
            .iter()
            .map(|w| b / ((w - 3.0).powi(2) + b * b))
            .collect();
        let s = TabulatedSpectrum::new(g, v).unwrap();
        assert!((s.fwhm().unwrap() - 2.0 * b).abs() < 1e-6);
    }

    #[test]
    fn fwhm_monotone_is_none() {
        let g = make_grid(1.0, 2.0, 101).unwrap();
        let v = g.values().to_vec();
        let s = TabulatedSpectrum::new(g, v).unwrap();
        assert!(s.fwhm().is_none());
    }
}
