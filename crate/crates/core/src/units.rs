//! Physical constants, unit conversions and energy grids.
//!
//! All dynamics run in "energy units": frequencies are photon energies in eV
//! and time is measured in units of ħ/eV. A time `t` in fs corresponds to
//! `t / HBAR_EV_FS` natural units. Areas of kernel spectra are eV², rates
//! are eV, and THz² only appears when reading or writing tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;
/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Elementary charge in C (J per eV).
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity in F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// One Debye in C·m.
pub const DEBYE: f64 = 3.335_640_952e-30;
/// ħc in eV·nm.
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;

/// Conversion factors between eV and the frequency units used at I/O
/// boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitConventions {
    pub hbar_ev_fs: f64,
    pub ev_to_rad_per_fs: f64,
    /// Ordinary (cycles) frequency in THz per eV.
    pub ev_to_thz_ordinary: f64,
}

impl Default for UnitConventions {
    fn default() -> Self {
        let ev_to_rad_per_fs = 1.0 / HBAR_EV_FS;
        Self {
            hbar_ev_fs: HBAR_EV_FS,
            ev_to_rad_per_fs,
            ev_to_thz_ordinary: ev_to_rad_per_fs * 1000.0 / (2.0 * std::f64::consts::PI),
        }
    }
}

impl UnitConventions {
    /// Kernel area in THz² (ordinary frequency) to eV².
    pub fn area_thz2_to_ev2(&self, area: f64) -> Result<f64> {
        if !(area >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "area must be non-negative, got {area}"
            )));
        }
        Ok(area / (self.ev_to_thz_ordinary * self.ev_to_thz_ordinary))
    }

    pub fn area_ev2_to_thz2(&self, area: f64) -> f64 {
        area * self.ev_to_thz_ordinary * self.ev_to_thz_ordinary
    }

    /// fs to natural time units (ħ/eV).
    pub fn fs_to_natural(&self, t_fs: f64) -> f64 {
        t_fs / self.hbar_ev_fs
    }

    pub fn natural_to_fs(&self, t: f64) -> f64 {
        t * self.hbar_ev_fs
    }

    /// Drive amplitude in Hz^{1/2} (angular, SI seconds) to eV^{1/2}.
    pub fn drive_hz_sqrt_to_ev_sqrt(&self, d: f64) -> f64 {
        // s^{-1/2} -> fs^{-1/2} -> eV^{1/2}
        d * 1e-7_f64.sqrt() * 1e-8_f64.sqrt() * self.hbar_ev_fs.sqrt()
    }

    /// Rate in eV to 1/fs (angular).
    pub fn ev_to_per_fs(&self, rate: f64) -> f64 {
        rate / self.hbar_ev_fs
    }
}

/// Shorthand for [`UnitConventions::area_thz2_to_ev2`] with default constants.
pub fn convert_area_thz2_to_ev2(area: f64) -> Result<f64> {
    UnitConventions::default().area_thz2_to_ev2(area)
}

/// Strictly increasing grid of positive photon energies (eV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    values: Vec<f64>,
}

impl EnergyGrid {
    /// Validates and wraps an arbitrary (possibly non-uniform) grid.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Grid(format!(
                "grid needs at least 2 points, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Grid(format!(
                "grid values must be positive, got {bad}"
            )));
        }
        for (i, w) in values.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Grid(format!(
                    "grid not strictly increasing at index {}: {} -> {}",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= self.min() && e <= self.max()
    }

    /// Smallest spacing between consecutive points.
    pub fn min_spacing(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid quadrature weights for this grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = self.values[i + 1] - self.values[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }

    /// Trapezoid rule for samples `f` on this grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.values.len());
        self.values
            .windows(2)
            .zip(f.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Index of the grid point closest to `e`.
    pub fn nearest_index(&self, e: f64) -> usize {
        match self
            .values
            .binary_search_by(|v| v.partial_cmp(&e).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.values.len() => self.values.len() - 1,
            Err(i) => {
                if (self.values[i] - e).abs() < (e - self.values[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }

    /// Linear interpolation of samples `f` at energy `e` (must lie inside the grid).
    pub fn interpolate(&self, f: &[f64], e: f64) -> Option<f64> {
        if !self.contains(e) {
            return None;
        }
        let i = match self
            .values
            .binary_search_by(|v| v.partial_cmp(&e).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => return Some(f[i]),
            Err(i) => i,
        };
        let (x0, x1) = (self.values[i - 1], self.values[i]);
        let u = (e - x0) / (x1 - x0);
        Some(f[i - 1] * (1.0 - u) + f[i] * u)
    }
}

/// Uniform grid with `n` points including both endpoints.
pub fn make_grid(emin: f64, emax: f64, n: usize) -> Result<EnergyGrid> {
    if !(emin > 0.0) {
        return Err(Error::Grid(format!("emin must be positive, got {emin}")));
    }
    if !(emax > emin) {
        return Err(Error::Grid(format!(
            "need emin < emax, got {emin} >= {emax}"
        )));
    }
    if n < 2 {
        return Err(Error::Grid(format!("need n >= 2, got {n}")));
    }
    let h = (emax - emin) / (n - 1) as f64;
    let mut values: Vec<f64> = (0..n).map(|i| emin + h * i as f64).collect();
    values[n - 1] = emax;
    EnergyGrid::from_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn three_point_grid() {
        let g = make_grid(2.4, 3.4, 3).unwrap();
        assert_relative_eq!(g.values()[0], 2.4);
        assert_relative_eq!(g.values()[1], 2.9, epsilon = 1e-15);
        assert_relative_eq!(g.values()[2], 3.4);
    }

    #[test]
    fn default_grid_spacing_quarter_mev() {
        let g = make_grid(2.4, 3.4, 4001).unwrap();
        assert_relative_eq!(g.min_spacing(), 0.25e-3, max_relative = 1e-9);
    }

    #[test]
    fn grid_errors() {
        assert!(make_grid(3.4, 2.4, 10).is_err());
        assert!(make_grid(0.0, 2.4, 10).is_err());
        assert!(make_grid(-1.0, 2.4, 10).is_err());
        assert!(make_grid(1.0, 2.4, 1).is_err());
        assert!(EnergyGrid::from_values(vec![1.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn conventions_are_consistent() {
        let c = UnitConventions::default();
        assert_relative_eq!(c.ev_to_rad_per_fs, 1.519267, max_relative = 1e-6);
        assert_relative_eq!(c.ev_to_thz_ordinary, 241.7990, max_relative = 1e-6);
        assert_relative_eq!(c.ev_to_rad_per_fs * c.hbar_ev_fs, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn table_area_converts_to_ev2() {
        let a = convert_area_thz2_to_ev2(175.1694).unwrap();
        assert!((a - 0.0029961).abs() < 1e-7, "{a}");
        assert_eq!(convert_area_thz2_to_ev2(0.0).unwrap(), 0.0);
        assert!(convert_area_thz2_to_ev2(-1.0).is_err());
    }

    #[test]
    fn drive_conversion() {
        // 1 s^-1/2 = 10^-7.5 fs^-1/2; times sqrt(hbar) to eV^1/2.
        let c = UnitConventions::default();
        let d = c.drive_hz_sqrt_to_ev_sqrt(1.0);
        assert_relative_eq!(
            d,
            10f64.powf(-7.5) * HBAR_EV_FS.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn nearest_and_interp() {
        let g = make_grid(1.0, 2.0, 11).unwrap();
        assert_eq!(g.nearest_index(1.26), 3);
        assert_eq!(g.nearest_index(0.5), 0);
        assert_eq!(g.nearest_index(5.0), 10);
        let f: Vec<f64> = g.values().iter().map(|x| 2.0 * x).collect();
        assert_relative_eq!(g.interpolate(&f, 1.234).unwrap(), 2.468, epsilon = 1e-12);
        assert!(g.interpolate(&f, 2.5).is_none());
    }

    proptest! {
        #[test]
        fn area_roundtrip(a in 0.0f64..1e6) {
            let c = UnitConventions::default();
            let back = c.area_ev2_to_thz2(c.area_thz2_to_ev2(a).unwrap());
            prop_assert!((back - a).abs() <= 1e-12 * a.max(1e-300));
        }

        #[test]
        fn grid_span(emin in 0.1f64..5.0, span in 0.01f64..5.0, n in 2usize..5000) {
            let g = make_grid(emin, emin + span, n).unwrap();
            let h = (g.max() - g.min()) / (n - 1) as f64;
            prop_assert!((h * (n - 1) as f64 - span).abs() <= 1e-12 * span);
            prop_assert_eq!(g.len(), n);
        }
    }
}
