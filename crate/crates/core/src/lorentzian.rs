//! Lorentzian pseudo-mode sets and their evaluation.
//!
//! A set {(A_j, B_j, Ω_j)} models a spectrum as
//! Σ_j A_j/π · B_j/((ω−Ω_j)² + B_j²): A_j is the area (eV²), B_j the
//! half-width (eV) and Ω_j the centre (eV). In the time domain the same set
//! is the exponential memory kernel Σ_j A_j exp[−(B_j + i(Ω_j − ω_e))τ].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::TabulatedSpectrum;
use crate::units::{EnergyGrid, UnitConventions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    pub area: f64,
    pub half_width: f64,
    pub center: f64,
}

impl Lorentzian {
    pub fn new(area: f64, half_width: f64, center: f64) -> Self {
        Self {
            area,
            half_width,
            center,
        }
    }

    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        let u = omega - self.center;
        self.area / std::f64::consts::PI * self.half_width
            / (u * u + self.half_width * self.half_width)
    }

    /// Complex decay rate B + i(Ω − ω_e) of the time-domain kernel term.
    pub fn rate(&self, omega_e: f64) -> Complex64 {
        Complex64::new(self.half_width, self.center - omega_e)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LorentzianSet {
    terms: Vec<Lorentzian>,
}

impl LorentzianSet {
    pub fn new(terms: Vec<Lorentzian>) -> Result<Self> {
        for t in &terms {
            if !(t.half_width > 0.0) || !t.area.is_finite() || !t.center.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "invalid Lorentzian term {t:?} (need B > 0, finite A and Ω)"
                )));
            }
        }
        Ok(Self { terms })
    }

    pub fn empty() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn single(area: f64, half_width: f64, center: f64) -> Result<Self> {
        Self::new(vec![Lorentzian::new(area, half_width, center)])
    }

    /// Builds a set from table rows (A in THz², B in eV, Ω in eV).
    pub fn from_table_rows(rows: &[(f64, f64, f64)], conv: &UnitConventions) -> Result<Self> {
        let terms = rows
            .iter()
            .map(|&(a, b, c)| Ok(Lorentzian::new(conv.area_thz2_to_ev2(a)?, b, c)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn terms(&self) -> &[Lorentzian] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.terms.iter().map(|t| t.area).sum()
    }

    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(omega)).sum()
    }

    /// Sorted by centre, ascending.
    pub fn canonical(mut self) -> Self {
        self.terms.sort_by(|a, b| {
            a.center
                .partial_cmp(&b.center)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        self
    }

    /// Same centres and widths, areas multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Lorentzian::new(t.area * factor, t.half_width, t.center))
                .collect(),
        }
    }

    /// Evaluates the time-domain kernel Σ A_j e^{−(B_j + i(Ω_j−ω_e))τ}
    /// at τ in natural units (ħ/eV).
    pub fn time_kernel(&self, omega_e: f64, tau: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.area * (-t.rate(omega_e) * tau).exp())
            .sum()
    }
}

/// Pointwise evaluation of a set on a grid.
pub fn eval_lorentzians(set: &LorentzianSet, grid: &EnergyGrid) -> TabulatedSpectrum {
    let values = grid
        .values()
        .iter()
        .map(|&w| set.eval(w).max(0.0))
        .collect();
    TabulatedSpectrum::new(grid.clone(), values)
        .expect("Lorentzian sums with positive widths are finite")
}
