//! Strong-coupling diagnostics: area/width criterion, the stationary photon
//! spectrum of a resonant single Lorentzian, and bandwidth crossover scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coherence::{coherence_spectrum, CoherenceSpectrum, Window};
use crate::dynamics::{Evolution, InitialState, ScenarioConfig};
use crate::error::{Error, Result};
use crate::lorentzian::LorentzianSet;
use crate::spectrum::TabulatedSpectrum;
use crate::units::make_grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongCoupling {
    pub strong: bool,
    /// 2∫K dω (eV²)
    pub lhs: f64,
    /// (Γ_K/2)² (eV²)
    pub rhs: f64,
    /// eV
    pub fwhm: f64,
    /// eV²
    pub area: f64,
}

impl StrongCoupling {
    pub fn from_parts(area: f64, fwhm: f64) -> Self {
        let lhs = 2.0 * area;
        let rhs = 0.25 * fwhm * fwhm;
        Self {
            strong: area > 0.0 && lhs > rhs,
            lhs,
            rhs,
            fwhm,
            area,
        }
    }
}

/// 2∫K dω > (Γ_K/2)² with Γ_K the FWHM of the dominant feature.
pub fn strong_coupling_criterion(kernel: &TabulatedSpectrum) -> Result<StrongCoupling> {
    let area = kernel.area();
    if area == 0.0 {
        return Ok(StrongCoupling::from_parts(0.0, 0.0));
    }
    let fwhm = kernel
        .fwhm()
        .ok_or_else(|| Error::Analysis("kernel FWHM undefined (monotone spectrum)".into()))?;
    Ok(StrongCoupling::from_parts(area, fwhm))
}

/// Same criterion for a Lorentzian model. A single term gives exactly
/// 2A > B²; several terms are tabulated finely around their centers.
pub fn strong_coupling_from_set(set: &LorentzianSet) -> Result<StrongCoupling> {
    let area = set.total_area();
    match set.terms() {
        [] => Ok(StrongCoupling::from_parts(0.0, 0.0)),
        [t] => Ok(StrongCoupling::from_parts(t.area, 2.0 * t.half_width)),
        terms => {
            let bmax = terms.iter().map(|t| t.half_width).fold(0.0, f64::max);
            let lo = terms.iter().map(|t| t.center).fold(f64::INFINITY, f64::min);
            let hi = terms
                .iter()
                .map(|t| t.center)
                .fold(f64::NEG_INFINITY, f64::max);
            let grid = make_grid((lo - 20.0 * bmax).max(1e-6), hi + 20.0 * bmax, 40001)?;
            let tab = crate::lorentzian::eval_lorentzians(set, &grid);
            let fwhm = tab
                .fwhm()
                .ok_or_else(|| Error::Analysis("kernel FWHM undefined".into()))?;
            Ok(StrongCoupling::from_parts(area, fwhm))
        }
    }
}

/// |C_g1∞(δ)|² = K(δ)(δ²+B²)/(A²+(B²−2A)δ²+δ⁴) for a resonant single
/// Lorentzian (A in eV², B and δ in eV).
pub fn stationary_photon_spectrum(area: f64, half_width: f64, deltas: &[f64]) -> Vec<f64> {
    let (a, b) = (area, half_width);
    deltas
        .iter()
        .map(|&d| {
            let d2 = d * d;
            let k = a / std::f64::consts::PI * b / (d2 + b * b);
            k * (d2 + b * b) / (a * a + (b * b - 2.0 * a) * d2 + d2 * d2)
        })
        .collect()
}

/// Peak separation √(4A − 2B²) of the stationary spectrum, if split.
pub fn stationary_splitting(area: f64, half_width: f64) -> Option<f64> {
    let x = 4.0 * area - 2.0 * half_width * half_width;
    (x > 0.0).then(|| x.sqrt())
}

/// Wraps the stationary spectrum as a spectrum on the detuning axis.
pub fn stationary_spectrum(area: f64, half_width: f64, deltas: &[f64]) -> CoherenceSpectrum {
    CoherenceSpectrum {
        frequencies: deltas.to_vec(),
        magnitude: stationary_photon_spectrum(area, half_width, deltas),
        center: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    /// eV
    pub sigma: f64,
    /// 2√(2 ln 2)σ / Γ_K
    pub bandwidth_ratio: f64,
    /// Magnitude at ω_e.
    pub elastic: f64,
    /// Largest magnitude within ±25% of ω_e ± Ω_R/2.
    pub shoulder: f64,
    pub peak_ratio: f64,
    pub norm_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverScan {
    pub rows: Vec<CrossoverRow>,
    pub spectra: Vec<CoherenceSpectrum>,
}

pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Runs resonant Gaussian-photon scenarios (ω_s = ω_e) for each σ and
/// tabulates elastic-peak height over Rabi-shoulder height. `base` supplies
/// kernel, grid, timing and fit order; its initial state is replaced.
/// `splitting` is the reference Rabi splitting and `kernel_fwhm` Γ_K (eV).
pub fn crossover_scan(
    base: &ScenarioConfig,
    sigmas: &[f64],
    splitting: f64,
    kernel_fwhm: f64,
    window: Window,
    pad_factor: usize,
) -> Result<CrossoverScan> {
    let we = base.omega_e;
    let results: Vec<Result<(CrossoverRow, CoherenceSpectrum)>> = sigmas
        .par_iter()
        .map(|&sigma| {
            let cfg = ScenarioConfig {
                initial: InitialState::GaussianPhoton { omega_s: we, sigma },
                ..base.clone()
            };
            let evo = Evolution::new(&cfg)?;
            let trace = evo.trace();
            let spec = coherence_spectrum(&trace, we, window, pad_factor)?;
            let h = 0.5 * splitting;
            let elastic = spec.value_at(we);
            let shoulder = spec
                .max_in(we - 1.25 * h, we - 0.75 * h)
                .max(spec.max_in(we + 0.75 * h, we + 1.25 * h));
            let row = CrossoverRow {
                sigma,
                bandwidth_ratio: FWHM_PER_SIGMA * sigma / kernel_fwhm,
                elastic,
                shoulder,
                peak_ratio: elastic / shoulder,
                norm_error: trace.max_norm_error(),
            };
            Ok((row, spec))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut spectra = Vec::with_capacity(results.len());
    for r in results {
        let (row, spec) = r?;
        rows.push(row);
        spectra.push(spec);
    }
    Ok(CrossoverScan { rows, spectra })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::coherence::rabi_splitting;

    #[test]
    fn single_lorentzian_criterion_is_two_a_gt_b_squared() {
        let s = LorentzianSet::single(0.00299, 0.0325, 2.97).unwrap();
        let c = strong_coupling_from_set(&s).unwrap();
        assert!((c.lhs - 2.0 * 0.00299).abs() < 1e-15);
        assert!((c.rhs - 0.0325 * 0.0325).abs() < 1e-15);
        assert!(c.strong);
        let w = LorentzianSet::single(0.0004, 0.0325, 2.97).unwrap();
        assert!(!strong_coupling_from_set(&w).unwrap().strong);
    }

    #[test]
    fn tabulated_single_lorentzian_matches_set() {
        let s = LorentzianSet::single(0.00299, 0.0325, 2.97).unwrap();
        let g = make_grid(1.0, 5.0, 80001).unwrap();
        let c = strong_coupling_criterion(&crate::lorentzian::eval_lorentzians(&s, &g)).unwrap();
        assert!((c.fwhm - 0.065).abs() < 1e-6);
        let b: f64 = 0.0325;
        let inside = 0.00299 / std::f64::consts::PI * ((2.03 / b).atan() + (1.97 / b).atan());
        assert!((c.area / inside - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reference_numbers_are_strong() {
        let c = StrongCoupling::from_parts(0.00477, 0.063);
        assert!((c.lhs - 9.54e-3).abs() < 1e-6);
        assert!((c.rhs - 9.92e-4).abs() < 1e-6);
        assert!(c.strong);
    }

    #[test]
    fn zero_area_is_weak() {
        let g = make_grid(2.0, 3.0, 11).unwrap();
        let t = TabulatedSpectrum::new(g, vec![0.0; 11]).unwrap();
        assert!(!strong_coupling_criterion(&t).unwrap().strong);
        assert!(
            !strong_coupling_from_set(&LorentzianSet::empty())
                .unwrap()
                .strong
        );
    }

    #[test]
    fn stationary_splitting_and_peaks() {
        let (a, b) = (0.00299, 0.0325);
        let split = stationary_splitting(a, b).unwrap();
        assert!((split - 0.0987).abs() < 1e-3);
        let n = 4001;
        let deltas: Vec<f64> = (0..n)
            .map(|i| -0.2 + 0.4 * i as f64 / (n - 1) as f64)
            .collect();
        let spec = stationary_spectrum(a, b, &deltas);
        let got = rabi_splitting(&spec).unwrap();
        assert!(
            (got - split).abs() < deltas[1] - deltas[0],
            "{got} vs {split}"
        );
    }

    #[test]
    fn stationary_single_peak_when_weak() {
        let (a, b) = (0.0004, 0.0325);
        assert!(stationary_splitting(a, b).is_none());
        let deltas: Vec<f64> = (0..2001).map(|i| -0.2 + 0.0002 * i as f64).collect();
        let s = stationary_photon_spectrum(a, b, &deltas);
        let imax = (0..s.len()).max_by(|&i, &j| s[i].total_cmp(&s[j])).unwrap();
        assert!(deltas[imax].abs() < 1e-9);
        assert!(rabi_splitting(&stationary_spectrum(a, b, &deltas)).is_none());
    }

    #[test]
    fn stationary_tail_is_k_over_delta_squared() {
        let (a, b) = (0.00299, 0.0325);
        let d = 50.0;
        let s = stationary_photon_spectrum(a, b, &[d])[0];
        let k = a / std::f64::consts::PI * b / (d * d + b * b);
        assert!((s * d * d / k - 1.0).abs() < 1e-3);
    }

    #[test]
    fn stationary_matches_analytic_amplitude() {
        let (a, b) = (0.00299, 0.0325);
        for d in [-0.1, -0.03, 0.0, 0.02, 0.07] {
            let s = stationary_photon_spectrum(a, b, &[d])[0];
            let c = crate::dynamics::stationary_amplitude(a, b, d).norm_sqr();
            assert!((s - c).abs() < 1e-12 * c.max(1.0));
        }
    }
}
