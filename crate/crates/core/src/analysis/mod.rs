//! Observables derived from traces and photon maps.

pub mod coherence;
pub mod coupling;
pub mod map;

pub use coherence::{
    coherence_spectrum, find_peaks, rabi_splitting, rabi_splitting_with, CoherenceSpectrum, Peak,
    Window,
};
pub use coupling::{
    crossover_scan, stationary_photon_spectrum, stationary_splitting, strong_coupling_criterion,
    strong_coupling_from_set, CrossoverRow, CrossoverScan, StrongCoupling, FWHM_PER_SIGMA,
};
pub use map::{
    beating_period, field_intensity_at_dipole, interference_map, InterferenceMap, LineFit,
    NodeLine, NodeOptions, NodePoint,
};
