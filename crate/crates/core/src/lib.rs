pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod io;
pub mod lorentzian;
pub mod nanophotonics;
pub mod spectrum;
pub mod tables;
pub mod units;

pub use dynamics::{
    AmplitudeTrace, Evolution, ExponentialSum, InitialState, PhotonField, ScenarioConfig,
};
pub use error::{Error, Result};
pub use fit::{fit_lorentzians, fit_source_product, FitOptions, FitReport};
pub use lorentzian::{eval_lorentzians, Lorentzian, LorentzianSet};
pub use num_complex::Complex64;
pub use spectrum::TabulatedSpectrum;
pub use units::{make_grid, EnergyGrid, UnitConventions};
