//! Single-excitation dynamics: closed-form Laplace inversion for Lorentzian
//! kernels and a direct Volterra solver used as an independent oracle.

pub mod field;
pub mod laplace;
pub mod poly;
pub mod scenario;
pub mod volterra;

pub use field::{
    analytic_photon_single, calibrate_drive, ground_amplitude, moment_integral, photon_amplitude,
    stationary_amplitude, AmplitudeTrace, Evolution, PCoefficient, PhotonField,
};
pub use laplace::{
    build_laplace_rational, c_e0_closed_form_single, invert_laplace, solve_c_e0,
    solve_c_e0_polynomial, source_term, ExpTerm, ExponentialSum, LaplaceRational, Source,
};
pub use scenario::{
    gaussian_norm, InitialState, RealLineQuadrature, ScenarioConfig, ScenarioSources,
};
pub use volterra::{integrate_ide, tabulate_time_kernel, TimeKernel};
