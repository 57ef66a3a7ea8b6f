//! Drude metal, Mie-theory Green's function and kernel spectra for a dipole
//! near a metal nanosphere.

pub mod drude;
pub mod kernel;
pub mod mie;
pub mod special;

pub use drude::{drude_permittivity, DrudeMetal};
pub use kernel::{free_space_kernel, free_space_rate, kernel_spectrum, purcell_factor, Dipole};
pub use mie::{mie_scattered_gzz, mie_scattered_gzz_eps, MieSum, SphereGeometry};
