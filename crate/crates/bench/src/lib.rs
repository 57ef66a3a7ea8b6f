//! Shared fixtures for the benchmarks.

use pseudomode::nanophotonics::{Dipole, DrudeMetal, SphereGeometry};
use pseudomode::{make_grid, tables, EnergyGrid, InitialState, ScenarioConfig};

pub const OMEGA_E: f64 = 2.97;

pub fn sphere(gap: f64) -> SphereGeometry {
    SphereGeometry {
        radius: 20.0,
        gap,
        eps_background: 1.0,
    }
}

pub fn dipole() -> Dipole {
    Dipole {
        d_eg: 24.0,
        omega_e: OMEGA_E,
    }
}

pub fn silver() -> DrudeMetal {
    DrudeMetal::SILVER
}

pub fn kernel_grid(n: usize) -> EnergyGrid {
    make_grid(2.4, 3.4, n).expect("valid grid")
}

pub fn scenario(initial: InitialState, t_max: f64) -> ScenarioConfig {
    ScenarioConfig {
        kernel: tables::sphere_h2(),
        omega_e: OMEGA_E,
        initial,
        t_max,
        dt: 0.25,
        grid: kernel_grid(2001),
        source_terms: 4,
    }
}
