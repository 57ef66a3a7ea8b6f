use pseudomode::nanophotonics::kernel_spectrum;
use pseudomode::{Evolution, InitialState};
use pseudomode_bench::{dipole, kernel_grid, scenario, silver, sphere};

#[test]
fn fixtures_are_valid_inputs() {
    let k = kernel_spectrum(&sphere(2.0), &silver(), &dipole(), &kernel_grid(101)).unwrap();
    assert!(k.values().iter().all(|v| *v > 0.0));
    let evo = Evolution::new(&scenario(InitialState::ExcitedQubit, 50.0)).unwrap();
    assert!(evo.trace().max_norm_error() < 1e-6);
}
