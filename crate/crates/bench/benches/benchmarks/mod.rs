pub mod fit;
pub mod kernel;
pub mod solver;
