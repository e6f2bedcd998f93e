pub mod cli;
pub mod constraints;
pub mod flexibility;
pub mod grid;
pub mod nodal;
pub mod polytope;
pub mod sensitivity;
