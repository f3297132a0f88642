//! Rank-structured tensor numerics on Cartesian grids: separable kernel
//! expansions, canonical and Tucker algebra, rank reduction, quantics
//! tensor trains, grid Hartree-Fock with factorized two-electron integrals,
//! MP2 and assembled lattice sums.

pub mod cli;
pub mod conv;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod hf;
pub mod kernel;
pub mod lattice;
pub mod linalg;
pub mod mp2;
pub mod qtt;
pub mod reduce;
pub mod tensor;

pub use error::{Error, Result};
