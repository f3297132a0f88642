//! Grid-based restricted Hartree-Fock with separable Gaussian bases.

pub mod basis;
pub mod coulomb;
pub mod io;
pub mod one_electron;
pub mod scf;
pub mod tei;

pub use basis::{
    discretize_basis, BasisSet, Molecule, Nucleus, SeparableBasisFunction, Shell, ShellKind,
};
pub use coulomb::{
    coulomb_matrix, density_matrix, density_tensor, density_tensor_from_matrix, exchange_matrix,
    hartree_potential,
};
pub use one_electron::{
    kinetic_matrix, nuclear_matrix, nuclear_potential, overlap_matrix, MassMode,
};
pub use scf::{
    basis_kernel, core_matrices, generalized_eigen, scf_from_matrices, scf_solve, FockRoute,
    ScfConfig, ScfIteration, ScfState,
};
pub use tei::{
    coulomb_from_factors, exchange_from_factors, fock_from_factors, tei_cholesky,
    tei_convolution_matrices, tei_density_fitting, DensityFit, TeiCholesky, TeiFactorization,
};
