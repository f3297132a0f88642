//! Electron density, Hartree potential and Coulomb/exchange matrices by
//! tensor-product convolution on the grid.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::BasisSet;
use super::one_electron::potential_matrix;
use crate::error::{invalid, Result};
use crate::kernel::KernelTensor;
use crate::reduce::{reduce_rank, ReductionConfig};
use crate::tensor::{add, convolve_with_kernel, hadamard, scalar_product, CanonicalTensor3};

/// `D = 2 C C^T` over the occupied columns.
pub fn density_matrix(c_occ: &DMatrix<f64>) -> DMatrix<f64> {
    (c_occ * c_occ.transpose()) * 2.0
}

/// `Theta = sum_{mu nu} D_{mu nu} G_mu (.) G_nu`, optionally rank-reduced.
pub fn density_tensor_from_matrix(
    bs: &BasisSet,
    d: &DMatrix<f64>,
    reduce: Option<&ReductionConfig>,
) -> Result<CanonicalTensor3> {
    let nb = bs.len();
    if d.shape() != (nb, nb) {
        return invalid("density matrix shape does not match the basis");
    }
    let mut theta = CanonicalTensor3::zeros(bs.grid().extents());
    for mu in 0..nb {
        for nu in mu..nb {
            let w = if mu == nu {
                d[(mu, mu)]
            } else {
                d[(mu, nu)] + d[(nu, mu)]
            };
            if w == 0.0 {
                continue;
            }
            theta = add(&theta, &hadamard(bs.tensor(mu), bs.tensor(nu))?.scaled(w))?;
        }
    }
    match reduce {
        Some(cfg) if theta.rank() > 0 => reduce_rank(&theta, cfg),
        _ => Ok(theta),
    }
}

/// Density of the doubly occupied orbitals `c_occ`.
pub fn density_tensor(
    bs: &BasisSet,
    c_occ: &DMatrix<f64>,
    reduce: Option<&ReductionConfig>,
) -> Result<CanonicalTensor3> {
    density_tensor_from_matrix(bs, &density_matrix(c_occ), reduce)
}

fn check_kernel(theta: &CanonicalTensor3, kernel: &KernelTensor) -> Result<()> {
    if !kernel.doubled || kernel.tensor.dims() != theta.dims().map(|n| 2 * n) {
        return invalid("kernel must live on the doubled grid of the density");
    }
    Ok(())
}

/// `V_H(x) = sum_y Theta(y) P(x - y)`, approximating `int rho(y) / |x - y| dy`.
pub fn hartree_potential(
    theta: &CanonicalTensor3,
    kernel: &KernelTensor,
) -> Result<CanonicalTensor3> {
    check_kernel(theta, kernel)?;
    convolve_with_kernel(theta, &kernel.tensor, [1.0; 3])
}

/// `J_km = h^3 <G_k (.) G_m, V_H>`.
pub fn coulomb_matrix(bs: &BasisSet, v_h: &CanonicalTensor3) -> Result<DMatrix<f64>> {
    Ok(potential_matrix(bs, v_h)? * bs.grid().cell_volume())
}

/// Positive exchange `sum_a (k phi_a | phi_a m)`; enters the Fock matrix with a minus sign.
pub fn exchange_matrix(
    bs: &BasisSet,
    c_occ: &DMatrix<f64>,
    kernel: &KernelTensor,
) -> Result<DMatrix<f64>> {
    let nb = bs.len();
    if c_occ.nrows() != nb {
        return invalid("orbital coefficients do not match the basis");
    }
    let vol = bs.grid().cell_volume();
    let mut k_total = DMatrix::zeros(nb, nb);
    for a in 0..c_occ.ncols() {
        let mut phi = CanonicalTensor3::zeros(bs.grid().extents());
        for mu in 0..nb {
            if c_occ[(mu, a)] != 0.0 {
                phi = add(&phi, &bs.tensor(mu).scaled(c_occ[(mu, a)]))?;
            }
        }
        check_kernel(&phi, kernel)?;
        let pots = (0..nb)
            .into_par_iter()
            .map(|m| convolve_with_kernel(&hadamard(&phi, bs.tensor(m))?, &kernel.tensor, [1.0; 3]))
            .collect::<Result<Vec<_>>>()?;
        let left = (0..nb)
            .map(|k| hadamard(bs.tensor(k), &phi))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> =
            (0..nb).flat_map(|k| (k..nb).map(move |m| (k, m))).collect();
        let vals = pairs
            .par_iter()
            .map(|&(k, m)| scalar_product(&left[k], &pots[m]))
            .collect::<Result<Vec<f64>>>()?;
        for (&(k, m), v) in pairs.iter().zip(vals) {
            k_total[(k, m)] += v * vol;
            if k != m {
                k_total[(m, k)] += v * vol;
            }
        }
    }
    Ok(k_total)
}
