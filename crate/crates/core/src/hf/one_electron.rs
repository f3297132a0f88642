//! Overlap, kinetic and nuclear-attraction matrices from 1D operations.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::{BasisSet, Molecule};
use crate::error::{invalid, Result};
use crate::grid::window_for_center_tol;
use crate::kernel::KernelTensor;
use crate::tensor::{hadamard, scalar_product, CanonicalTensor3};

/// How the 1D mass matrix enters the kinetic operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassMode {
    /// `h I`
    #[default]
    Lumped,
    /// Linear finite elements, `h/6 tridiag(1, 4, 1)`.
    Exact,
}

/// Relative snap tolerance for nuclei, in units of `h`.
pub const NUCLEUS_SNAP: f64 = 1e-6;

fn tridiag_apply(v: &[f64], diag: f64, off: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut s = diag * v[i];
            if i > 0 {
                s += off * v[i - 1];
            }
            if i + 1 < n {
                s += off * v[i + 1];
            }
            s
        })
        .collect()
}

/// `A^T W A` where `W` acts through `op` on each column of `A`.
fn weighted_gram(a: &DMatrix<f64>, op: impl Fn(&[f64]) -> Vec<f64> + Sync) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..a.ncols())
        .into_par_iter()
        .map(|c| op(a.column(c).as_slice()))
        .collect();
    let wa = DMatrix::from_fn(a.nrows(), a.ncols(), |i, c| cols[c][i]);
    let mut g = a.transpose() * wa;
    crate::linalg::symmetrize(&mut g);
    g
}

/// Contracts primitive-pair values into an `N_b x N_b` matrix.
fn contract(bs: &BasisSet, value: impl Fn(usize, usize) -> f64 + Sync) -> DMatrix<f64> {
    let offsets: Vec<usize> = bs
        .functions()
        .iter()
        .scan(0, |acc, f| {
            let o = *acc;
            *acc += f.primitive_count();
            Some(o)
        })
        .collect();
    let nb = bs.len();
    let entries: Vec<f64> = (0..nb * nb)
        .into_par_iter()
        .map(|km| {
            let (k, m) = (km / nb, km % nb);
            if m < k {
                return 0.0;
            }
            let (fk, fm) = (&bs.functions()[k], &bs.functions()[m]);
            let mut s = 0.0;
            for p in 0..fk.primitive_count() {
                for q in 0..fm.primitive_count() {
                    s += fk.coefficients[p]
                        * fm.coefficients[q]
                        * value(offsets[k] + p, offsets[m] + q);
                }
            }
            s
        })
        .collect();
    DMatrix::from_fn(nb, nb, |k, m| {
        if m >= k {
            entries[k * nb + m]
        } else {
            entries[m * nb + k]
        }
    })
}

/// `S_km = h^3 <G_k, G_m>`.
pub fn overlap_matrix(bs: &BasisSet) -> DMatrix<f64> {
    let grams: Vec<DMatrix<f64>> = (0..3)
        .map(|l| {
            let h = bs.grid().axes[l].h;
            let a = bs.side_matrix(l);
            (a.transpose() * &a) * h
        })
        .collect();
    contract(bs, |p, q| {
        grams[0][(p, q)] * grams[1][(p, q)] * grams[2][(p, q)]
    })
}

/// Galerkin kinetic energy `1/2 sum_l K_l (x) M_l' (x) M_l''` built from 1D
/// stiffness `tridiag(-1, 2, -1) / h` and the chosen mass matrix.
pub fn kinetic_matrix(bs: &BasisSet, mass: MassMode) -> DMatrix<f64> {
    let mut stiff = Vec::new();
    let mut masses = Vec::new();
    for l in 0..3 {
        let h = bs.grid().axes[l].h;
        let a = bs.side_matrix(l);
        stiff.push(weighted_gram(&a, |v| tridiag_apply(v, 2.0 / h, -1.0 / h)));
        masses.push(match mass {
            MassMode::Lumped => (a.transpose() * &a) * h,
            MassMode::Exact => weighted_gram(&a, |v| tridiag_apply(v, 4.0 * h / 6.0, h / 6.0)),
        });
    }
    contract(bs, |p, q| {
        0.5 * (stiff[0][(p, q)] * masses[1][(p, q)] * masses[2][(p, q)]
            + masses[0][(p, q)] * stiff[1][(p, q)] * masses[2][(p, q)]
            + masses[0][(p, q)] * masses[1][(p, q)] * stiff[2][(p, q)])
    })
}

fn check_kernel(bs: &BasisSet, kernel: &KernelTensor) -> Result<()> {
    if !kernel.doubled || kernel.tensor.dims() != bs.grid().extents().map(|n| 2 * n) {
        return invalid("reference kernel must live on the doubled basis grid");
    }
    Ok(())
}

/// `P_c = sum_a Z_a W_a P`, rank `M R`; entries approximate `h^3 sum Z / |x - a|`.
pub fn nuclear_potential(
    mol: &Molecule,
    bs: &BasisSet,
    kernel: &KernelTensor,
) -> Result<CanonicalTensor3> {
    check_kernel(bs, kernel)?;
    let grid = bs.grid();
    let dims = grid.extents();
    let r = kernel.rank();
    let mut weights = Vec::with_capacity(mol.nuclei.len() * r);
    let mut cols: [Vec<f64>; 3] = Default::default();
    for a in &mol.nuclei {
        let w = window_for_center_tol(grid, a.center, NUCLEUS_SNAP * grid.h())?;
        weights.extend(kernel.tensor.weights().iter().map(|x| x * a.z));
        for l in 0..3 {
            for q in 0..r {
                cols[l].extend_from_slice(w.apply(l, kernel.tensor.column(l, q)));
            }
        }
    }
    let m = weights.len();
    let [c0, c1, c2] = cols;
    CanonicalTensor3::new(
        weights,
        [
            DMatrix::from_vec(dims[0], m, c0),
            DMatrix::from_vec(dims[1], m, c1),
            DMatrix::from_vec(dims[2], m, c2),
        ],
    )
}

/// `V_km = -<G_k (.) G_m, P_c>`; negative definite for attractive nuclei.
pub fn nuclear_matrix(
    bs: &BasisSet,
    mol: &Molecule,
    kernel: &KernelTensor,
) -> Result<DMatrix<f64>> {
    let pc = nuclear_potential(mol, bs, kernel)?;
    potential_matrix(bs, &pc).map(|m| -m)
}

/// `h^0 <G_k (.) G_m, P>` for a potential whose entries already carry `h^3`.
pub fn potential_matrix(bs: &BasisSet, p: &CanonicalTensor3) -> Result<DMatrix<f64>> {
    let nb = bs.len();
    let pairs: Vec<(usize, usize)> = (0..nb).flat_map(|k| (k..nb).map(move |m| (k, m))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(k, m)| scalar_product(&hadamard(bs.tensor(k), bs.tensor(m))?, p))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = DMatrix::zeros(nb, nb);
    for (&(k, m), v) in pairs.iter().zip(vals) {
        out[(k, m)] = v;
        out[(m, k)] = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use crate::hf::basis::SeparableBasisFunction;

    #[test]
    fn stencil_null_vector() {
        let v = vec![1.0; 6];
        let out = tridiag_apply(&v, 2.0, -1.0);
        assert!(out[1..5].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn single_function_overlap_and_kinetic() {
        let g = Grid3::cubic(8.0, 128).unwrap();
        let alpha = 0.8;
        let bs =
            BasisSet::new(vec![SeparableBasisFunction::s([0.0; 3], alpha).unwrap()], g).unwrap();
        let s = overlap_matrix(&bs);
        assert!((s[(0, 0)] - 1.0).abs() < 1e-5);
        let t = kinetic_matrix(&bs, MassMode::Lumped)[(0, 0)];
        assert!((t - 1.5 * alpha).abs() / (1.5 * alpha) < 0.02, "{t}");
    }

    #[test]
    fn separated_functions_do_not_overlap() {
        let g = Grid3::cubic(10.0, 64).unwrap();
        let f1 = SeparableBasisFunction::s([-6.0, 0.0, 0.0], 2.0).unwrap();
        let f2 = SeparableBasisFunction::s([6.0, 0.0, 0.0], 2.0).unwrap();
        let s = overlap_matrix(&BasisSet::new(vec![f1, f2], g).unwrap());
        assert!(s[(0, 1)].abs() < 1e-8);
        assert_eq!(s[(0, 1)], s[(1, 0)]);
    }
}
