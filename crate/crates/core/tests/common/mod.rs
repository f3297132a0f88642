//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod analytic;
pub mod dense;

use gridtensor::grid::Grid3;
use gridtensor::hf::{BasisSet, Molecule, Nucleus, SeparableBasisFunction, TeiCholesky};
use gridtensor::mp2::MoSpace;
use nalgebra::DMatrix;

/// Half-width that puts `z = +-0.7` on grid nodes for `n = 128` (and `n = 257`).
pub const H2_BOX: f64 = 129.0 * 0.7 / 15.0;
pub const H2_EXPONENT: f64 = 0.4;
/// Molecular axis offset in x and y: a node for both `n = 128` and `n = 257`.
pub const H2_AXIS: f64 = 0.7 / 15.0;

pub fn h2_molecule() -> Molecule {
    Molecule::new(
        vec![
            Nucleus {
                z: 1.0,
                center: [H2_AXIS, H2_AXIS, -0.7],
            },
            Nucleus {
                z: 1.0,
                center: [H2_AXIS, H2_AXIS, 0.7],
            },
        ],
        1,
    )
    .unwrap()
}

pub fn h2_basis(n: usize) -> BasisSet {
    let g = Grid3::cubic(H2_BOX, n).unwrap();
    let f = |z: f64| SeparableBasisFunction::s([H2_AXIS, H2_AXIS, z], H2_EXPONENT).unwrap();
    BasisSet::new(vec![f(-0.7), f(0.7)], g).unwrap()
}

pub fn h2_analytic() -> analytic::System {
    analytic::System::new(
        vec![
            analytic::SGaussian::new([H2_AXIS, H2_AXIS, -0.7], &[H2_EXPONENT], &[1.0]),
            analytic::SGaussian::new([H2_AXIS, H2_AXIS, 0.7], &[H2_EXPONENT], &[1.0]),
        ],
        vec![
            (1.0, [H2_AXIS, H2_AXIS, -0.7]),
            (1.0, [H2_AXIS, H2_AXIS, 0.7]),
        ],
    )
}

/// Deterministic uniform numbers in `[-1, 1)`.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Random symmetric slices `L_s` (so `B` keeps its pair symmetry) and sorted energies.
pub fn synthetic(seed: u64, nb: usize, n_occ: usize, rank: usize) -> (TeiCholesky, MoSpace) {
    let mut rng = Lcg(seed);
    let mut l = DMatrix::zeros(nb * nb, rank);
    for s in 0..rank {
        for m in 0..nb {
            for n in m..nb {
                let v = rng.next() / (1.0 + s as f64);
                l[(m * nb + n, s)] = v;
                l[(n * nb + m, s)] = v;
            }
        }
    }
    let mut occ: Vec<f64> = (0..n_occ).map(|_| -1.0 + 0.4 * rng.next()).collect();
    let mut vir: Vec<f64> = (0..nb - n_occ).map(|_| 0.8 + 0.6 * rng.next()).collect();
    occ.sort_by(f64::total_cmp);
    vir.sort_by(f64::total_cmp);
    occ.extend(vir);
    let q = DMatrix::from_fn(nb, nb, |_, _| rng.next()).qr().q();
    let chol = TeiCholesky {
        l,
        nb,
        eps: 0.0,
        pivots: Vec::new(),
    };
    (chol, MoSpace::new(occ, n_occ, q).unwrap())
}

pub fn quad_v(chol: &TeiCholesky, c: &DMatrix<f64>, i: usize, a: usize, j: usize, b: usize) -> f64 {
    let nb = chol.nb;
    let bm = &chol.l * chol.l.transpose();
    let mut s = 0.0;
    for m in 0..nb {
        for n in 0..nb {
            for k in 0..nb {
                for l in 0..nb {
                    s += c[(m, i)]
                        * c[(n, a)]
                        * c[(k, j)]
                        * c[(l, b)]
                        * bm[(m * nb + n, k * nb + l)];
                }
            }
        }
    }
    s
}

/// `J(D)` and `K(D) = -1/2 (mk|ln) D_kl` by explicit loops over a row-major `(mn|kl)` array.
pub fn quad_jk(b: &[f64], d: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = d.nrows();
    let at = |i: usize, j: usize, k: usize, l: usize| b[(i * n + j) * n * n + k * n + l];
    let mut j = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    for m in 0..n {
        for nu in 0..n {
            for ka in 0..n {
                for la in 0..n {
                    j[(m, nu)] += d[(ka, la)] * at(m, nu, ka, la);
                    k[(m, nu)] -= 0.5 * d[(ka, la)] * at(m, ka, la, nu);
                }
            }
        }
    }
    (j, k)
}
