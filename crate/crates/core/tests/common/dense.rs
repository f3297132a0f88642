//! Brute-force 6D two-electron integrals with the exact cell-averaged kernel.

use gridtensor::hf::BasisSet;
use gridtensor::kernel::cube_average_inverse_r;
use rayon::prelude::*;

/// `(mu nu | kappa lambda)` as `h^3 sum_x sum_y rho_{mu nu}(x) rho_{kappa lambda}(y) P(x - y)`
/// with `P` the exact cell integral of `1/r`; indexed `[(mu nu) * N_b^2 + (kappa lambda)]`.
pub fn dense_tei(bs: &BasisSet) -> Vec<f64> {
    let grid = bs.grid();
    let n = grid.axes[0].n;
    assert!(grid.extents() == [n; 3]);
    let h = grid.h();
    let m = 2 * n - 1;
    let kernel: Vec<f64> = (0..m * m * m)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (m * m), (idx / m) % m, idx % m);
            let d = [i, j, k].map(|v| (v as f64 - (n as f64 - 1.0)) * h);
            h * h * h * cube_average_inverse_r(d, h)
        })
        .collect();
    let nb = bs.len();
    let dense: Vec<Vec<f64>> = bs
        .tensors()
        .iter()
        .map(|t| t.to_dense().unwrap().data().to_vec())
        .collect();
    let rho = |mu: usize, nu: usize| -> Vec<f64> {
        dense[mu]
            .iter()
            .zip(&dense[nu])
            .map(|(a, b)| a * b)
            .collect()
    };
    let mut pots = Vec::new();
    for mu in 0..nb {
        for nu in 0..nb {
            if nu < mu {
                pots.push(None);
                continue;
            }
            let r = rho(mu, nu);
            let v: Vec<f64> = (0..n * n * n)
                .into_par_iter()
                .map(|x| {
                    let (xi, xj, xk) = (x / (n * n), (x / n) % n, x % n);
                    let mut s = 0.0;
                    for yi in 0..n {
                        for yj in 0..n {
                            let base = ((xi + n - 1 - yi) * m + (xj + n - 1 - yj)) * m + xk + n - 1;
                            let row = &r[(yi * n + yj) * n..(yi * n + yj + 1) * n];
                            for (yk, ry) in row.iter().enumerate() {
                                s += ry * kernel[base - yk];
                            }
                        }
                    }
                    s
                })
                .collect();
            pots.push(Some(v));
        }
    }
    let pot = |mu: usize, nu: usize| pots[mu.min(nu) * nb + mu.max(nu)].as_ref().unwrap();
    let vol = h * h * h;
    let mut out = vec![0.0; nb.pow(4)];
    for mu in 0..nb {
        for nu in 0..nb {
            let r = rho(mu, nu);
            for ka in 0..nb {
                for la in 0..nb {
                    let v = pot(ka, la);
                    out[(mu * nb + nu) * nb * nb + ka * nb + la] =
                        vol * r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }
    out
}
