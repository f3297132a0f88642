//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

/// Minimal rank whose discarded singular values satisfy
/// `sqrt(sum_{k>=r} s_k^2) <= eps * ||s||`.
pub fn eps_rank(sigma: &[f64], eps: f64) -> usize {
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let bound = eps * eps * total;
    let mut tail = 0.0;
    let mut r = sigma.len();
    while r > 0 {
        let next = tail + sigma[r - 1] * sigma[r - 1];
        if next > bound {
            break;
        }
        tail = next;
        r -= 1;
    }
    r
}

/// Left singular vectors and singular values in descending order.
pub fn left_singular(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok((DMatrix::zeros(m.nrows(), 0), Vec::new()));
    }
    let svd = SVD::try_new(m.clone(), true, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD returned no left vectors".into()))?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u = u.select_columns(&order);
    Ok((u, order.iter().map(|&k| s[k]).collect()))
}

/// Left singular vectors of a tall `m` through a thin QR, so that cost is
/// `O(n c^2)` and the basis inherits the orthogonality of the Householder `Q`.
pub fn left_singular_tall(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if m.nrows() <= m.ncols() {
        return left_singular(m);
    }
    let qr = m.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let (u, s) = left_singular(&r)?;
    Ok((q * u, s))
}

/// Left singular vectors of `a * w` for tall `a`, without forming the product.
pub fn left_singular_product(
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if a.nrows() <= a.ncols() {
        return left_singular(&(a * w));
    }
    let qr = a.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let (u, s) = left_singular(&(r * w))?;
    Ok((q * u, s))
}

/// Symmetrizes in place and returns the largest asymmetry found.
pub fn symmetrize(m: &mut DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            worst = worst.max((a - b).abs());
            let v = 0.5 * (a + b);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_rank_rule() {
        assert_eq!(eps_rank(&[], 0.1), 0);
        assert_eq!(eps_rank(&[0.0, 0.0], 0.1), 0);
        assert_eq!(eps_rank(&[1.0, 1e-3, 1e-6], 1e-4), 2);
        assert_eq!(eps_rank(&[1.0, 1e-3, 1e-6], 1e-2), 1);
        assert_eq!(eps_rank(&[1.0, 1.0], 1e-12), 2);
    }

    #[test]
    fn tall_svd_matches_direct() {
        let m = DMatrix::from_fn(40, 5, |i, j| {
            ((i * 3 + j * 7) % 11) as f64 - 4.0 + (i as f64) * 0.01
        });
        let (u1, s1) = left_singular(&m).unwrap();
        let (u2, s2) = left_singular_tall(&m).unwrap();
        for k in 0..5 {
            assert!((s1[k] - s2[k]).abs() < 1e-12 * s1[0]);
            let d = (u1.column(k).dot(&u2.column(k))).abs();
            if s1[k] > 1e-8 * s1[0] && (k + 1 == 5 || (s1[k] - s1[k + 1]).abs() > 1e-6) {
                assert!((d - 1.0).abs() < 1e-10);
            }
        }
        let g = u2.tr_mul(&u2);
        assert!((g - DMatrix::identity(5, 5)).abs().max() < 1e-14);
    }
}
