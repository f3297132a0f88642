use nalgebra::DMatrix;

use super::canonical::CanonicalTensor3;
use super::dense::{check_size, DenseTensor3};
use crate::error::{invalid, Result};

/// Core `beta` (`r1 x r2 x r3`) contracted with side matrices `Z^(l)` (`n_l x r_l`).
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerTensor3 {
    core: DenseTensor3,
    factors: [DMatrix<f64>; 3],
}

impl TuckerTensor3 {
    pub fn new(core: DenseTensor3, factors: [DMatrix<f64>; 3]) -> Result<Self> {
        let r = core.dims();
        for l in 0..3 {
            if factors[l].ncols() != r[l] {
                return invalid(format!(
                    "mode {l}: side matrix has {} columns, core {}",
                    factors[l].ncols(),
                    r[l]
                ));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            core: DenseTensor3::zeros([0, 0, 0]).expect("empty core"),
            factors: dims.map(|n| DMatrix::zeros(n, 0)),
        }
    }

    pub fn ranks(&self) -> [usize; 3] {
        self.core.dims()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.factors.each_ref().map(|f| f.nrows())
    }

    pub fn core(&self) -> &DenseTensor3 {
        &self.core
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    pub fn factors(&self) -> &[DMatrix<f64>; 3] {
        &self.factors
    }

    /// Same core with replaced side matrices of matching column counts.
    pub fn with_factors(&self, factors: [DMatrix<f64>; 3]) -> Result<Self> {
        Self::new(self.core.clone(), factors)
    }

    /// Largest entry of `|Z^T Z - I|` over the three modes.
    pub fn orthogonality_defect(&self) -> f64 {
        self.factors
            .iter()
            .map(|z| {
                let g = z.tr_mul(z);
                let mut m = 0.0f64;
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        let e = if i == j { 1.0 } else { 0.0 };
                        m = m.max((g[(i, j)] - e).abs());
                    }
                }
                m
            })
            .fold(0.0, f64::max)
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        self.orthogonality_defect() <= tol
    }

    pub fn to_dense(&self) -> Result<DenseTensor3> {
        check_size(self.dims())?;
        if self.ranks().contains(&0) {
            return DenseTensor3::zeros(self.dims());
        }
        self.core
            .mode_product(0, &self.factors[0])?
            .mode_product(1, &self.factors[1])?
            .mode_product(2, &self.factors[2])
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let [r1, r2, r3] = self.ranks();
        let mut s = 0.0;
        for a in 0..r1 {
            for b in 0..r2 {
                let ab = self.factors[0][(i, a)] * self.factors[1][(j, b)];
                for c in 0..r3 {
                    s += self.core.get(a, b, c) * ab * self.factors[2][(k, c)];
                }
            }
        }
        s
    }

    /// Norm computed through the side-matrix Gram matrices, valid without orthonormality.
    pub fn frobenius_norm(&self) -> f64 {
        tucker_scalar_product(self, self)
            .map(|s| s.max(0.0).sqrt())
            .unwrap_or(0.0)
    }
}

fn contract_core(core: &DenseTensor3, m: [&DMatrix<f64>; 3], other: &DenseTensor3) -> f64 {
    // <core x1 m0 x2 m1 x3 m2, other>, where m_l is (other_l x core_l)
    let t = core
        .mode_product(0, m[0])
        .and_then(|t| t.mode_product(1, m[1]))
        .and_then(|t| t.mode_product(2, m[2]))
        .expect("shapes checked by caller");
    t.dot(other).expect("shapes checked by caller")
}

pub fn tucker_scalar_product(a: &TuckerTensor3, b: &TuckerTensor3) -> Result<f64> {
    if a.dims() != b.dims() {
        return invalid("Tucker extents differ");
    }
    if a.ranks().contains(&0) || b.ranks().contains(&0) {
        return Ok(0.0);
    }
    let g = [0, 1, 2].map(|l| b.factors[l].tr_mul(&a.factors[l]));
    Ok(contract_core(&a.core, [&g[0], &g[1], &g[2]], &b.core))
}

/// `<c, t>` for a canonical `c` and Tucker `t` without densifying.
pub fn canonical_tucker_product(c: &CanonicalTensor3, t: &TuckerTensor3) -> Result<f64> {
    if c.dims() != t.dims() {
        return invalid("extents differ");
    }
    if c.rank() == 0 || t.ranks().contains(&0) {
        return Ok(0.0);
    }
    let p = [0, 1, 2].map(|l| t.factors[l].tr_mul(c.factor(l)));
    let [r1, r2, r3] = t.ranks();
    let mut s = 0.0;
    for q in 0..c.rank() {
        let mut acc = 0.0;
        for a in 0..r1 {
            for b in 0..r2 {
                let ab = p[0][(a, q)] * p[1][(b, q)];
                for g in 0..r3 {
                    acc += t.core.get(a, b, g) * ab * p[2][(g, q)];
                }
            }
        }
        s += c.weights()[q] * acc;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_core_is_rank_one() {
        let core = DenseTensor3::from_vec([1, 1, 1], vec![3.0]).unwrap();
        let u = [
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[0.6, 0.8]),
        ];
        let t = TuckerTensor3::new(core, u.clone()).unwrap();
        let c =
            CanonicalTensor3::rank_one(3.0, [u[0].as_slice(), u[1].as_slice(), u[2].as_slice()]);
        assert!(t.to_dense().unwrap().max_abs_diff(&c.to_dense().unwrap()) < 1e-15);
        assert!(t.is_orthonormal(1e-15));
        assert!((t.frobenius_norm() - 3.0).abs() < 1e-15);
        assert!((canonical_tucker_product(&c, &t).unwrap() - 9.0).abs() < 1e-14);
        assert!((t.get(0, 1, 1) - 3.0 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn rank_mismatch_rejected() {
        let core = DenseTensor3::zeros([2, 1, 1]).unwrap();
        let u = [
            DMatrix::zeros(3, 1),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(3, 1),
        ];
        assert!(TuckerTensor3::new(core, u).is_err());
    }
}
