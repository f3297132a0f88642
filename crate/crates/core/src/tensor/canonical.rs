use nalgebra::DMatrix;
use rayon::prelude::*;

use super::dense::{check_size, DenseTensor3};
use crate::conv::ConvPlan;
use crate::error::{invalid, Error, Result};

/// `sum_k c_k u_k^(1) (x) u_k^(2) (x) u_k^(3)` with side matrices of shape `n_l x R`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalTensor3 {
    weights: Vec<f64>,
    factors: [DMatrix<f64>; 3],
}

impl CanonicalTensor3 {
    pub fn new(weights: Vec<f64>, factors: [DMatrix<f64>; 3]) -> Result<Self> {
        let r = weights.len();
        if factors.iter().any(|f| f.ncols() != r) {
            return invalid(format!(
                "side matrices have {:?} columns, weights {r}",
                factors.each_ref().map(|f| f.ncols())
            ));
        }
        if factors.iter().any(|f| f.nrows() == 0) {
            return invalid("empty mode");
        }
        Ok(Self { weights, factors })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            weights: Vec::new(),
            factors: dims.map(|n| DMatrix::zeros(n, 0)),
        }
    }

    pub fn rank_one(weight: f64, u: [&[f64]; 3]) -> Self {
        Self {
            weights: vec![weight],
            factors: u.map(|v| DMatrix::from_column_slice(v.len(), 1, v)),
        }
    }

    /// Builds the tensor from per-term column vectors.
    pub fn from_terms(dims: [usize; 3], terms: &[(f64, [Vec<f64>; 3])]) -> Result<Self> {
        let r = terms.len();
        let mut factors = dims.map(|n| DMatrix::zeros(n, r));
        let mut weights = Vec::with_capacity(r);
        for (k, (w, cols)) in terms.iter().enumerate() {
            for l in 0..3 {
                if cols[l].len() != dims[l] {
                    return invalid("term column length does not match extent");
                }
                factors[l].column_mut(k).copy_from_slice(&cols[l]);
            }
            weights.push(*w);
        }
        Ok(Self { weights, factors })
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.factors.each_ref().map(|f| f.nrows())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    pub fn factors(&self) -> &[DMatrix<f64>; 3] {
        &self.factors
    }

    pub fn into_parts(self) -> (Vec<f64>, [DMatrix<f64>; 3]) {
        (self.weights, self.factors)
    }

    pub fn column(&self, mode: usize, k: usize) -> &[f64] {
        let n = self.factors[mode].nrows();
        &self.factors[mode].as_slice()[k * n..(k + 1) * n]
    }

    /// Equal columns with unit norm; norms move into the weights and
    /// zero columns zero the weight.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for k in 0..self.rank() {
            let mut w = out.weights[k];
            for l in 0..3 {
                let nrm = out.factors[l].column(k).norm();
                if nrm > 0.0 {
                    out.factors[l].column_mut(k).scale_mut(1.0 / nrm);
                }
                w *= nrm;
            }
            out.weights[k] = w;
        }
        out
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (0..self.rank())
            .all(|k| (0..3).all(|l| (self.factors[l].column(k).norm() - 1.0).abs() <= tol))
    }

    /// Drops terms whose weight or any column vanishes exactly.
    pub fn pruned(&self) -> Self {
        let keep: Vec<usize> = (0..self.rank())
            .filter(|&k| {
                self.weights[k] != 0.0
                    && (0..3).all(|l| self.factors[l].column(k).iter().any(|v| *v != 0.0))
            })
            .collect();
        self.select(&keep)
    }

    pub fn select(&self, terms: &[usize]) -> Self {
        Self {
            weights: terms.iter().map(|&k| self.weights[k]).collect(),
            factors: self.factors.each_ref().map(|f| f.select_columns(terms)),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= alpha);
        out
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let idx = [i, j, k];
        (0..self.rank())
            .map(|q| {
                self.weights[q]
                    * (0..3)
                        .map(|l| self.factors[l][(idx[l], q)])
                        .product::<f64>()
            })
            .sum()
    }

    /// Sum of all entries.
    pub fn sum_entries(&self) -> f64 {
        (0..self.rank())
            .map(|q| {
                self.weights[q]
                    * (0..3)
                        .map(|l| self.factors[l].column(q).sum())
                        .product::<f64>()
            })
            .sum()
    }

    pub fn to_dense(&self) -> Result<DenseTensor3> {
        let dims = self.dims();
        check_size(dims)?;
        let [n1, n2, n3] = dims;
        let mut out = DenseTensor3::zeros(dims)?;
        let data = out.data_mut();
        for q in 0..self.rank() {
            let (u, v, w) = (self.column(0, q), self.column(1, q), self.column(2, q));
            let c = self.weights[q];
            for i in 0..n1 {
                let a = c * u[i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n2 {
                    let b = a * v[j];
                    let row = &mut data[(i * n2 + j) * n3..(i * n2 + j + 1) * n3];
                    for (r, x) in row.iter_mut().zip(w) {
                        *r += b * x;
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return invalid(format!(
                "extents {:?} and {:?} differ",
                self.dims(),
                other.dims()
            ));
        }
        Ok(())
    }

    /// Applies `f` to every column of mode `l`.
    pub fn map_mode(&self, mode: usize, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Result<Self> {
        let cols: Vec<Vec<f64>> = (0..self.rank())
            .into_par_iter()
            .map(|k| f(self.column(mode, k)))
            .collect();
        let n = cols.first().map_or(self.factors[mode].nrows(), |c| c.len());
        let mut out = self.clone();
        out.factors[mode] = DMatrix::from_fn(n, self.rank(), |i, k| cols[k][i]);
        Ok(out)
    }
}

/// `sum_ij c_i c_j prod_l <a_i^l, b_j^l>` at `O(n R_a R_b)` cost.
pub fn scalar_product(a: &CanonicalTensor3, b: &CanonicalTensor3) -> Result<f64> {
    a.check_dims(b)?;
    if a.rank() == 0 || b.rank() == 0 {
        return Ok(0.0);
    }
    let g: Vec<DMatrix<f64>> = (0..3).map(|l| a.factors[l].tr_mul(&b.factors[l])).collect();
    let mut s = 0.0;
    for i in 0..a.rank() {
        let mut row = 0.0;
        for j in 0..b.rank() {
            row += b.weights[j] * g[0][(i, j)] * g[1][(i, j)] * g[2][(i, j)];
        }
        s += a.weights[i] * row;
    }
    Ok(s)
}

pub fn add(a: &CanonicalTensor3, b: &CanonicalTensor3) -> Result<CanonicalTensor3> {
    a.check_dims(b)?;
    let factors = [0, 1, 2].map(|l| {
        let (n, ra, rb) = (a.factors[l].nrows(), a.rank(), b.rank());
        let mut m = DMatrix::zeros(n, ra + rb);
        m.columns_mut(0, ra).copy_from(&a.factors[l]);
        m.columns_mut(ra, rb).copy_from(&b.factors[l]);
        m
    });
    let weights = a.weights.iter().chain(&b.weights).copied().collect();
    Ok(CanonicalTensor3 { weights, factors })
}

/// Entrywise product; term `i * R_b + j` pairs term `i` of `a` with term `j` of `b`.
pub fn hadamard(a: &CanonicalTensor3, b: &CanonicalTensor3) -> Result<CanonicalTensor3> {
    a.check_dims(b)?;
    let (ra, rb) = (a.rank(), b.rank());
    let factors = [0, 1, 2].map(|l| {
        DMatrix::from_fn(a.factors[l].nrows(), ra * rb, |x, k| {
            a.factors[l][(x, k / rb)] * b.factors[l][(x, k % rb)]
        })
    });
    let mut weights = Vec::with_capacity(ra * rb);
    for i in 0..ra {
        for j in 0..rb {
            weights.push(a.weights[i] * b.weights[j]);
        }
    }
    Ok(CanonicalTensor3 { weights, factors })
}

fn pairwise_convolution(
    a: &CanonicalTensor3,
    b: &CanonicalTensor3,
    plans: [ConvPlan; 3],
    h: [f64; 3],
) -> CanonicalTensor3 {
    let (ra, rb) = (a.rank(), b.rank());
    let factors = [0, 1, 2].map(|l| {
        let plan = &plans[l];
        let pa: Vec<_> = (0..ra)
            .into_par_iter()
            .map(|i| plan.prepare(a.column(l, i)))
            .collect();
        let pb: Vec<_> = (0..rb)
            .into_par_iter()
            .map(|j| plan.prepare(b.column(l, j)))
            .collect();
        let n = plan.output_len();
        let cols: Vec<Vec<f64>> = (0..ra * rb)
            .into_par_iter()
            .map(|k| {
                let mut out = vec![0.0; n];
                plan.combine(&pa[k / rb], &pb[k % rb], &mut out);
                out.iter_mut().for_each(|v| *v *= h[l]);
                out
            })
            .collect();
        DMatrix::from_fn(n, ra * rb, |x, k| cols[k][x])
    });
    let mut weights = Vec::with_capacity(ra * rb);
    for i in 0..ra {
        for j in 0..rb {
            weights.push(a.weights[i] * b.weights[j]);
        }
    }
    CanonicalTensor3 { weights, factors }
}

/// Tensor-product convolution on a common grid: per axis the central `n`
/// entries of the full 1D convolution, times `h`.
pub fn convolve(a: &CanonicalTensor3, b: &CanonicalTensor3, h: f64) -> Result<CanonicalTensor3> {
    a.check_dims(b)?;
    if !(h > 0.0) {
        return invalid("mesh size must be positive");
    }
    let dims = a.dims();
    if a.rank() == 0 || b.rank() == 0 {
        return Ok(CanonicalTensor3::zeros(dims));
    }
    let plans = dims.map(|n| ConvPlan::new(n, n, (n - 1) / 2, n));
    Ok(pairwise_convolution(a, b, plans, [h; 3]))
}

/// Convolution of `a` on an `n`-grid with a kernel sampled on the doubled
/// grid (length `2n` per axis, origin at index `n - 1`), without truncation.
pub fn convolve_with_kernel(
    a: &CanonicalTensor3,
    kernel: &CanonicalTensor3,
    h: [f64; 3],
) -> Result<CanonicalTensor3> {
    let dims = a.dims();
    if kernel.dims() != dims.map(|n| 2 * n) {
        return invalid(format!(
            "kernel extents {:?} are not twice {:?}",
            kernel.dims(),
            dims
        ));
    }
    if a.rank() == 0 || kernel.rank() == 0 {
        return Ok(CanonicalTensor3::zeros(dims));
    }
    let plans = dims.map(|n| ConvPlan::new(n, 2 * n, n - 1, n));
    Ok(pairwise_convolution(a, kernel, plans, h))
}

pub fn frobenius_norm(t: &CanonicalTensor3) -> f64 {
    scalar_product(t, t)
        .map(|s| s.max(0.0).sqrt())
        .unwrap_or(0.0)
}

/// `||a - b|| / ||b||` from scalar products.
pub fn relative_error(a: &CanonicalTensor3, b: &CanonicalTensor3) -> Result<f64> {
    let bb = scalar_product(b, b)?;
    if !(bb > 0.0) {
        return Err(Error::DivisionGuard(
            "reference tensor has zero norm".into(),
        ));
    }
    let aa = scalar_product(a, a)?;
    let ab = scalar_product(a, b)?;
    let d = if a == b {
        0.0
    } else {
        (aa - 2.0 * ab + bb).max(0.0)
    };
    Ok((d / bb).sqrt())
}
