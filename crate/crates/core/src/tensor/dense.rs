use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Largest entry count a dense tensor may hold.
pub const DENSE_LIMIT: usize = 1 << 27;

/// Row-major `n1 x n2 x n3` array; the last index runs fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

pub(crate) fn check_size(dims: [usize; 3]) -> Result<usize> {
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .unwrap_or(usize::MAX);
    if total > DENSE_LIMIT {
        return Err(Error::SizeGuard {
            requested: total,
            limit: DENSE_LIMIT,
        });
    }
    Ok(total)
}

impl DenseTensor3 {
    pub fn zeros(dims: [usize; 3]) -> Result<Self> {
        let total = check_size(dims)?;
        Ok(Self {
            dims,
            data: vec![0.0; total],
        })
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let total = check_size(dims)?;
        if data.len() != total {
            return invalid(format!("expected {total} entries, got {}", data.len()));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(
        dims: [usize; 3],
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let [_, n2, n3] = dims;
        for (k, v) in t.data.iter_mut().enumerate() {
            *v = f(k / (n2 * n3), (k / n3) % n2, k % n3);
        }
        Ok(t)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return invalid("dense extents differ");
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    /// Mode-`l` unfolding: rows are indexed by mode `l`.
    pub fn unfold(&self, mode: usize) -> DMatrix<f64> {
        let [n1, n2, n3] = self.dims;
        match mode {
            0 => DMatrix::from_fn(n1, n2 * n3, |i, c| self.get(i, c / n3, c % n3)),
            1 => DMatrix::from_fn(n2, n1 * n3, |j, c| self.get(c / n3, j, c % n3)),
            2 => DMatrix::from_fn(n3, n1 * n2, |k, c| self.get(c / n2, c % n2, k)),
            _ => panic!("mode must be 0, 1 or 2"),
        }
    }

    /// Multiplies mode `l` by `m` (`r x n_l`), giving an `r`-sized mode.
    pub fn mode_product(&self, mode: usize, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dims[mode] {
            return invalid("mode product dimension mismatch");
        }
        let mut dims = self.dims;
        dims[mode] = m.nrows();
        let mut out = Self::zeros(dims)?;
        let [n1, n2, n3] = self.dims;
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let v = self.get(i, j, k);
                    if v == 0.0 {
                        continue;
                    }
                    let src = [i, j, k][mode];
                    for r in 0..m.nrows() {
                        let mut idx = [i, j, k];
                        idx[mode] = r;
                        let o = out.offset(idx[0], idx[1], idx[2]);
                        out.data[o] += m[(r, src)] * v;
                    }
                }
            }
        }
        Ok(out)
    }
}
