//! Quantics folding of length-`2^L` vectors and their tensor-train images.
//!
//! Binary digit `nu` of the index (least significant first) is mode `nu`.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::linalg::left_singular;

/// A length-`2^L` vector viewed as an `L`-dimensional `2 x ... x 2` array.
#[derive(Clone, Debug, PartialEq)]
pub struct QuanticsTensor {
    levels: usize,
    data: Vec<f64>,
}

fn levels_of(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return invalid(format!("length {len} is not a power of two"));
    }
    Ok(len.trailing_zeros() as usize)
}

pub fn fold(x: &[f64]) -> Result<QuanticsTensor> {
    Ok(QuanticsTensor {
        levels: levels_of(x.len())?,
        data: x.to_vec(),
    })
}

impl QuanticsTensor {
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Entry at digits `(j_1, ..., j_L)`, each 0 or 1.
    pub fn entry(&self, digits: &[usize]) -> Result<f64> {
        if digits.len() != self.levels || digits.iter().any(|&d| d > 1) {
            return invalid("digit multi-index has wrong length or a digit above 1");
        }
        let i = digits
            .iter()
            .enumerate()
            .map(|(nu, d)| d << nu)
            .sum::<usize>();
        Ok(self.data[i])
    }

    pub fn unfold(&self) -> Vec<f64> {
        self.data.clone()
    }
}

/// Digits of `i`, least significant first.
pub fn digits(i: usize, levels: usize) -> Vec<usize> {
    (0..levels).map(|nu| (i >> nu) & 1).collect()
}

/// One TT core of shape `r_left x 2 x r_right`.
#[derive(Clone, Debug, PartialEq)]
pub struct TtCore {
    pub r_left: usize,
    pub r_right: usize,
    /// Entry `(a, j, b)` at `(j * r_left + a) * r_right + b`.
    data: Vec<f64>,
}

impl TtCore {
    #[inline]
    pub fn get(&self, a: usize, j: usize, b: usize) -> f64 {
        self.data[(j * self.r_left + a) * self.r_right + b]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuanticsImage {
    pub cores: Vec<TtCore>,
}

impl QuanticsImage {
    pub fn levels(&self) -> usize {
        self.cores.len()
    }

    /// Interior ranks `(r_1, ..., r_{L-1})`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores
            .iter()
            .take(self.cores.len().saturating_sub(1))
            .map(|c| c.r_right)
            .collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        (0..1usize << self.levels())
            .map(|i| self.eval_unchecked(i))
            .collect()
    }

    fn eval_unchecked(&self, i: usize) -> f64 {
        let mut v = vec![1.0];
        for (nu, c) in self.cores.iter().enumerate() {
            let j = (i >> nu) & 1;
            let mut w = vec![0.0; c.r_right];
            for (a, va) in v.iter().enumerate() {
                if *va == 0.0 {
                    continue;
                }
                for (b, wb) in w.iter_mut().enumerate() {
                    *wb += va * c.get(a, j, b);
                }
            }
            v = w;
        }
        v[0]
    }
}

/// Sequential-SVD TT decomposition with per-step truncation
/// `eps / sqrt(L-1) * ||x||`, so that the total error is at most `eps ||x||`.
pub fn tt_decompose(x: &[f64], eps: f64) -> Result<QuanticsImage> {
    let levels = levels_of(x.len())?;
    if !(eps > 0.0) {
        return invalid("tolerance must be positive");
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = if levels > 1 {
        eps / ((levels - 1) as f64).sqrt() * norm
    } else {
        0.0
    };
    let mut cores = Vec::with_capacity(levels);
    let mut r_left = 1;
    let mut rest = DMatrix::from_column_slice(1, x.len(), x);
    for nu in 0..levels {
        let cols = rest.ncols() / 2;
        // column-major reshape r x (2 * cols) -> (2 r) x cols
        let m = DMatrix::from_column_slice(2 * r_left, cols, rest.as_slice());
        if nu == levels - 1 {
            let mut data = vec![0.0; r_left * 2];
            for a in 0..r_left {
                for j in 0..2 {
                    data[j * r_left + a] = m[(a + r_left * j, 0)];
                }
            }
            cores.push(TtCore {
                r_left,
                r_right: 1,
                data,
            });
            break;
        }
        let (u, s) = left_singular(&m)?;
        let mut r = s.len();
        let mut tail = 0.0;
        while r > 1 {
            let next = tail + s[r - 1] * s[r - 1];
            if next.sqrt() > delta {
                break;
            }
            tail = next;
            r -= 1;
        }
        let u = u.columns(0, r).into_owned();
        let mut data = vec![0.0; r_left * 2 * r];
        for a in 0..r_left {
            for j in 0..2 {
                for b in 0..r {
                    data[(j * r_left + a) * r + b] = u[(a + r_left * j, b)];
                }
            }
        }
        cores.push(TtCore {
            r_left,
            r_right: r,
            data,
        });
        rest = u.tr_mul(&m);
        r_left = r;
    }
    Ok(QuanticsImage { cores })
}

/// Number of stored core entries, `sum_nu r_{nu-1} 2 r_nu`.
pub fn tt_storage(img: &QuanticsImage) -> usize {
    img.cores.iter().map(|c| c.r_left * 2 * c.r_right).sum()
}

pub fn tt_eval(img: &QuanticsImage, i: usize) -> Result<f64> {
    if i >> img.levels() != 0 {
        return invalid(format!(
            "index {i} out of range for {} levels",
            img.levels()
        ));
    }
    Ok(img.eval_unchecked(i))
}
