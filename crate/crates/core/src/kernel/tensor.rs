use nalgebra::DMatrix;
use rayon::prelude::*;

use super::cell::cell_integral;
use super::expsum::{ExpSum, KernelKind};
use crate::error::Result;
use crate::grid::Grid3;
use crate::tensor::CanonicalTensor3;

/// Galerkin projection of a radial kernel onto piecewise-constant cells.
///
/// Entries approximate `int_cell f(|x|) dx`; on the doubled grid the origin
/// sits at index `n - 1` of every axis.
#[derive(Clone, Debug)]
pub struct KernelTensor {
    pub tensor: CanonicalTensor3,
    pub kind: KernelKind,
    pub doubled: bool,
    pub grid: Grid3,
    pub expsum: ExpSum,
}

/// Projects the Gaussian sum `es` onto `grid` (or its doubled extension).
pub fn newton_kernel_tensor(grid: &Grid3, es: &ExpSum, doubled: bool) -> Result<KernelTensor> {
    let positions: [Vec<f64>; 3] = [0, 1, 2].map(|l| {
        let ax = grid.axes[l];
        if doubled {
            (0..2 * ax.n).map(|j| ax.doubled_displacement(j)).collect()
        } else {
            ax.coordinates()
        }
    });
    let nodes = es.nodes();
    let r = nodes.len();
    let factors = [0, 1, 2].map(|l| {
        let h = grid.axes[l].h;
        let cols: Vec<Vec<f64>> = nodes
            .par_iter()
            .map(|&t| {
                positions[l]
                    .iter()
                    .map(|&x| cell_integral(t, x - 0.5 * h, x + 0.5 * h))
                    .collect()
            })
            .collect();
        DMatrix::from_fn(positions[l].len(), r, |i, k| cols[k][i])
    });
    let tensor = CanonicalTensor3::new(es.weights().to_vec(), factors)?.normalized();
    Ok(KernelTensor {
        tensor,
        kind: es.kind,
        doubled,
        grid: *grid,
        expsum: es.clone(),
    })
}

impl KernelTensor {
    /// Kernel for `grid` accurate to `eps` on all cell displacements it can see.
    pub fn for_grid(grid: &Grid3, kind: KernelKind, eps: f64, doubled: bool) -> Result<Self> {
        let h = grid.axes.iter().map(|a| a.h).fold(f64::INFINITY, f64::min);
        let reach = grid
            .axes
            .iter()
            .map(|a| {
                let span = if doubled {
                    a.n as f64 * a.h
                } else {
                    (a.n - 1) as f64 * a.h
                };
                span * span
            })
            .sum::<f64>()
            .sqrt();
        // the origin cell integral needs Gaussian widths down to about h sqrt(eps)
        let lo = 0.5 * h * eps.sqrt().min(1.0);
        let es = ExpSum::for_accuracy(kind, lo, reach.max(h), eps)?;
        newton_kernel_tensor(grid, &es, doubled)
    }

    pub fn rank(&self) -> usize {
        self.tensor.rank()
    }

    /// Index of the zero displacement per axis, if the grid has one.
    pub fn origin(&self) -> Option<[usize; 3]> {
        if self.doubled {
            Some(self.grid.axes.map(|a| a.n - 1))
        } else if self.grid.axes.iter().all(|a| a.n % 2 == 1) {
            Some(self.grid.axes.map(|a| a.n / 2))
        } else {
            None
        }
    }

    /// `h^{-3}` times the tensor entry, i.e. the cell-averaged kernel.
    pub fn cell_average(&self, idx: [usize; 3]) -> f64 {
        self.tensor.get(idx[0], idx[1], idx[2]) / self.grid.cell_volume()
    }

    /// Physical displacement represented by a tensor index.
    pub fn displacement(&self, idx: [usize; 3]) -> [f64; 3] {
        [0, 1, 2].map(|l| {
            let a = self.grid.axes[l];
            if self.doubled {
                a.doubled_displacement(idx[l])
            } else {
                a.coordinate(idx[l])
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn symmetric_identical_factors() {
        let g = make_grid(5.0, 15).unwrap();
        let es = ExpSum::calibrated(KernelKind::Newton, 10, 0.3, 20.0).unwrap();
        let k = newton_kernel_tensor(&g, &es, false).unwrap();
        assert_eq!(k.rank(), 21);
        assert_eq!(k.tensor.factor(0), k.tensor.factor(1));
        assert_eq!(k.tensor.factor(1), k.tensor.factor(2));
        for q in 0..k.rank() {
            let c = k.tensor.column(0, q);
            for i in 0..15 {
                assert!((c[i] - c[14 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn off_origin_values() {
        let g = make_grid(10.0, 63).unwrap();
        let k = KernelTensor::for_grid(&g, KernelKind::Newton, 1e-9, true).unwrap();
        let o = k.origin().unwrap();
        let probe = [o[0] + 10, o[1] + 3, o[2]];
        let d = k.displacement(probe);
        let exact = super::super::cell::cube_average_inverse_r(d, g.h());
        assert!((k.cell_average(probe) / exact - 1.0).abs() < 1e-8);
    }
}
