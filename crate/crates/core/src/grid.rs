//! Uniform cell-centered grids on symmetric boxes and the window transform
//! that places doubled-grid reference vectors at node-aligned centers.

use crate::error::{invalid, Error, Result};

/// One axis of a box `[-half_width, half_width]` split into `n + 1` equal
/// intervals; the `n` interior nodes are the sampling points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub half_width: f64,
    pub n: usize,
    pub h: f64,
}

impl Axis {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return invalid(format!("half width must be positive, got {half_width}"));
        }
        if n < 2 {
            return invalid(format!("need at least 2 grid points per axis, got {n}"));
        }
        Ok(Self {
            half_width,
            n,
            h: 2.0 * half_width / (n as f64 + 1.0),
        })
    }

    /// Axis with prescribed spacing; the half width follows from `h` and `n`.
    pub fn with_spacing(h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return invalid(format!("mesh size must be positive, got {h}"));
        }
        Self::new(0.5 * h * (n as f64 + 1.0), n)
    }

    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        // centered form keeps the node set exactly symmetric about 0
        (i as f64 - 0.5 * (self.n as f64 - 1.0)) * self.h
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(i)).collect()
    }

    /// Index of the node nearest to `x` and its distance from `x`.
    pub fn nearest(&self, x: f64) -> Result<(usize, f64)> {
        if !x.is_finite() || x.abs() > self.half_width {
            return Err(Error::OutOfDomain(format!(
                "coordinate {x} outside [-{b}, {b}]",
                b = self.half_width
            )));
        }
        let t = x / self.h + 0.5 * (self.n as f64 - 1.0);
        let i = t.round().clamp(0.0, (self.n - 1) as f64) as usize;
        Ok((i, (x - self.coordinate(i)).abs()))
    }

    /// Displacement of entry `j` of a doubled (length `2n`) reference vector.
    #[inline]
    pub fn doubled_displacement(&self, j: usize) -> f64 {
        (j as f64 - (self.n as f64 - 1.0)) * self.h
    }
}

/// Cartesian product of three axes sharing no constraint except positivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3 {
    pub axes: [Axis; 3],
}

/// Cubic grid on `[-b_half, b_half]^3` with `n` nodes per axis.
pub fn make_grid(b_half: f64, n: usize) -> Result<Grid3> {
    let a = Axis::new(b_half, n)?;
    Ok(Grid3 { axes: [a; 3] })
}

impl Grid3 {
    pub fn cubic(b_half: f64, n: usize) -> Result<Self> {
        make_grid(b_half, n)
    }

    pub fn from_axes(axes: [Axis; 3]) -> Self {
        Self { axes }
    }

    /// Grid with a common mesh size and per-axis node counts.
    pub fn with_spacing(h: f64, n: [usize; 3]) -> Result<Self> {
        Ok(Self {
            axes: [
                Axis::with_spacing(h, n[0])?,
                Axis::with_spacing(h, n[1])?,
                Axis::with_spacing(h, n[2])?,
            ],
        })
    }

    pub fn extents(&self) -> [usize; 3] {
        [self.axes[0].n, self.axes[1].n, self.axes[2].n]
    }

    /// Mesh size of the first axis; grids built here share one `h` unless
    /// assembled from unrelated axes.
    pub fn h(&self) -> f64 {
        self.axes[0].h
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.h).product()
    }

    pub fn is_uniform_spacing(&self) -> bool {
        let h = self.axes[0].h;
        self.axes.iter().all(|a| ((a.h - h) / h).abs() < 1e-14)
    }

    pub fn point(&self, idx: [usize; 3]) -> [f64; 3] {
        [
            self.axes[0].coordinate(idx[0]),
            self.axes[1].coordinate(idx[1]),
            self.axes[2].coordinate(idx[2]),
        ]
    }

    /// Node indices of `p`, failing if any axis is farther than `tol` from a node.
    pub fn snap(&self, p: [f64; 3], tol: f64) -> Result<[usize; 3]> {
        let mut out = [0usize; 3];
        for (l, ax) in self.axes.iter().enumerate() {
            let (i, d) = ax.nearest(p[l])?;
            if d > tol * (1.0 + 1e-12) {
                return Err(Error::SnapFailure {
                    axis: l,
                    coordinate: p[l],
                    distance: d,
                    tolerance: tol,
                });
            }
            out[l] = i;
        }
        Ok(out)
    }
}

/// Per-axis slice `[offset, offset + len)` of a doubled reference vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowMap {
    pub offsets: [usize; 3],
    pub lens: [usize; 3],
}

/// Window placing the doubled-grid reference at the node nearest `center`.
pub fn window_for_center(grid: &Grid3, center: [f64; 3]) -> Result<WindowMap> {
    let tol = grid
        .axes
        .iter()
        .map(|a| 0.5 * a.h)
        .fold(f64::INFINITY, f64::min);
    window_for_center_tol(grid, center, tol)
}

/// As [`window_for_center`] with an explicit snap tolerance.
pub fn window_for_center_tol(grid: &Grid3, center: [f64; 3], tol: f64) -> Result<WindowMap> {
    let idx = grid.snap(center, tol)?;
    Ok(WindowMap::for_node(grid, idx))
}

impl WindowMap {
    pub fn for_node(grid: &Grid3, idx: [usize; 3]) -> Self {
        let lens = grid.extents();
        let offsets = [0, 1, 2].map(|l| lens[l] - 1 - idx[l]);
        Self { offsets, lens }
    }

    /// Slice of a length-`2n` reference vector along `axis`.
    pub fn apply<'a>(&self, axis: usize, reference: &'a [f64]) -> &'a [f64] {
        assert_eq!(
            reference.len(),
            2 * self.lens[axis],
            "reference must live on the doubled grid"
        );
        &reference[self.offsets[axis]..self.offsets[axis] + self.lens[axis]]
    }

    /// Window translated by `m` nodes per axis, if it stays readable.
    pub fn shifted(&self, m: [isize; 3]) -> Option<Self> {
        let mut out = *self;
        for l in 0..3 {
            let o = self.offsets[l] as isize - m[l];
            if o < 0 || o as usize + self.lens[l] > 2 * self.lens[l] {
                return None;
            }
            out.offsets[l] = o as usize;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_examples() {
        assert!(make_grid(20.0, 1).is_err());
        assert!(make_grid(-1.0, 4).is_err());
        let g = make_grid(20.0, 3).unwrap();
        assert_eq!(g.h(), 10.0);
        assert_eq!(g.axes[0].coordinates(), vec![-10.0, 0.0, 10.0]);
        let g = make_grid(20.0, 1023).unwrap();
        assert_eq!(g.h(), 0.0390625);
    }

    #[test]
    fn centers_symmetric_and_round_trip() {
        for n in [2, 5, 64, 255] {
            let a = Axis::new(7.3, n).unwrap();
            for i in 0..n {
                assert_eq!(a.coordinate(i), -a.coordinate(n - 1 - i));
                assert_eq!(a.nearest(a.coordinate(i)).unwrap(), (i, 0.0));
            }
        }
    }

    #[test]
    fn central_and_shifted_windows() {
        let g = make_grid(20.0, 255).unwrap();
        let w = window_for_center(&g, [0.0; 3]).unwrap();
        assert_eq!(w.offsets, [127; 3]);
        let m = 5;
        let w = window_for_center(&g, [m as f64 * g.h(), 0.0, 0.0]).unwrap();
        assert_eq!(w.offsets, [127 - m, 127, 127]);
    }

    #[test]
    fn snap_and_domain_errors() {
        let g = make_grid(4.0, 7).unwrap();
        assert!(matches!(
            window_for_center(&g, [5.0, 0.0, 0.0]),
            Err(Error::OutOfDomain(_))
        ));
        let h = g.h();
        assert!(matches!(
            window_for_center_tol(&g, [0.3 * h, 0.0, 0.0], 0.1 * h),
            Err(Error::SnapFailure { axis: 0, .. })
        ));
        assert!(window_for_center(&g, [0.3 * h, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn window_reads_translated_reference() {
        let g = make_grid(3.0, 9).unwrap();
        let ax = g.axes[0];
        let reference: Vec<f64> = (0..18).map(|j| ax.doubled_displacement(j)).collect();
        let c = 2;
        let w = WindowMap::for_node(&g, [c, 4, 4]);
        let s = w.apply(0, &reference);
        for (i, v) in s.iter().enumerate() {
            assert!((v - (ax.coordinate(i) - ax.coordinate(c))).abs() < 1e-14);
        }
    }

    #[test]
    fn shift_composition() {
        let g = make_grid(3.0, 9).unwrap();
        let w = WindowMap::for_node(&g, [4, 4, 4]);
        let a = w.shifted([1, -2, 0]).unwrap().shifted([2, 1, 3]).unwrap();
        assert_eq!(a, w.shifted([3, -1, 3]).unwrap());
        assert!(w.shifted([9, 0, 0]).is_none());
    }
}
