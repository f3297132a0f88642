//! Separable Cartesian Gaussian basis functions and their grid images.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid3;
use crate::tensor::CanonicalTensor3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellKind {
    S,
    P,
}

impl ShellKind {
    /// Cartesian power triples of the functions in the shell.
    pub fn powers(self) -> Vec<[u8; 3]> {
        match self {
            ShellKind::S => vec![[0, 0, 0]],
            ShellKind::P => vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        }
    }
}

/// `sum_p c_p prod_l (x_l - A_l)^{k_l} exp(-alpha_p (x_l - A_l)^2)`.
///
/// Coefficients are stored with primitive and contraction normalisation
/// folded in, so the function has unit `L2` norm.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableBasisFunction {
    pub center: [f64; 3],
    pub powers: [u8; 3],
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
}

/// `int x^{2k} exp(-a x^2) dx` for `k <= 1`.
fn gaussian_moment(k: u8, a: f64) -> f64 {
    let base = (PI / a).sqrt();
    match k {
        0 => base,
        _ => base / (2.0 * a),
    }
}

impl SeparableBasisFunction {
    /// Normalised contraction; `raw` coefficients multiply normalised primitives.
    pub fn new(
        center: [f64; 3],
        powers: [u8; 3],
        exponents: Vec<f64>,
        raw: Vec<f64>,
    ) -> Result<Self> {
        if exponents.is_empty() || exponents.len() != raw.len() {
            return invalid(
                "a contraction needs matching non-empty exponent and coefficient lists",
            );
        }
        if exponents.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return invalid("Gaussian exponents must be positive");
        }
        if powers.iter().any(|&k| k > 1) {
            return invalid("only s- and p-type functions are supported");
        }
        if center.iter().any(|c| !c.is_finite()) {
            return invalid("basis center must be finite");
        }
        let prim_norm = |a: f64| -> f64 {
            let self_overlap: f64 = powers
                .iter()
                .map(|&k| gaussian_moment(k, 2.0 * a))
                .product();
            1.0 / self_overlap.sqrt()
        };
        let mut coefficients: Vec<f64> = exponents
            .iter()
            .zip(&raw)
            .map(|(&a, &c)| c * prim_norm(a))
            .collect();
        let mut norm2 = 0.0;
        for (p, &ap) in exponents.iter().enumerate() {
            for (q, &aq) in exponents.iter().enumerate() {
                let s: f64 = powers
                    .iter()
                    .map(|&k| gaussian_moment(k, ap + aq))
                    .product();
                norm2 += coefficients[p] * coefficients[q] * s;
            }
        }
        if !(norm2 > 0.0) {
            return invalid("contraction has zero norm");
        }
        let scale = 1.0 / norm2.sqrt();
        coefficients.iter_mut().for_each(|c| *c *= scale);
        Ok(Self {
            center,
            powers,
            exponents,
            coefficients,
        })
    }

    pub fn s(center: [f64; 3], exponent: f64) -> Result<Self> {
        Self::new(center, [0; 3], vec![exponent], vec![1.0])
    }

    pub fn primitive_count(&self) -> usize {
        self.exponents.len()
    }

    /// Unnormalised 1D factor of primitive `p` on axis `l`.
    pub fn factor_value(&self, p: usize, l: usize, x: f64) -> f64 {
        let d = x - self.center[l];
        let g = (-self.exponents[p] * d * d).exp();
        if self.powers[l] == 1 {
            d * g
        } else {
            g
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        (0..self.primitive_count())
            .map(|p| {
                self.coefficients[p]
                    * (0..3)
                        .map(|l| self.factor_value(p, l, x[l]))
                        .product::<f64>()
            })
            .sum()
    }
}

/// One element's shells as read from a basis file.
#[derive(Clone, Debug, PartialEq)]
pub struct Shell {
    pub kind: ShellKind,
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
}

/// Basis functions bound to a grid, with their sampled side matrices.
#[derive(Clone, Debug)]
pub struct BasisSet {
    functions: Vec<SeparableBasisFunction>,
    grid: Grid3,
    tensors: Vec<CanonicalTensor3>,
}

impl BasisSet {
    pub fn new(functions: Vec<SeparableBasisFunction>, grid: Grid3) -> Result<Self> {
        if functions.is_empty() {
            return invalid("basis set is empty");
        }
        for f in &functions {
            for l in 0..3 {
                let b = grid.axes[l].half_width;
                if f.center[l].abs() > b {
                    return Err(Error::OutOfDomain(format!(
                        "basis center {:?} lies outside the box [-{b}, {b}] on axis {l}",
                        f.center
                    )));
                }
            }
        }
        let tensors = functions
            .iter()
            .map(|f| discretize(f, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            functions,
            grid,
            tensors,
        })
    }

    /// Expands shells placed on atom centers into Cartesian functions.
    pub fn from_shells(placed: &[([f64; 3], Vec<Shell>)], grid: Grid3) -> Result<Self> {
        let mut functions = Vec::new();
        for (center, shells) in placed {
            for sh in shells {
                for pw in sh.kind.powers() {
                    functions.push(SeparableBasisFunction::new(
                        *center,
                        pw,
                        sh.exponents.clone(),
                        sh.coefficients.clone(),
                    )?);
                }
            }
        }
        Self::new(functions, grid)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[SeparableBasisFunction] {
        &self.functions
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    /// Grid image `G_mu`, rank equal to the primitive count.
    pub fn tensor(&self, mu: usize) -> &CanonicalTensor3 {
        &self.tensors[mu]
    }

    pub fn tensors(&self) -> &[CanonicalTensor3] {
        &self.tensors
    }

    /// `(function, primitive)` for every primitive, in storage order.
    pub fn primitives(&self) -> Vec<(usize, usize)> {
        self.functions
            .iter()
            .enumerate()
            .flat_map(|(mu, f)| (0..f.primitive_count()).map(move |p| (mu, p)))
            .collect()
    }

    /// Concatenated side matrix on axis `l`, one column per primitive.
    pub fn side_matrix(&self, l: usize) -> DMatrix<f64> {
        let prims = self.primitives();
        let n = self.grid.axes[l].n;
        DMatrix::from_fn(n, prims.len(), |i, c| {
            let (mu, p) = prims[c];
            self.tensors[mu].factor(l)[(i, p)]
        })
    }
}

/// Samples each primitive's per-axis factor at the grid nodes.
pub fn discretize(f: &SeparableBasisFunction, grid: &Grid3) -> Result<CanonicalTensor3> {
    let factors = [0, 1, 2].map(|l| {
        let xs = grid.axes[l].coordinates();
        DMatrix::from_fn(xs.len(), f.primitive_count(), |i, p| {
            f.factor_value(p, l, xs[i])
        })
    });
    CanonicalTensor3::new(f.coefficients.clone(), factors)
}

pub fn discretize_basis(bs: &BasisSet) -> Vec<CanonicalTensor3> {
    bs.tensors.clone()
}

/// Nucleus with charge `z` at `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nucleus {
    pub z: f64,
    pub center: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Molecule {
    pub nuclei: Vec<Nucleus>,
    pub n_orb: usize,
}

impl Molecule {
    pub fn new(nuclei: Vec<Nucleus>, n_orb: usize) -> Result<Self> {
        if nuclei.is_empty() {
            return invalid("molecule has no nuclei");
        }
        if nuclei
            .iter()
            .any(|a| !(a.z > 0.0) || a.center.iter().any(|c| !c.is_finite()))
        {
            return invalid("nuclear charges must be positive with finite centers");
        }
        if n_orb == 0 {
            return invalid("at least one occupied orbital is required");
        }
        Ok(Self { nuclei, n_orb })
    }

    /// Closed-shell occupation `ceil(sum Z / 2)`.
    pub fn neutral(nuclei: Vec<Nucleus>) -> Result<Self> {
        let electrons: f64 = nuclei.iter().map(|a| a.z).sum();
        Self::new(nuclei, (electrons / 2.0).ceil().max(1.0) as usize)
    }

    pub fn check_against(&self, bs: &BasisSet) -> Result<()> {
        if self.n_orb > bs.len() {
            return invalid(format!(
                "{} occupied orbitals exceed {} basis functions",
                self.n_orb,
                bs.len()
            ));
        }
        for a in &self.nuclei {
            for l in 0..3 {
                let b = bs.grid().axes[l].half_width;
                if a.center[l].abs() > b {
                    return Err(Error::OutOfDomain(format!(
                        "nucleus {:?} lies outside the box",
                        a.center
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for (i, a) in self.nuclei.iter().enumerate() {
            for b in &self.nuclei[i + 1..] {
                let d = (0..3)
                    .map(|l| (a.center[l] - b.center[l]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                e += a.z * b.z / d;
            }
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_gaussian_samples() {
        let g = Grid3::cubic(4.0, 9).unwrap();
        let f = SeparableBasisFunction::new([0.0; 3], [0; 3], vec![1.0], vec![1.0]).unwrap();
        let t = discretize(&f, &g).unwrap();
        assert_eq!(t.rank(), 1);
        let x = g.axes[0].coordinates();
        for (i, xi) in x.iter().enumerate() {
            assert!((t.factor(0)[(i, 0)] - (-xi * xi).exp()).abs() < 1e-15);
        }
        assert_eq!(t.factor(0)[(4, 0)], 1.0);
    }

    #[test]
    fn contraction_rank_and_norm() {
        let g = Grid3::cubic(8.0, 129).unwrap();
        let f = SeparableBasisFunction::new(
            [0.3, 0.0, -0.2],
            [0, 1, 0],
            vec![1.2, 0.4],
            vec![0.6, 0.5],
        )
        .unwrap();
        let t = discretize(&f, &g).unwrap();
        assert_eq!(t.rank(), 2);
        let s = crate::tensor::scalar_product(&t, &t).unwrap() * g.cell_volume();
        assert!((s - 1.0).abs() < 1e-8, "{s}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SeparableBasisFunction::new([0.0; 3], [2, 0, 0], vec![1.0], vec![1.0]).is_err());
        assert!(SeparableBasisFunction::new([0.0; 3], [0; 3], vec![-1.0], vec![1.0]).is_err());
        let g = Grid3::cubic(2.0, 8).unwrap();
        let f = SeparableBasisFunction::s([3.0, 0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            BasisSet::new(vec![f], g),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn repulsion() {
        let m = Molecule::neutral(vec![
            Nucleus {
                z: 1.0,
                center: [0.0, 0.0, -0.7],
            },
            Nucleus {
                z: 1.0,
                center: [0.0, 0.0, 0.7],
            },
        ])
        .unwrap();
        assert_eq!(m.n_orb, 1);
        assert!((m.nuclear_repulsion() - 1.0 / 1.4).abs() < 1e-15);
    }
}
