//! Factorized two-electron integrals: 1D density fitting of basis-product
//! side matrices, convolution matrices per kernel term, and a pivoted
//! Cholesky factor of the TEI matrix `B` built from entries and columns.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::basis::BasisSet;
use crate::conv::ConvPlan;
use crate::error::{invalid, Error, Result};
use crate::kernel::KernelTensor;

/// Per-axis factorization `G ~ U V^T` of the `n x N_p^2` product matrix.
#[derive(Clone, Debug)]
pub struct DensityFit {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// `||G - U V^T||_F / ||G||_F`.
    pub residual: f64,
}

impl DensityFit {
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }
}

/// Primitive-pair index bookkeeping for a (possibly contracted) basis.
#[derive(Clone, Debug)]
struct PairMap {
    nb: usize,
    np: usize,
    /// Global primitive indices and coefficients per function.
    prims: Vec<Vec<(usize, f64)>>,
}

impl PairMap {
    fn new(bs: &BasisSet) -> Self {
        let mut prims = Vec::new();
        let mut next = 0;
        for f in bs.functions() {
            prims.push(
                f.coefficients
                    .iter()
                    .map(|&c| {
                        next += 1;
                        (next - 1, c)
                    })
                    .collect(),
            );
        }
        Self {
            nb: bs.len(),
            np: next,
            prims,
        }
    }

    /// Primitive pairs `(p q)` with coefficient products for the basis pair `(mu nu)`.
    fn expand(&self, mu: usize, nu: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.prims[mu].len() * self.prims[nu].len());
        for &(p, cp) in &self.prims[mu] {
            for &(q, cq) in &self.prims[nu] {
                out.push((p * self.np + q, cp * cq));
            }
        }
        out
    }
}

/// `U, V` per axis, the convolution matrices `M_k` and index bookkeeping.
#[derive(Clone, Debug)]
pub struct TeiFactorization {
    pub fits: [DensityFit; 3],
    /// `M_k^(l)` for each kernel term `k`; the kernel weight sits in `l = 0`.
    pub conv: Vec<[DMatrix<f64>; 3]>,
    pub eps_fit: f64,
    /// `V^(l) M_k^(l)`, cached for column evaluation.
    vm: Vec<[DMatrix<f64>; 3]>,
    map: PairMap,
}

/// Pivoted Gram-Schmidt on the rows of `g`: the stable form of truncated
/// pivoted Cholesky of `G G^T`.
fn fit_axis(g: &DMatrix<f64>, eps: f64) -> DensityFit {
    let total = g.norm_squared();
    let mut res = g.clone();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let limit = g.nrows().min(g.ncols());
    let mut left = total;
    while basis.len() < limit && left > eps * eps * total && total > 0.0 {
        let (pivot, _) = (0..res.nrows())
            .map(|i| (i, res.row(i).norm_squared()))
            .fold((0, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        let mut v: DVector<f64> = res.row(pivot).transpose();
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let nv = v.norm();
        if !(nv > 0.0) {
            break;
        }
        v /= nv;
        let proj = &res * &v;
        res -= &proj * v.transpose();
        basis.push(v);
        left = res.norm_squared();
    }
    let v = if basis.is_empty() {
        DMatrix::zeros(g.ncols(), 0)
    } else {
        DMatrix::from_columns(&basis)
    };
    let u = g * &v;
    let residual = if total > 0.0 {
        (left / total).sqrt()
    } else {
        0.0
    };
    DensityFit { u, v, residual }
}

/// Product side matrix `G^(l)` with columns `g_p (.) g_q` over primitive pairs.
pub fn product_side_matrix(bs: &BasisSet, l: usize) -> DMatrix<f64> {
    let a = bs.side_matrix(l);
    let np = a.ncols();
    DMatrix::from_fn(a.nrows(), np * np, |i, c| a[(i, c / np)] * a[(i, c % np)])
}

/// 1D density fitting on every axis with relative accuracy `eps_fit`.
pub fn tei_density_fitting(bs: &BasisSet, eps_fit: f64) -> Result<[DensityFit; 3]> {
    if !(eps_fit > 0.0 && eps_fit < 1.0) {
        return invalid("fitting tolerance must lie in (0, 1)");
    }
    Ok([0, 1, 2].map(|l| fit_axis(&product_side_matrix(bs, l), eps_fit)))
}

/// `M_k^(l) = h U^T (p_k * U)` with the 1D kernel columns of the doubled reference.
pub fn tei_convolution_matrices(
    fits: &[DensityFit; 3],
    bs: &BasisSet,
    kernel: &KernelTensor,
) -> Result<Vec<[DMatrix<f64>; 3]>> {
    let dims = bs.grid().extents();
    if !kernel.doubled || kernel.tensor.dims() != dims.map(|n| 2 * n) {
        return invalid("kernel must live on the doubled basis grid");
    }
    let plans = dims.map(|n| ConvPlan::new(n, 2 * n, n - 1, n));
    let t = &kernel.tensor;
    let out = (0..t.rank())
        .into_par_iter()
        .map(|k| {
            [0, 1, 2].map(|l| {
                let u = &fits[l].u;
                let n = dims[l];
                let plan = &plans[l];
                let pk = plan.prepare(t.column(l, k));
                let mut conv = DMatrix::zeros(n, u.ncols());
                let mut buf = vec![0.0; n];
                for c in 0..u.ncols() {
                    let pu = plan.prepare(u.column(c).as_slice());
                    plan.combine(&pu, &pk, &mut buf);
                    conv.column_mut(c).copy_from_slice(&buf);
                }
                let scale = bs.grid().axes[l].h * if l == 0 { t.weights()[k] } else { 1.0 };
                let mut m = u.transpose() * conv * scale;
                crate::linalg::symmetrize(&mut m);
                m
            })
        })
        .collect();
    Ok(out)
}

impl TeiFactorization {
    pub fn new(bs: &BasisSet, kernel: &KernelTensor, eps_fit: f64) -> Result<Self> {
        let fits = tei_density_fitting(bs, eps_fit)?;
        let conv = tei_convolution_matrices(&fits, bs, kernel)?;
        let vm = conv
            .iter()
            .map(|m| [0, 1, 2].map(|l| &fits[l].v * &m[l]))
            .collect();
        Ok(Self {
            fits,
            conv,
            eps_fit,
            vm,
            map: PairMap::new(bs),
        })
    }

    pub fn basis_len(&self) -> usize {
        self.map.nb
    }

    pub fn ranks(&self) -> [usize; 3] {
        [0, 1, 2].map(|l| self.fits[l].rank())
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        if let Some(i) = idx.iter().find(|&&i| i >= self.map.nb) {
            return invalid(format!(
                "basis index {i} out of range (N_b = {})",
                self.map.nb
            ));
        }
        Ok(())
    }

    fn prim_entry(&self, p: usize, q: usize) -> f64 {
        self.vm
            .iter()
            .map(|vm| {
                (0..3)
                    .map(|l| vm[l].row(p).dot(&self.fits[l].v.row(q)))
                    .product::<f64>()
            })
            .sum()
    }

    /// `b_{mu nu, kappa lambda}`, approximating `(mu nu | kappa lambda)`.
    pub fn entry(&self, mu: usize, nu: usize, kappa: usize, lambda: usize) -> Result<f64> {
        self.check(&[mu, nu, kappa, lambda])?;
        let left = self.map.expand(mu, nu);
        let right = self.map.expand(kappa, lambda);
        let mut s = 0.0;
        for &(p, cp) in &left {
            for &(q, cq) in &right {
                s += cp * cq * self.prim_entry(p, q);
            }
        }
        Ok(s)
    }

    /// Column `kappa lambda` of `B`, indexed by `mu N_b + nu`.
    pub fn column(&self, kappa: usize, lambda: usize) -> Result<Vec<f64>> {
        self.check(&[kappa, lambda])?;
        let npp = self.map.np * self.map.np;
        let mut prim_col = vec![0.0; npp];
        for (q, cq) in self.map.expand(kappa, lambda) {
            for vm in &self.vm {
                let z = [0, 1, 2].map(|l| &vm[l] * self.fits[l].v.row(q).transpose());
                for (p, acc) in prim_col.iter_mut().enumerate() {
                    *acc += cq * z[0][p] * z[1][p] * z[2][p];
                }
            }
        }
        let nb = self.map.nb;
        Ok((0..nb * nb)
            .map(|mn| {
                self.map
                    .expand(mn / nb, mn % nb)
                    .iter()
                    .map(|&(p, c)| c * prim_col[p])
                    .sum()
            })
            .collect())
    }

    /// Diagonal `b_{mu nu, mu nu}` indexed by `mu N_b + nu`.
    pub fn diagonal(&self) -> Vec<f64> {
        let nb = self.map.nb;
        (0..nb * nb)
            .into_par_iter()
            .map(|mn| {
                self.entry(mn / nb, mn % nb, mn / nb, mn % nb)
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    /// Dense `N_b^2 x N_b^2` matrix; intended for small systems and checks.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        let nb = self.map.nb;
        let cols = (0..nb * nb)
            .into_par_iter()
            .map(|kl| self.column(kl / nb, kl % nb))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(nb * nb, nb * nb, |r, c| cols[c][r]))
    }
}

/// Pivoted Cholesky factor `L` with `B ~ L L^T`.
#[derive(Clone, Debug)]
pub struct TeiCholesky {
    pub l: DMatrix<f64>,
    pub nb: usize,
    pub eps: f64,
    pub pivots: Vec<usize>,
}

impl TeiCholesky {
    pub fn rank(&self) -> usize {
        self.l.ncols()
    }

    /// Column `s` of `L` as an `N_b x N_b` matrix.
    pub fn slice(&self, s: usize) -> DMatrix<f64> {
        let nb = self.nb;
        DMatrix::from_fn(nb, nb, |m, n| self.l[(m * nb + n, s)])
    }
}

/// Negative pivots below this are rounding; beyond it the matrix is indefinite.
pub const PIVOT_FLOOR: f64 = -1e-10;

/// Diagonally pivoted Cholesky from entry access; stops when the largest
/// remaining diagonal is at most `eps_chol` times the initial maximum.
pub fn tei_cholesky(fac: &TeiFactorization, eps_chol: f64) -> Result<TeiCholesky> {
    if !(0.0..1.0).contains(&eps_chol) {
        return invalid("Cholesky tolerance must lie in [0, 1)");
    }
    let nb = fac.basis_len();
    let n = nb * nb;
    let mut d = fac.diagonal();
    if let Some(v) = d.iter().find(|v| **v < PIVOT_FLOOR || !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "TEI diagonal entry {v:e} is negative"
        )));
    }
    let dmax0 = d.iter().cloned().fold(0.0, f64::max);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    while cols.len() < n {
        let (j, dj) =
            d.iter()
                .cloned()
                .enumerate()
                .fold((0, f64::MIN), |b, c| if c.1 > b.1 { c } else { b });
        if dj <= eps_chol * dmax0 || dj <= 0.0 {
            break;
        }
        let mut col = fac.column(j / nb, j % nb)?;
        for prev in &cols {
            let f = prev[j];
            col.iter_mut().zip(prev).for_each(|(c, p)| *c -= f * p);
        }
        let piv = col[j];
        if piv < PIVOT_FLOOR {
            return Err(Error::Numerical(format!(
                "negative Cholesky pivot {piv:e} at index {j}"
            )));
        }
        let root = dj.max(piv).sqrt();
        col.iter_mut().for_each(|c| *c /= root);
        for (di, c) in d.iter_mut().zip(&col) {
            *di -= c * c;
        }
        d[j] = 0.0;
        pivots.push(j);
        cols.push(col);
    }
    let r = cols.len();
    let l = DMatrix::from_fn(n, r, |i, s| cols[s][i]);
    Ok(TeiCholesky {
        l,
        nb,
        eps: eps_chol,
        pivots,
    })
}

fn check_density(chol: &TeiCholesky, d: &DMatrix<f64>) -> Result<()> {
    if d.shape() != (chol.nb, chol.nb) {
        return invalid(format!(
            "density is {:?}, expected {n}x{n}",
            d.shape(),
            n = chol.nb
        ));
    }
    Ok(())
}

/// `vec J = L (L^T vec D)`.
pub fn coulomb_from_factors(chol: &TeiCholesky, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_density(chol, d)?;
    let nb = chol.nb;
    let vd = DVector::from_fn(nb * nb, |i, _| d[(i / nb, i % nb)]);
    let vj = &chol.l * (chol.l.transpose() * vd);
    Ok(DMatrix::from_fn(nb, nb, |m, n| vj[m * nb + n]))
}

/// `K(D) = -1/2 sum_s L_s D L_s^T`.
pub fn exchange_from_factors(chol: &TeiCholesky, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_density(chol, d)?;
    let mut k = DMatrix::zeros(chol.nb, chol.nb);
    for s in 0..chol.rank() {
        let ls = chol.slice(s);
        k -= &ls * d * ls.transpose() * 0.5;
    }
    Ok(k)
}

/// `F = H + J(D) + K(D)`.
pub fn fock_from_factors(
    h_core: &DMatrix<f64>,
    chol: &TeiCholesky,
    d: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if h_core.shape() != (chol.nb, chol.nb) {
        return invalid("core Hamiltonian shape does not match the factor");
    }
    let mut f = h_core + coulomb_from_factors(chol, d)? + exchange_from_factors(chol, d)?;
    crate::linalg::symmetrize(&mut f);
    Ok(f)
}
