//! Second-order Moller-Plesset correction from Cholesky-factorized
//! integrals, with an exponential-sum separation of the energy denominator.
//!
//! Compound indices are `ia = i N_v + (a - N_orb)` throughout.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::hf::TeiCholesky;
use crate::kernel::{reciprocal_expsum, ReciprocalExpSum};

/// Orbital energies and coefficients split into occupied and virtual blocks.
#[derive(Clone, Debug)]
pub struct MoSpace {
    pub energies: Vec<f64>,
    pub n_occ: usize,
    pub c: DMatrix<f64>,
}

impl MoSpace {
    pub fn new(energies: Vec<f64>, n_occ: usize, c: DMatrix<f64>) -> Result<Self> {
        let nb = energies.len();
        if c.nrows() != nb || c.ncols() != nb {
            return invalid(format!(
                "coefficients {:?} do not match {nb} orbital energies",
                c.shape()
            ));
        }
        if n_occ == 0 || n_occ > nb {
            return invalid(format!("{n_occ} occupied orbitals out of {nb}"));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return invalid("orbital energies must be sorted ascending");
        }
        Ok(Self { energies, n_occ, c })
    }

    pub fn n_vir(&self) -> usize {
        self.energies.len() - self.n_occ
    }

    pub fn n_ov(&self) -> usize {
        self.n_occ * self.n_vir()
    }

    /// `min eps_a - max eps_i`.
    pub fn gap(&self) -> f64 {
        if self.n_vir() == 0 {
            return f64::INFINITY;
        }
        self.energies[self.n_occ] - self.energies[self.n_occ - 1]
    }

    fn check_gap(&self) -> Result<()> {
        let g = self.gap();
        if !(g > 0.0) {
            return Err(Error::DivisionGuard(format!(
                "homo-lumo gap {g:e} is not positive"
            )));
        }
        Ok(())
    }

    /// `eps_a - eps_i` for compound index `ia`.
    pub fn excitation(&self, ia: usize) -> f64 {
        let nv = self.n_vir();
        self.energies[self.n_occ + ia % nv] - self.energies[ia / nv]
    }

    /// Smallest and largest denominators `eps_a + eps_b - eps_i - eps_j`.
    pub fn denominator_range(&self) -> (f64, f64) {
        let lo = 2.0 * self.gap();
        let hi = 2.0 * (self.energies[self.energies.len() - 1] - self.energies[0]);
        (lo, hi)
    }
}

/// `L_V` with `V = L_V L_V^T`, `V_{ia, jb} = (ia | jb)`.
#[derive(Clone, Debug)]
pub struct MoCholesky {
    pub l_v: DMatrix<f64>,
    pub n_occ: usize,
    pub n_vir: usize,
}

impl MoCholesky {
    pub fn v(&self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        let (p, q) = (i * self.n_vir + a, j * self.n_vir + b);
        self.l_v.row(p).dot(&self.l_v.row(q))
    }

    pub fn dense(&self) -> DMatrix<f64> {
        &self.l_v * self.l_v.transpose()
    }
}

/// `C_occ^T L_s C_vir` for every Cholesky column `s`.
pub fn mo_transform_cholesky(chol: &TeiCholesky, mos: &MoSpace) -> Result<MoCholesky> {
    let nb = chol.nb;
    if mos.c.nrows() != nb {
        return invalid(format!(
            "{} MO rows for {nb} basis functions",
            mos.c.nrows()
        ));
    }
    let (no, nv) = (mos.n_occ, mos.n_vir());
    let c_occ = mos.c.columns(0, no);
    let c_vir = mos.c.columns(no, nv);
    let cols: Vec<DMatrix<f64>> = (0..chol.rank())
        .into_par_iter()
        .map(|s| c_occ.transpose() * chol.slice(s) * c_vir)
        .collect();
    let l_v = DMatrix::from_fn(no * nv, chol.rank(), |ia, s| cols[s][(ia / nv, ia % nv)]);
    Ok(MoCholesky {
        l_v,
        n_occ: no,
        n_vir: nv,
    })
}

/// `1/x ~ sum_k w_k exp(-lambda_k x)` over the denominator range.
pub fn energy_denominator_expsum(mos: &MoSpace, eps: f64) -> Result<ReciprocalExpSum> {
    mos.check_gap()?;
    let (lo, hi) = mos.denominator_range();
    reciprocal_expsum(lo, hi.max(lo), eps)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mp2Mode {
    /// Quadruple loop over `v_{iajb}` with exact denominators.
    Oracle,
    /// Scaled Cholesky contractions per exponential-sum term.
    Factorized { eps: f64 },
}

/// Default relative accuracy of the denominator expansion.
pub const DEFAULT_EXPSUM_EPS: f64 = 1e-11;

/// `-sum v_{iajb} (2 v_{iajb} - v_{ibja}) / (eps_a + eps_b - eps_i - eps_j)` from a
/// dense `N_ov x N_ov` matrix.
pub fn mp2_energy_dense(v: &DMatrix<f64>, mos: &MoSpace) -> Result<f64> {
    mos.check_gap()?;
    let (no, nv) = (mos.n_occ, mos.n_vir());
    if v.shape() != (no * nv, no * nv) {
        return invalid(format!(
            "V is {:?}, expected {n}x{n}",
            v.shape(),
            n = no * nv
        ));
    }
    let e = &mos.energies;
    let blocks: Vec<f64> = (0..no * no)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / no, ij % no);
            let mut s = 0.0;
            for a in 0..nv {
                for b in 0..nv {
                    let iajb = v[(i * nv + a, j * nv + b)];
                    let ibja = v[(i * nv + b, j * nv + a)];
                    let den = e[no + a] + e[no + b] - e[i] - e[j];
                    s += iajb * (2.0 * iajb - ibja) / den;
                }
            }
            s
        })
        .collect();
    Ok(-blocks.iter().sum::<f64>())
}

/// MP2 energy from MO Cholesky factors in either mode.
pub fn mp2_energy(mo: &MoCholesky, mos: &MoSpace, mode: Mp2Mode) -> Result<f64> {
    mos.check_gap()?;
    if mo.n_occ != mos.n_occ || mo.n_vir != mos.n_vir() {
        return invalid("MO factor and orbital space disagree on occupations");
    }
    match mode {
        Mp2Mode::Oracle => mp2_energy_dense(&mo.dense(), mos),
        Mp2Mode::Factorized { eps } => {
            let es = energy_denominator_expsum(mos, eps)?;
            Ok(mp2_factorized(mo, mos, &es))
        }
    }
}

fn mp2_factorized(mo: &MoCholesky, mos: &MoSpace, es: &ReciprocalExpSum) -> f64 {
    let (no, nv) = (mo.n_occ, mo.n_vir);
    let nov = no * nv;
    let terms: Vec<f64> = (0..es.len())
        .into_par_iter()
        .map(|k| {
            let lam = es.rates[k];
            let scale: Vec<f64> = (0..nov)
                .map(|ia| (-0.5 * lam * mos.excitation(ia)).exp())
                .collect();
            let lk = DMatrix::from_fn(nov, mo.l_v.ncols(), |ia, s| scale[ia] * mo.l_v[(ia, s)]);
            let coulomb = (lk.transpose() * &lk).norm_squared();
            let mut exchange = 0.0;
            for i in 0..no {
                let li = lk.rows(i * nv, nv);
                for j in 0..no {
                    let x = li * lk.rows(j * nv, nv).transpose();
                    exchange += x.component_mul(&x.transpose()).sum();
                }
            }
            es.weights[k] * (2.0 * coulomb - exchange)
        })
        .collect();
    -terms.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(energies: Vec<f64>, n_occ: usize) -> MoSpace {
        let n = energies.len();
        MoSpace::new(energies, n_occ, DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn single_amplitude_closed_form() {
        let mos = space(vec![-0.6, 0.4], 1);
        let v = DMatrix::from_element(1, 1, 0.2);
        let e = mp2_energy_dense(&v, &mos).unwrap();
        assert!((e - -(0.2 * (2.0 * 0.2 - 0.2) / 2.0)).abs() < 1e-15);
        let mo = MoCholesky {
            l_v: DMatrix::from_element(1, 1, 0.2f64.sqrt()),
            n_occ: 1,
            n_vir: 1,
        };
        let f = mp2_energy(&mo, &mos, Mp2Mode::Factorized { eps: 1e-12 }).unwrap();
        assert!((f - e).abs() < 1e-12 * e.abs());
    }

    #[test]
    fn gap_guard() {
        let mos = space(vec![-0.5, 0.1, 0.1], 2);
        assert!(mos.gap() == 0.0);
        let v = DMatrix::zeros(2, 2);
        assert!(matches!(
            mp2_energy_dense(&v, &mos),
            Err(Error::DivisionGuard(_))
        ));
        assert!(MoSpace::new(vec![0.3, 0.1], 1, DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn degenerate_denominators_need_one_term() {
        let mos = space(vec![-1.0, 1.0], 1);
        let es = energy_denominator_expsum(&mos, 1e-8).unwrap();
        assert_eq!(es.len(), 1);
        assert!((es.eval(4.0) - 0.25).abs() < 1e-12);
    }
}
