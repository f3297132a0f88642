//! Restricted closed-shell SCF: `F(D) C = S C Lambda` by Cholesky congruence
//! with linear density mixing.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::basis::{BasisSet, Molecule};
use super::coulomb::{
    coulomb_matrix, density_matrix, density_tensor_from_matrix, exchange_matrix, hartree_potential,
};
use super::one_electron::{kinetic_matrix, nuclear_matrix, overlap_matrix, MassMode};
use super::tei::{
    coulomb_from_factors, exchange_from_factors, tei_cholesky, TeiCholesky, TeiFactorization,
};
use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelKind, KernelTensor};
use crate::linalg::{max_abs, symmetrize};

/// How `J(D)` and `K(D)` are evaluated inside the iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FockRoute {
    /// Cholesky factors of the TEI matrix.
    #[default]
    Factorized,
    /// Density and orbital convolutions on the grid every iteration.
    Tensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScfConfig {
    pub max_iter: usize,
    /// Convergence threshold on `|E_k - E_{k-1}|`.
    pub tol: f64,
    /// Weight of the new density in the linear mix.
    pub mixing: f64,
    pub kernel_eps: f64,
    pub fit_eps: f64,
    pub chol_eps: f64,
    pub mass: MassMode,
    pub route: FockRoute,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-10,
            mixing: 0.7,
            kernel_eps: 1e-8,
            fit_eps: 1e-8,
            chol_eps: 1e-10,
            mass: MassMode::Lumped,
            route: FockRoute::Factorized,
        }
    }
}

impl ScfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return invalid("mixing must lie in (0, 1]");
        }
        for (name, v) in [
            ("tol", self.tol),
            ("kernel_eps", self.kernel_eps),
            ("fit_eps", self.fit_eps),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0, 1)"));
            }
        }
        if !(self.chol_eps >= 0.0 && self.chol_eps < 1.0) {
            return invalid("chol_eps must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScfIteration {
    pub iteration: usize,
    pub energy: f64,
    pub delta_e: f64,
    /// `max |D_new - D|` before mixing.
    pub density_change: f64,
    /// `max |C^T S C - I|` after the diagonalization.
    pub orthonormality: f64,
}

#[derive(Clone, Debug)]
pub struct ScfState {
    /// All eigenvectors, columns sorted by orbital energy.
    pub c: DMatrix<f64>,
    pub orbital_energies: Vec<f64>,
    pub d: DMatrix<f64>,
    pub n_orb: usize,
    pub energy: f64,
    pub nuclear_repulsion: f64,
    pub converged: bool,
    pub history: Vec<ScfIteration>,
    pub s: DMatrix<f64>,
    pub h_core: DMatrix<f64>,
    pub fock: DMatrix<f64>,
    pub tei: Option<TeiCholesky>,
}

impl ScfState {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn c_occ(&self) -> DMatrix<f64> {
        self.c.columns(0, self.n_orb).into_owned()
    }

    pub fn electronic_energy(&self) -> f64 {
        self.energy - self.nuclear_repulsion
    }
}

/// Solves `F C = S C Lambda`; returns ascending eigenvalues and `C` with `C^T S C = I`.
pub fn generalized_eigen(f: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new(s.clone()).ok_or_else(|| {
        Error::Numerical(
            "overlap matrix is not positive definite; the basis is near-dependent".into(),
        )
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("overlap Cholesky factor is singular".into()))?;
    let mut fp = &linv * f * linv.transpose();
    symmetrize(&mut fp);
    let eig = SymmetricEigen::try_new(fp, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let u = DMatrix::from_fn(f.nrows(), f.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    let c = linv.transpose() * u;
    Ok((vals, c))
}

/// SCF on prepared matrices; `two_electron(D)` returns `(J, K)` with the
/// exchange already carrying its negative sign.
pub fn scf_from_matrices(
    s: &DMatrix<f64>,
    h_core: &DMatrix<f64>,
    nuclear_repulsion: f64,
    n_orb: usize,
    cfg: &ScfConfig,
    mut two_electron: impl FnMut(&DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)>,
) -> Result<ScfState> {
    cfg.validate()?;
    let nb = s.nrows();
    if s.shape() != (nb, nb) || h_core.shape() != (nb, nb) {
        return invalid("overlap and core Hamiltonian must be square and of equal size");
    }
    if n_orb == 0 || n_orb > nb {
        return invalid(format!(
            "{n_orb} occupied orbitals for {nb} basis functions"
        ));
    }
    let mut d = DMatrix::zeros(nb, nb);
    let mut history: Vec<ScfIteration> = Vec::new();
    let mut prev_e: Option<f64> = None;
    let mut converged = false;
    let (mut c, mut eps, mut fock) = (DMatrix::zeros(nb, nb), vec![0.0; nb], h_core.clone());
    for it in 1..=cfg.max_iter {
        let (j, k) = two_electron(&d)?;
        let mut f = h_core + &j + &k;
        symmetrize(&mut f);
        let g = h_core + (&j + &k) * 0.5;
        let energy = d.component_mul(&g).sum() + nuclear_repulsion;
        let (vals, vecs) = generalized_eigen(&f, s)?;
        let defect = max_abs(&(vecs.transpose() * s * &vecs - DMatrix::identity(nb, nb)));
        let c_occ = vecs.columns(0, n_orb).into_owned();
        let d_new = density_matrix(&c_occ);
        let change = max_abs(&(&d_new - &d));
        let delta_e = prev_e.map_or(f64::INFINITY, |p| energy - p);
        history.push(ScfIteration {
            iteration: it,
            energy,
            delta_e,
            density_change: change,
            orthonormality: defect,
        });
        c = vecs;
        eps = vals;
        fock = f;
        if delta_e.abs() <= cfg.tol {
            converged = true;
            break;
        }
        prev_e = Some(energy);
        d = &d_new * cfg.mixing + &d * (1.0 - cfg.mixing);
    }
    let energy = history.last().map_or(nuclear_repulsion, |h| h.energy);
    Ok(ScfState {
        c,
        orbital_energies: eps,
        d,
        n_orb,
        energy,
        nuclear_repulsion,
        converged,
        history,
        s: s.clone(),
        h_core: h_core.clone(),
        fock,
        tei: None,
    })
}

/// Core Hamiltonian `T + V_c` and overlap on the basis grid.
pub fn core_matrices(
    mol: &Molecule,
    bs: &BasisSet,
    kernel: &KernelTensor,
    mass: MassMode,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let s = overlap_matrix(bs);
    let mut h = kinetic_matrix(bs, mass) + nuclear_matrix(bs, mol, kernel)?;
    symmetrize(&mut h);
    Ok((s, h))
}

/// Newton reference kernel on the doubled basis grid.
pub fn basis_kernel(bs: &BasisSet, eps: f64) -> Result<KernelTensor> {
    KernelTensor::for_grid(bs.grid(), KernelKind::Newton, eps, true)
}

/// Full grid SCF: kernel, one-electron matrices, two-electron route and iteration.
pub fn scf_solve(mol: &Molecule, bs: &BasisSet, cfg: &ScfConfig) -> Result<ScfState> {
    cfg.validate()?;
    mol.check_against(bs)?;
    let kernel = basis_kernel(bs, cfg.kernel_eps)?;
    let (s, h) = core_matrices(mol, bs, &kernel, cfg.mass)?;
    let enuc = mol.nuclear_repulsion();
    match cfg.route {
        FockRoute::Factorized => {
            let fac = TeiFactorization::new(bs, &kernel, cfg.fit_eps)?;
            let chol = tei_cholesky(&fac, cfg.chol_eps)?;
            let mut st = scf_from_matrices(&s, &h, enuc, mol.n_orb, cfg, |d| {
                Ok((
                    coulomb_from_factors(&chol, d)?,
                    exchange_from_factors(&chol, d)?,
                ))
            })?;
            st.tei = Some(chol);
            Ok(st)
        }
        FockRoute::Tensor => scf_from_matrices(&s, &h, enuc, mol.n_orb, cfg, |d| {
            let nb = bs.len();
            if d.iter().all(|v| *v == 0.0) {
                return Ok((DMatrix::zeros(nb, nb), DMatrix::zeros(nb, nb)));
            }
            let theta = density_tensor_from_matrix(bs, d, None)?;
            let j = coulomb_matrix(bs, &hartree_potential(&theta, &kernel)?)?;
            // D = 2 C C^T with C = V sqrt(w / 2) from the eigen-decomposition of D
            let eig = SymmetricEigen::new(d.clone());
            let keep: Vec<usize> = (0..nb).filter(|&i| eig.eigenvalues[i] > 1e-14).collect();
            let c = DMatrix::from_fn(nb, keep.len(), |r, q| {
                eig.eigenvectors[(r, keep[q])] * (0.5 * eig.eigenvalues[keep[q]]).sqrt()
            });
            let k = exchange_matrix(bs, &c, &kernel)? * -1.0;
            Ok((j, k))
        }),
    }
}
