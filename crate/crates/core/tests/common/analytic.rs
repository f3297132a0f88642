//! Closed-form integrals over contracted s-type Gaussians and a plain
//! Roothaan iteration on them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

fn boys0(t: f64) -> f64 {
    if t < 1e-12 {
        1.0 - t / 3.0
    } else {
        0.5 * (PI / t).sqrt() * libm::erf(t.sqrt())
    }
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|l| (a[l] - b[l]).powi(2)).sum()
}

#[derive(Clone, Debug)]
pub struct SGaussian {
    pub center: [f64; 3],
    /// `(exponent, coefficient)` with coefficients multiplying unit-norm primitives.
    pub prims: Vec<(f64, f64)>,
}

impl SGaussian {
    pub fn new(center: [f64; 3], exps: &[f64], coefs: &[f64]) -> Self {
        let norm = |a: f64| (2.0 * a / PI).powf(0.75);
        let mut prims: Vec<(f64, f64)> = exps
            .iter()
            .zip(coefs)
            .map(|(&a, &c)| (a, c * norm(a)))
            .collect();
        let mut s = 0.0;
        for &(a, ca) in &prims {
            for &(b, cb) in &prims {
                s += ca * cb * (PI / (a + b)).powf(1.5);
            }
        }
        prims.iter_mut().for_each(|p| p.1 /= s.sqrt());
        Self { center, prims }
    }
}

fn pair<F: Fn(f64, f64) -> f64>(f: &SGaussian, g: &SGaussian, k: F) -> f64 {
    let mut s = 0.0;
    for &(a, ca) in &f.prims {
        for &(b, cb) in &g.prims {
            s += ca * cb * k(a, b);
        }
    }
    s
}

pub fn overlap(f: &SGaussian, g: &SGaussian) -> f64 {
    let r2 = dist2(f.center, g.center);
    pair(f, g, |a, b| {
        (PI / (a + b)).powf(1.5) * (-a * b / (a + b) * r2).exp()
    })
}

pub fn kinetic(f: &SGaussian, g: &SGaussian) -> f64 {
    let r2 = dist2(f.center, g.center);
    pair(f, g, |a, b| {
        let mu = a * b / (a + b);
        mu * (3.0 - 2.0 * mu * r2) * (PI / (a + b)).powf(1.5) * (-mu * r2).exp()
    })
}

pub fn nuclear(f: &SGaussian, g: &SGaussian, z: f64, c: [f64; 3]) -> f64 {
    let r2 = dist2(f.center, g.center);
    pair(f, g, |a, b| {
        let p = a + b;
        let pc = [0, 1, 2].map(|l| (a * f.center[l] + b * g.center[l]) / p);
        -z * 2.0 * PI / p * (-a * b / p * r2).exp() * boys0(p * dist2(pc, c))
    })
}

pub fn eri(f: &SGaussian, g: &SGaussian, u: &SGaussian, v: &SGaussian) -> f64 {
    let mut s = 0.0;
    for &(a, ca) in &f.prims {
        for &(b, cb) in &g.prims {
            for &(c, cc) in &u.prims {
                for &(d, cd) in &v.prims {
                    let (p, q) = (a + b, c + d);
                    let pp = [0, 1, 2].map(|l| (a * f.center[l] + b * g.center[l]) / p);
                    let qq = [0, 1, 2].map(|l| (c * u.center[l] + d * v.center[l]) / q);
                    let pre = 2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt());
                    let e = (-a * b / p * dist2(f.center, g.center)
                        - c * d / q * dist2(u.center, v.center))
                    .exp();
                    s += ca * cb * cc * cd * pre * e * boys0(p * q / (p + q) * dist2(pp, qq));
                }
            }
        }
    }
    s
}

pub struct System {
    pub basis: Vec<SGaussian>,
    pub nuclei: Vec<(f64, [f64; 3])>,
}

pub struct Matrices {
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// `(mu nu | kappa lambda)` at `[(mu * n + nu) * n * n + kappa * n + lambda]`.
    pub eri: Vec<f64>,
}

impl System {
    pub fn new(basis: Vec<SGaussian>, nuclei: Vec<(f64, [f64; 3])>) -> Self {
        Self { basis, nuclei }
    }

    pub fn matrices(&self) -> Matrices {
        let n = self.basis.len();
        let b = &self.basis;
        let s = DMatrix::from_fn(n, n, |i, j| overlap(&b[i], &b[j]));
        let t = DMatrix::from_fn(n, n, |i, j| kinetic(&b[i], &b[j]));
        let v = DMatrix::from_fn(n, n, |i, j| {
            self.nuclei
                .iter()
                .map(|&(z, c)| nuclear(&b[i], &b[j], z, c))
                .sum()
        });
        let mut e = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        e[((i * n + j) * n + k) * n + l] = eri(&b[i], &b[j], &b[k], &b[l]);
                    }
                }
            }
        }
        Matrices { s, t, v, eri: e }
    }

    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for (i, a) in self.nuclei.iter().enumerate() {
            for b in &self.nuclei[i + 1..] {
                e += a.0 * b.0 / dist2(a.1, b.1).sqrt();
            }
        }
        e
    }

    /// Lowest eigenvalue of the core Hamiltonian: the one-electron energy.
    pub fn one_electron_energy(&self) -> f64 {
        let m = self.matrices();
        lowest_generalized(&(&m.t + &m.v), &m.s).0[0]
    }

    /// Closed-shell RHF energy with `n_orb` doubly occupied orbitals.
    pub fn rhf_energy(&self, n_orb: usize) -> f64 {
        let m = self.matrices();
        let n = self.basis.len();
        let h = &m.t + &m.v;
        let mut d = DMatrix::zeros(n, n);
        let mut e_old = f64::INFINITY;
        for _ in 0..500 {
            let mut f = h.clone();
            for i in 0..n {
                for j in 0..n {
                    let mut g = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            g += d[(k, l)]
                                * (m.eri[((i * n + j) * n + k) * n + l]
                                    - 0.5 * m.eri[((i * n + k) * n + j) * n + l]);
                        }
                    }
                    f[(i, j)] += g;
                }
            }
            let e = 0.5 * d.component_mul(&(&h + &f)).sum() + self.nuclear_repulsion();
            let (_, c) = lowest_generalized(&f, &m.s);
            let co = c.columns(0, n_orb);
            d = (co * co.transpose()) * 2.0;
            if (e - e_old).abs() < 1e-13 {
                return e;
            }
            e_old = e;
        }
        e_old
    }
}

/// Ascending eigenpairs of `F C = S C e` via symmetric orthogonalisation.
pub fn lowest_generalized(f: &DMatrix<f64>, s: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let es = SymmetricEigen::new(s.clone());
    let x = &es.eigenvectors
        * DMatrix::from_diagonal(&es.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * es.eigenvectors.transpose();
    let fe = SymmetricEigen::new(&x * f * &x);
    let mut idx: Vec<usize> = (0..fe.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| fe.eigenvalues[a].total_cmp(&fe.eigenvalues[b]));
    let vals = idx.iter().map(|&i| fe.eigenvalues[i]).collect();
    let c = &x * DMatrix::from_fn(f.nrows(), f.ncols(), |r, c| fe.eigenvectors[(r, idx[c])]);
    (vals, c)
}
