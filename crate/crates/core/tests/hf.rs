mod common;

use std::f64::consts::PI;

use common::analytic::{self, SGaussian};
use common::*;
use gridtensor::grid::Grid3;
use gridtensor::hf::*;
use gridtensor::kernel::KernelTensor;
use gridtensor::linalg::max_abs;
use gridtensor::tensor::{scalar_product, CanonicalTensor3};
use nalgebra::DMatrix;

/// `int (x-A)^i (x-B)^j exp(-a (x-A)^2 - b (x-B)^2) dx`, `i, j <= 1`.
fn overlap_1d(i: u8, j: u8, a: f64, ca: f64, b: f64, cb: f64) -> f64 {
    let p = a + b;
    let pc = (a * ca + b * cb) / p;
    let base = (-a * b / p * (ca - cb).powi(2)).exp() * (PI / p).sqrt();
    let (pa, pb) = (pc - ca, pc - cb);
    match (i, j) {
        (0, 0) => base,
        (1, 0) => base * pa,
        (0, 1) => base * pb,
        _ => base * (pa * pb + 0.5 / p),
    }
}

fn analytic_overlap(f: &SeparableBasisFunction, g: &SeparableBasisFunction) -> f64 {
    let raw = |f: &SeparableBasisFunction, g: &SeparableBasisFunction| {
        let mut s = 0.0;
        for (p, &a) in f.exponents.iter().enumerate() {
            for (q, &b) in g.exponents.iter().enumerate() {
                let w = f.coefficients[p] * g.coefficients[q];
                s += w
                    * (0..3)
                        .map(|l| {
                            overlap_1d(f.powers[l], g.powers[l], a, f.center[l], b, g.center[l])
                        })
                        .product::<f64>();
            }
        }
        s
    };
    raw(f, g) / (raw(f, f) * raw(g, g)).sqrt()
}

fn h2_kernel(bs: &BasisSet, eps: f64) -> KernelTensor {
    basis_kernel(bs, eps).unwrap()
}

#[test]
fn grid_overlap_matches_analytic() {
    let g = Grid3::cubic(8.0, 128).unwrap();
    let fs = vec![
        SeparableBasisFunction::new([0.1, -0.3, 0.2], [0, 0, 0], vec![1.3, 0.35], vec![0.4, 0.7])
            .unwrap(),
        SeparableBasisFunction::new([-0.5, 0.2, 0.0], [1, 0, 0], vec![0.9], vec![1.0]).unwrap(),
        SeparableBasisFunction::new([0.4, 0.4, -0.6], [0, 0, 1], vec![0.6, 0.2], vec![0.5, 0.5])
            .unwrap(),
        SeparableBasisFunction::s([1.0, 0.0, 0.5], 0.5).unwrap(),
    ];
    let bs = BasisSet::new(fs.clone(), g).unwrap();
    assert_eq!(bs.tensor(0).rank(), 2);
    let s = overlap_matrix(&bs);
    for i in 0..fs.len() {
        for j in 0..fs.len() {
            let exact = analytic_overlap(&fs[i], &fs[j]);
            assert!(
                (s[(i, j)] - exact).abs() < 1e-5,
                "S[{i},{j}] = {} vs {exact}",
                s[(i, j)]
            );
            assert_eq!(s[(i, j)], s[(j, i)]);
        }
    }
    let sys = h2_analytic().matrices();
    let s2 = overlap_matrix(&h2_basis(128));
    assert!(max_abs(&(s2 - sys.s)) < 1e-5);
}

#[test]
fn kinetic_converges_quadratically() {
    let alpha = 1.1;
    let mut errs = Vec::new();
    for n in [63, 127] {
        let g = Grid3::cubic(7.0, n).unwrap();
        let bs =
            BasisSet::new(vec![SeparableBasisFunction::s([0.0; 3], alpha).unwrap()], g).unwrap();
        let t = kinetic_matrix(&bs, MassMode::Lumped);
        let err = (t[(0, 0)] - 1.5 * alpha).abs() / (1.5 * alpha);
        errs.push(err);
        let exact = kinetic_matrix(&bs, MassMode::Exact)[(0, 0)];
        assert!((exact - 1.5 * alpha).abs() / (1.5 * alpha) < 0.05);
    }
    assert!(errs[0] < 0.02, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((3.5..4.5).contains(&ratio), "{errs:?}");
}

#[test]
fn h2_one_electron_matrices() {
    let sys = h2_analytic().matrices();
    let bs = h2_basis(128);
    let t = kinetic_matrix(&bs, MassMode::Lumped);
    assert_eq!(t, t.transpose());
    assert!(max_abs(&(&t - &sys.t)) < 2e-3);
    let kernel = h2_kernel(&bs, 1e-8);
    let v = nuclear_matrix(&bs, &h2_molecule(), &kernel).unwrap();
    assert!(v[(0, 0)] < 0.0 && v[(1, 1)] < 0.0);
    assert!((v[(0, 0)] - v[(1, 1)]).abs() < 1e-10, "swap symmetry");
    assert!(max_abs(&(&v - &sys.v)) / max_abs(&sys.v) < 1e-3);
    let pc = nuclear_potential(&h2_molecule(), &bs, &kernel).unwrap();
    assert_eq!(pc.rank(), 2 * kernel.rank());
}

#[test]
fn nuclear_attraction_single_center() {
    let g = Grid3::cubic(6.0, 255).unwrap();
    let f = SeparableBasisFunction::s([0.0; 3], 2.0).unwrap();
    let bs = BasisSet::new(vec![f], g).unwrap();
    let mol = Molecule::new(
        vec![Nucleus {
            z: 1.0,
            center: [0.0; 3],
        }],
        1,
    )
    .unwrap();
    let v = nuclear_matrix(&bs, &mol, &basis_kernel(&bs, 1e-8).unwrap()).unwrap()[(0, 0)];
    let a = SGaussian::new([0.0; 3], &[2.0], &[1.0]);
    let exact = analytic::nuclear(&a, &a, 1.0, [0.0; 3]);
    assert!(rel(v, exact) < 1e-3, "{v} vs {exact}");
}

#[test]
fn nucleus_off_grid_is_rejected() {
    let bs = h2_basis(33);
    let kernel = h2_kernel(&bs, 1e-6);
    let err = nuclear_matrix(&bs, &h2_molecule(), &kernel).unwrap_err();
    assert!(matches!(err, gridtensor::Error::SnapFailure { .. }));
}

#[test]
fn density_normalization_and_pointwise() {
    let bs = h2_basis(64);
    let s = overlap_matrix(&bs);
    let h = DMatrix::from_row_slice(2, 2, &[-1.0, -0.3, -0.3, -0.9]);
    let (_, c) = generalized_eigen(&h, &s).unwrap();
    let c_occ = c.columns(0, 1).into_owned();
    let theta = density_tensor(&bs, &c_occ, None).unwrap();
    let n = bs.grid().axes[0].n;
    let ones = CanonicalTensor3::rank_one(1.0, [&vec![1.0; n], &vec![1.0; n], &vec![1.0; n]]);
    let electrons = scalar_product(&theta, &ones).unwrap() * bs.grid().cell_volume();
    assert!((electrons - 2.0).abs() < 1e-4, "{electrons}");

    let small = h2_basis(32);
    let theta = density_tensor(&small, &c_occ, None).unwrap();
    let grid = small.grid();
    for idx in [[3, 16, 9], [15, 15, 15], [31, 0, 12], [16, 17, 20]] {
        let x = grid.point(idx);
        let phi: f64 = (0..2)
            .map(|mu| c_occ[(mu, 0)] * small.functions()[mu].eval(x))
            .sum();
        let got = theta.get(idx[0], idx[1], idx[2]);
        assert!((got - 2.0 * phi * phi).abs() < 1e-10 * (1.0 + got.abs()));
    }
    let single = BasisSet::new(vec![small.functions()[0].clone()], *grid).unwrap();
    let one = DMatrix::from_element(1, 1, 0.8);
    assert_eq!(density_tensor(&single, &one, None).unwrap().rank(), 1);
}

#[test]
fn hartree_potential_far_field() {
    let g = Grid3::cubic(10.0, 127).unwrap();
    let bs = BasisSet::new(vec![SeparableBasisFunction::s([0.0; 3], 1.5).unwrap()], g).unwrap();
    let d = DMatrix::from_element(1, 1, 1.0);
    let theta = density_tensor_from_matrix(&bs, &d, None).unwrap();
    let kernel = basis_kernel(&bs, 1e-8).unwrap();
    let v = hartree_potential(&theta, &kernel).unwrap();
    for idx in [[63, 63, 120], [10, 63, 63], [100, 100, 63], [5, 5, 5]] {
        let x = g.point(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let got = v.get(idx[0], idx[1], idx[2]);
        assert!(rel(got, 1.0 / r) < 1e-3, "r = {r}: {got} vs {}", 1.0 / r);
    }
}

struct Toy {
    bs: BasisSet,
    kernel: KernelTensor,
    fac: TeiFactorization,
    chol: TeiCholesky,
    dense: Vec<f64>,
}

fn toy() -> Toy {
    let bs = h2_basis(32);
    let kernel = h2_kernel(&bs, 1e-10);
    let fac = TeiFactorization::new(&bs, &kernel, 1e-10).unwrap();
    let chol = tei_cholesky(&fac, 1e-12).unwrap();
    let dense = dense::dense_tei(&bs);
    Toy {
        bs,
        kernel,
        fac,
        chol,
        dense,
    }
}

#[test]
fn factorized_tei_pipeline() {
    let t = toy();
    let nb = 2;
    for mu in 0..nb {
        for nu in 0..nb {
            for ka in 0..nb {
                for la in 0..nb {
                    let got = t.fac.entry(mu, nu, ka, la).unwrap();
                    let want = t.dense[(mu * nb + nu) * nb * nb + ka * nb + la];
                    assert!(rel(got, want) < 1e-7, "({mu}{nu}|{ka}{la}) {got} vs {want}");
                    assert!((got - t.fac.entry(nu, mu, ka, la).unwrap()).abs() < 1e-10);
                    assert!((got - t.fac.entry(ka, la, mu, nu).unwrap()).abs() < 1e-10);
                }
            }
        }
    }
    assert!(t.fac.diagonal().iter().all(|d| *d >= -1e-10));
    assert!(t.fac.entry(0, 0, 0, 2).is_err());

    let b = t.fac.dense().unwrap();
    let llt = &t.chol.l * t.chol.l.transpose();
    assert!(max_abs(&(&b - &llt)) <= 1e-6);
    let dense_b = DMatrix::from_row_slice(4, 4, &t.dense);
    assert!(max_abs(&(&dense_b - &llt)) / max_abs(&dense_b) <= 1e-6);
    let coarse = tei_cholesky(&t.fac, 1e-2).unwrap();
    assert!(coarse.rank() <= t.chol.rank());
}

#[test]
fn fock_from_factors_matches_quadruple_loops() {
    let t = toy();
    let mut rng = Lcg(11);
    let a = DMatrix::from_fn(2, 2, |_, _| rng.next());
    let d = &a * a.transpose();
    let (jq, kq) = quad_jk(&t.dense, &d);
    let j = coulomb_from_factors(&t.chol, &d).unwrap();
    let k = exchange_from_factors(&t.chol, &d).unwrap();
    assert!(max_abs(&(&j - &jq)) / max_abs(&jq) < 1e-6);
    // exact agreement with the factor's own B
    let b = t.fac.dense().unwrap();
    let (jb, kb) = quad_jk(b.transpose().as_slice(), &d);
    let llt = &t.chol.l * t.chol.l.transpose();
    let (jl, kl) = quad_jk(llt.transpose().as_slice(), &d);
    assert!(max_abs(&(&j - &jl)) < 1e-8 && max_abs(&(&k - &kl)) < 1e-8);
    assert!(max_abs(&(&j - &jb)) < 1e-8 && max_abs(&(&k - &kb)) < 1e-8);
    assert!(max_abs(&(&k - &kq)) / max_abs(&kq) < 1e-6);
    assert!((j.component_mul(&d)).sum() >= 0.0);
    let h = DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.2, -0.5]);
    assert_eq!(
        fock_from_factors(&h, &t.chol, &DMatrix::zeros(2, 2)).unwrap(),
        h
    );
    assert!(fock_from_factors(&h, &t.chol, &DMatrix::zeros(3, 3)).is_err());
}

#[test]
fn tensor_route_matches_tei_route() {
    let t = toy();
    let s = overlap_matrix(&t.bs);
    let h = DMatrix::from_row_slice(2, 2, &[-1.0, -0.3, -0.3, -0.9]);
    let (_, c) = generalized_eigen(&h, &s).unwrap();
    let c_occ = c.columns(0, 1).into_owned();
    let d = density_matrix(&c_occ);
    let theta = density_tensor_from_matrix(&t.bs, &d, None).unwrap();
    let j = coulomb_matrix(&t.bs, &hartree_potential(&theta, &t.kernel).unwrap()).unwrap();
    assert!(max_abs(&(&j - j.transpose())) < 1e-12);
    let k = exchange_matrix(&t.bs, &c_occ, &t.kernel).unwrap();
    assert!(max_abs(&(&k - k.transpose())) < 1e-12);
    let jf = coulomb_from_factors(&t.chol, &d).unwrap();
    let kf = exchange_from_factors(&t.chol, &d).unwrap();
    assert!(max_abs(&(&j - &jf)) < 1e-5, "{j} {jf}");
    assert!(max_abs(&(&k + &kf)) < 1e-5, "{k} {kf}");
    // brute-force exchange from the dense 6D integrals
    let (_, kq) = quad_jk(&t.dense, &d);
    assert!(max_abs(&(&k + &kq)) < 1e-6);
}

#[test]
fn density_fitting_ranks() {
    let g = Grid3::cubic(6.0, 64).unwrap();
    let one = BasisSet::new(
        vec![SeparableBasisFunction::s([0.3, 0.0, 0.0], 0.7).unwrap()],
        g,
    )
    .unwrap();
    let fits = tei_density_fitting(&one, 1e-8).unwrap();
    assert!(fits.iter().all(|f| f.rank() == 1));
    let f = SeparableBasisFunction::s([0.3, 0.0, 0.0], 0.7).unwrap();
    let f2 = SeparableBasisFunction::s([-0.4, 0.2, 0.1], 1.2).unwrap();
    let single = tei_density_fitting(
        &BasisSet::new(vec![f.clone(), f2.clone()], g).unwrap(),
        1e-8,
    )
    .unwrap();
    let dup = tei_density_fitting(
        &BasisSet::new(vec![f.clone(), f2.clone(), f], g).unwrap(),
        1e-8,
    )
    .unwrap();
    for l in 0..3 {
        assert_eq!(single[l].rank(), dup[l].rank());
    }

    // ten-function water-like set
    let mut funcs = Vec::new();
    for (c, exps) in [
        ([0.0, 0.0, 0.0], vec![5.0, 1.2, 0.3]),
        ([1.4, 1.1, 0.0], vec![1.0]),
        ([-1.4, 1.1, 0.0], vec![1.0]),
    ] {
        for &a in &exps {
            funcs.push(SeparableBasisFunction::s(c, a).unwrap());
        }
    }
    for l in 0..3u8 {
        let mut p = [0u8; 3];
        p[l as usize] = 1;
        funcs.push(SeparableBasisFunction::new([0.0; 3], p, vec![0.9], vec![1.0]).unwrap());
    }
    funcs.push(SeparableBasisFunction::s([0.0, 0.5, 0.0], 0.15).unwrap());
    funcs.push(SeparableBasisFunction::s([0.0, 0.0, 0.3], 2.0).unwrap());
    assert_eq!(funcs.len(), 10);
    let water = BasisSet::new(funcs, g).unwrap();
    let fits = tei_density_fitting(&water, 1e-6).unwrap();
    for (l, fit) in fits.iter().enumerate() {
        let gm = gridtensor::hf::tei::product_side_matrix(&water, l);
        let err = (&gm - &fit.u * fit.v.transpose()).norm() / gm.norm();
        assert!(err <= 1e-6, "axis {l}: {err}");
        assert!(fit.rank() <= 64);
    }
}

#[test]
fn single_function_cholesky() {
    let g = Grid3::cubic(5.0, 64).unwrap();
    let bs = BasisSet::new(vec![SeparableBasisFunction::s([0.0; 3], 0.8).unwrap()], g).unwrap();
    let kernel = basis_kernel(&bs, 1e-8).unwrap();
    let fac = TeiFactorization::new(&bs, &kernel, 1e-10).unwrap();
    let chol = tei_cholesky(&fac, 1e-12).unwrap();
    assert_eq!(chol.rank(), 1);
    let b = fac.entry(0, 0, 0, 0).unwrap();
    assert!((chol.l[(0, 0)] - b.sqrt()).abs() < 1e-14);
    // (ss|ss) = 2 sqrt(alpha / pi) for unit-norm s Gaussians
    assert!(
        rel(b, 2.0 * (0.8 / PI).sqrt()) < 2e-3,
        "{b} vs {}",
        2.0 * (0.8 / PI).sqrt()
    );
}

#[test]
fn h2_scf_matches_analytic_oracle() {
    let exact = h2_analytic().rhf_energy(1);
    let mut errs = Vec::new();
    for n in [128, 257] {
        let bs = h2_basis(n);
        let st = scf_solve(&h2_molecule(), &bs, &ScfConfig::default()).unwrap();
        assert!(st.converged);
        assert!(st.iterations() <= 40, "{} iterations", st.iterations());
        assert!(st.history.iter().all(|h| h.orthonormality <= 1e-10));
        let tail: Vec<f64> = st.history.iter().rev().take(6).map(|h| h.energy).collect();
        for w in tail.windows(3) {
            assert!((w[0] - w[1]).abs() <= (w[1] - w[2]).abs() + 1e-13);
        }
        errs.push((st.energy - exact).abs());
    }
    assert!(errs[0] <= 1e-3, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((3.0..5.0).contains(&ratio), "{errs:?}");
}

#[test]
fn tensor_route_scf_agrees() {
    let bs = h2_basis(128);
    let mol = h2_molecule();
    let a = scf_solve(&mol, &bs, &ScfConfig::default()).unwrap();
    let cfg = ScfConfig {
        route: FockRoute::Tensor,
        ..ScfConfig::default()
    };
    let b = scf_solve(&mol, &bs, &cfg).unwrap();
    assert!(b.converged);
    assert!(
        (a.energy - b.energy).abs() < 1e-6,
        "{} {}",
        a.energy,
        b.energy
    );
}

#[test]
fn hydrogen_atom_one_electron() {
    let exps = [0.1, 0.4, 1.6, 6.4];
    let g = Grid3::cubic(10.0, 255).unwrap();
    let funcs = exps
        .iter()
        .map(|&a| SeparableBasisFunction::s([0.0; 3], a).unwrap())
        .collect();
    let bs = BasisSet::new(funcs, g).unwrap();
    let mol = Molecule::new(
        vec![Nucleus {
            z: 1.0,
            center: [0.0; 3],
        }],
        1,
    )
    .unwrap();
    let kernel = basis_kernel(&bs, 1e-8).unwrap();
    let (s, h) = core_matrices(&mol, &bs, &kernel, MassMode::Lumped).unwrap();
    let (eps, c) = generalized_eigen(&h, &s).unwrap();
    assert!(max_abs(&(c.transpose() * &s * &c - DMatrix::identity(4, 4))) < 1e-10);
    let sys = analytic::System::new(
        exps.iter()
            .map(|&a| SGaussian::new([0.0; 3], &[a], &[1.0]))
            .collect(),
        vec![(1.0, [0.0; 3])],
    );
    let oracle = sys.one_electron_energy();
    assert!((oracle - -0.4998).abs() < 0.01);
    assert!((eps[0] - -0.4998).abs() < 0.01, "{}", eps[0]);
    assert!((eps[0] - oracle).abs() < 2e-3, "{} vs {oracle}", eps[0]);
}

#[test]
fn scf_rejects_bad_input() {
    let bs = h2_basis(32);
    let mol = Molecule::new(h2_molecule().nuclei, 3).unwrap();
    assert!(scf_solve(&mol, &bs, &ScfConfig::default()).is_err());
    let cfg = ScfConfig {
        max_iter: 0,
        ..ScfConfig::default()
    };
    assert!(scf_solve(&h2_molecule(), &bs, &cfg).is_err());
}
