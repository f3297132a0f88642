//! HOSVD, RHOSVD, the ALS canonical-to-Tucker transform and Tucker-to-canonical
//! back-conversion, combined into canonical rank reduction.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::linalg::{eps_rank, left_singular, left_singular_product, left_singular_tall};
use crate::tensor::{scalar_product, CanonicalTensor3, DenseTensor3, TuckerTensor3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    Ranks([usize; 3]),
    Tolerance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionConfig {
    pub truncation: Truncation,
    pub max_sweeps: usize,
}

impl ReductionConfig {
    pub fn ranks(r: [usize; 3]) -> Self {
        Self {
            truncation: Truncation::Ranks(r),
            max_sweeps: 3,
        }
    }

    pub fn tolerance(eps: f64) -> Self {
        Self {
            truncation: Truncation::Tolerance(eps),
            max_sweeps: 3,
        }
    }

    pub fn with_sweeps(mut self, m: usize) -> Self {
        self.max_sweeps = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return invalid("at least one ALS sweep is required");
        }
        if let Truncation::Tolerance(e) = self.truncation {
            if !(e > 0.0) {
                return invalid(format!("tolerance must be positive, got {e}"));
            }
        }
        Ok(())
    }

    fn pick(&self, mode: usize, sigma: &[f64], cap: usize) -> (usize, bool) {
        match self.truncation {
            Truncation::Ranks(r) => (r[mode].min(cap), r[mode] > cap),
            Truncation::Tolerance(e) => (eps_rank(sigma, e).min(cap), false),
        }
    }
}

/// Diagnostics accompanying a Tucker approximation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReductionReport {
    /// Requested ranks exceeded the available mode sizes.
    pub clamped: bool,
    /// The ALS stage failed and the RHOSVD result was returned.
    pub fell_back: bool,
    /// Singular values of each mode from the last factor update.
    pub singular_values: [Vec<f64>; 3],
    /// Absolute reconstruction error after RHOSVD (index 0) and each sweep.
    pub errors: Vec<f64>,
    pub sweeps: usize,
}

/// Truncated HOSVD of a dense tensor.
pub fn hosvd(a: &DenseTensor3, cfg: &ReductionConfig) -> Result<TuckerTensor3> {
    hosvd_with_report(a, cfg).map(|(t, _)| t)
}

pub fn hosvd_with_report(
    a: &DenseTensor3,
    cfg: &ReductionConfig,
) -> Result<(TuckerTensor3, ReductionReport)> {
    cfg.validate()?;
    let mut report = ReductionReport::default();
    let mut z: Vec<DMatrix<f64>> = Vec::with_capacity(3);
    for mode in 0..3 {
        let (u, s) = left_singular(&a.unfold(mode))?;
        let cap = s.iter().filter(|v| **v > 0.0).count();
        let (r, clamped) = cfg.pick(mode, &s, cap.min(a.dims()[mode]));
        report.clamped |= clamped;
        z.push(u.columns(0, r).into_owned());
        report.singular_values[mode] = s;
    }
    let z: [DMatrix<f64>; 3] = [z[0].clone(), z[1].clone(), z[2].clone()];
    if z.iter().any(|m| m.ncols() == 0) {
        return Ok((TuckerTensor3::zeros(a.dims()), report));
    }
    let core = a
        .mode_product(0, &z[0].transpose())?
        .mode_product(1, &z[1].transpose())?
        .mode_product(2, &z[2].transpose())?;
    let t = TuckerTensor3::new(core, z)?;
    Ok((t, report))
}

/// Relative HOSVD errors `||A - A_r|| / ||A||` for equal ranks `r = 1..=rmax`,
/// from explicit reconstructions so that tiny errors are not lost to cancellation.
pub fn hosvd_decay(a: &DenseTensor3, rmax: usize) -> Result<Vec<f64>> {
    let nrm = a.norm();
    if nrm == 0.0 {
        return Ok(vec![0.0; rmax]);
    }
    let full = hosvd(a, &ReductionConfig::ranks([rmax; 3]))?;
    let mut out = Vec::with_capacity(rmax);
    for r in 1..=rmax {
        let u = [0, 1, 2].map(|l| {
            let f = full.factor(l);
            f.columns(0, r.min(f.ncols())).into_owned()
        });
        let approx = a
            .mode_product(0, &u[0].transpose())?
            .mode_product(1, &u[1].transpose())?
            .mode_product(2, &u[2].transpose())?
            .mode_product(0, &u[0])?
            .mode_product(1, &u[1])?
            .mode_product(2, &u[2])?;
        let diff: f64 = a
            .data()
            .iter()
            .zip(approx.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        out.push(diff.sqrt() / nrm);
    }
    Ok(out)
}

fn project_core(a: &CanonicalTensor3, z: &[DMatrix<f64>; 3]) -> Result<DenseTensor3> {
    let ranks = z.each_ref().map(|m| m.ncols());
    let mut core = DenseTensor3::zeros(ranks)?;
    let p = [0, 1, 2].map(|l| z[l].tr_mul(a.factor(l)));
    let [r1, r2, r3] = ranks;
    let w = a.weights();
    for q in 0..a.rank() {
        if w[q] == 0.0 {
            continue;
        }
        for i in 0..r1 {
            let x = w[q] * p[0][(i, q)];
            for j in 0..r2 {
                let y = x * p[1][(j, q)];
                for k in 0..r3 {
                    let o = core.offset(i, j, k);
                    core.data_mut()[o] += y * p[2][(k, q)];
                }
            }
        }
    }
    Ok(core)
}

/// RHOSVD: Tucker factors from the SVDs of the (normalized) side matrices.
pub fn rhosvd(a: &CanonicalTensor3, cfg: &ReductionConfig) -> Result<TuckerTensor3> {
    rhosvd_with_report(a, cfg).map(|(t, _)| t)
}

pub fn rhosvd_with_report(
    a: &CanonicalTensor3,
    cfg: &ReductionConfig,
) -> Result<(TuckerTensor3, ReductionReport)> {
    cfg.validate()?;
    let a = a.normalized().pruned();
    let mut report = ReductionReport::default();
    if a.rank() == 0 {
        return Ok((TuckerTensor3::zeros(a.dims()), report));
    }
    let mut z: Vec<DMatrix<f64>> = Vec::with_capacity(3);
    for mode in 0..3 {
        let (u, s) = left_singular_tall(a.factor(mode))?;
        let cap = a.dims()[mode].min(a.rank());
        let (r, clamped) = cfg.pick(mode, &s, cap);
        report.clamped |= clamped;
        z.push(u.columns(0, r.max(1)).into_owned());
        report.singular_values[mode] = s;
    }
    let z = [z[0].clone(), z[1].clone(), z[2].clone()];
    let core = project_core(&a, &z)?;
    let t = TuckerTensor3::new(core, z)?;
    let a2 = scalar_product(&a, &a)?;
    report.errors.push(fit_error(a2, t.core()));
    Ok((t, report))
}

fn fit_error(a2: f64, core: &DenseTensor3) -> f64 {
    (a2 - core.norm().powi(2)).max(0.0).sqrt()
}

/// ALS canonical-to-Tucker transform started from RHOSVD.
pub fn canonical_to_tucker(a: &CanonicalTensor3, cfg: &ReductionConfig) -> Result<TuckerTensor3> {
    canonical_to_tucker_with_report(a, cfg).map(|(t, _)| t)
}

pub fn canonical_to_tucker_with_report(
    a: &CanonicalTensor3,
    cfg: &ReductionConfig,
) -> Result<(TuckerTensor3, ReductionReport)> {
    cfg.validate()?;
    let (init, mut report) = rhosvd_with_report(a, cfg)?;
    if init.ranks().contains(&0) {
        return Ok((init, report));
    }
    let a = a.normalized().pruned();
    let a2 = scalar_product(&a, &a)?;
    match als_sweeps(&a, a2, &init, cfg, &mut report) {
        Ok(t) => Ok((t, report)),
        Err(_) => {
            report.fell_back = true;
            Ok((init, report))
        }
    }
}

fn als_sweeps(
    a: &CanonicalTensor3,
    a2: f64,
    init: &TuckerTensor3,
    cfg: &ReductionConfig,
    report: &mut ReductionReport,
) -> Result<TuckerTensor3> {
    let mut z = init.factors().clone();
    let mut ranks = init.ranks();
    let w = a.weights();
    let r = a.rank();
    let mut last = *report.errors.last().unwrap_or(&f64::INFINITY);
    for sweep in 0..cfg.max_sweeps {
        for mode in 0..3 {
            let (p, q) = match mode {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let up = z[p].tr_mul(a.factor(p));
            let uq = z[q].tr_mul(a.factor(q));
            let (rp, rq) = (z[p].ncols(), z[q].ncols());
            let wmat =
                DMatrix::from_fn(r, rp * rq, |k, c| w[k] * up[(c / rq, k)] * uq[(c % rq, k)]);
            let (u, s) = left_singular_product(a.factor(mode), &wmat)?;
            let cap = u.ncols().min(a.dims()[mode]);
            let (mut rk, clamped) = if sweep == 0 {
                cfg.pick(mode, &s, cap)
            } else {
                (ranks[mode].min(cap), false)
            };
            report.clamped |= clamped;
            rk = rk.max(1);
            ranks[mode] = rk;
            z[mode] = u.columns(0, rk).into_owned();
            report.singular_values[mode] = s;
        }
        let core = project_core(a, &z)?;
        let err = fit_error(a2, &core);
        report.errors.push(err);
        report.sweeps = sweep + 1;
        if (last - err).abs() <= 1e-14 * a2.sqrt() && sweep > 0 {
            break;
        }
        last = err;
    }
    let core = project_core(a, &z)?;
    TuckerTensor3::new(core, z)
}

/// Canonical form of a Tucker tensor by unfolding the core along the mode of
/// largest rank, giving at most `min(r1 r2, r1 r3, r2 r3)` terms.
pub fn tucker_to_canonical(t: &TuckerTensor3) -> Result<CanonicalTensor3> {
    let ranks = t.ranks();
    let dims = t.dims();
    if ranks.contains(&0) {
        return Ok(CanonicalTensor3::zeros(dims));
    }
    let m = (0..3).max_by_key(|&l| (ranks[l], l)).unwrap_or(2);
    let (p, q) = match m {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let core = t.core();
    let mut terms = Vec::with_capacity(ranks[p] * ranks[q]);
    for a in 0..ranks[p] {
        for b in 0..ranks[q] {
            let fiber: Vec<f64> = (0..ranks[m])
                .map(|c| {
                    let mut idx = [0usize; 3];
                    idx[p] = a;
                    idx[q] = b;
                    idx[m] = c;
                    core.get(idx[0], idx[1], idx[2])
                })
                .collect();
            if fiber.iter().all(|v| *v == 0.0) {
                continue;
            }
            let col_m = t.factor(m) * nalgebra::DVector::from_vec(fiber);
            let mut cols: [Vec<f64>; 3] = Default::default();
            cols[p] = t.factor(p).column(a).iter().copied().collect();
            cols[q] = t.factor(q).column(b).iter().copied().collect();
            cols[m] = col_m.iter().copied().collect();
            terms.push((1.0, cols));
        }
    }
    Ok(CanonicalTensor3::from_terms(dims, &terms)?.normalized())
}

const PARALLEL_TOL: f64 = 1e-13;

fn fingerprint(col: &[f64]) -> f64 {
    // signed projection on a fixed irrational ramp; parallel unit vectors
    // give equal magnitudes
    col.iter()
        .enumerate()
        .map(|(i, v)| v * (1.0 + (i as f64 * 0.618_033_988_749_895).fract()))
        .sum::<f64>()
        .abs()
}

/// Sign `s` with `x = s y` for unit vectors, if they are parallel.
fn parallel(x: &[f64], y: &[f64]) -> Option<f64> {
    let d: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let s = d.signum();
    let dev = x
        .iter()
        .zip(y)
        .fold(0.0f64, |m, (a, b)| m.max((a - s * b).abs()));
    (dev <= PARALLEL_TOL).then_some(s)
}

/// Merges terms that share parallel columns on two modes; exact up to roundoff.
pub fn merge_parallel_terms(a: &CanonicalTensor3) -> CanonicalTensor3 {
    let mut t = a.normalized().pruned();
    loop {
        let r = t.rank();
        if r < 2 {
            return t;
        }
        let fp: Vec<[f64; 3]> = (0..r)
            .map(|k| [0, 1, 2].map(|l| fingerprint(t.column(l, k))))
            .collect();
        let mut partner: Option<(usize, usize, usize, f64)> = None;
        'search: for (p, q, m) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            let mut order: Vec<usize> = (0..r).collect();
            order.sort_by(|&i, &j| fp[i][p].total_cmp(&fp[j][p]));
            for (s, &i) in order.iter().enumerate() {
                for &j in &order[s + 1..] {
                    if fp[j][p] - fp[i][p] > 1e-9 {
                        break;
                    }
                    if (fp[j][q] - fp[i][q]).abs() > 1e-9 {
                        continue;
                    }
                    if let (Some(sp), Some(sq)) = (
                        parallel(t.column(p, i), t.column(p, j)),
                        parallel(t.column(q, i), t.column(q, j)),
                    ) {
                        partner = Some((i.min(j), i.max(j), m, sp * sq));
                        break 'search;
                    }
                }
            }
        }
        let Some((i, j, m, sign)) = partner else {
            return t;
        };
        let (wi, wj) = (t.weights()[i], t.weights()[j]);
        let merged: Vec<f64> = t
            .column(m, i)
            .iter()
            .zip(t.column(m, j))
            .map(|(x, y)| wi * x + sign * wj * y)
            .collect();
        let (mut weights, mut factors) = t.into_parts();
        weights[i] = 1.0;
        factors[m].column_mut(i).copy_from_slice(&merged);
        let keep: Vec<usize> = (0..r).filter(|&k| k != j).collect();
        t = CanonicalTensor3::new(weights, factors)
            .expect("shapes preserved")
            .select(&keep)
            .normalized()
            .pruned();
    }
}

/// Canonical rank reduction: exact merging of redundant terms, then
/// C2T followed by T2C; the lower-rank of the two results is returned.
pub fn reduce_rank(a: &CanonicalTensor3, cfg: &ReductionConfig) -> Result<CanonicalTensor3> {
    cfg.validate()?;
    let merged = merge_parallel_terms(a);
    if merged.rank() <= 1 {
        return Ok(merged);
    }
    let t = canonical_to_tucker(&merged, cfg)?;
    let c = tucker_to_canonical(&t)?;
    Ok(if c.rank() < merged.rank() { c } else { merged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    fn random_canonical(dims: [usize; 3], r: usize, seed: u64) -> CanonicalTensor3 {
        let mut next = lcg(seed);
        let factors = dims.map(|n| DMatrix::from_fn(n, r, |_, _| next()));
        CanonicalTensor3::new((0..r).map(|_| 1.0 + next()).collect(), factors).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ReductionConfig::ranks([1, 1, 1])
            .with_sweeps(0)
            .validate()
            .is_err());
        assert!(ReductionConfig::tolerance(0.0).validate().is_err());
    }

    #[test]
    fn exact_rank_two_recovered() {
        let a = random_canonical([9, 8, 7], 2, 1);
        let d = a.to_dense().unwrap();
        for t in [
            hosvd(&d, &ReductionConfig::ranks([2, 2, 2])).unwrap(),
            rhosvd(&a, &ReductionConfig::ranks([2, 2, 2])).unwrap(),
            canonical_to_tucker(&a, &ReductionConfig::ranks([2, 2, 2])).unwrap(),
        ] {
            assert!(t.to_dense().unwrap().max_abs_diff(&d) < 1e-12 * d.norm());
            assert!(t.is_orthonormal(1e-12));
        }
    }

    #[test]
    fn zero_inputs_give_rank_zero() {
        let z = DenseTensor3::zeros([4, 4, 4]).unwrap();
        let t = hosvd(&z, &ReductionConfig::tolerance(1e-8)).unwrap();
        assert_eq!(t.ranks(), [0, 0, 0]);
        let c = CanonicalTensor3::zeros([4, 4, 4]);
        assert_eq!(
            canonical_to_tucker(&c, &ReductionConfig::tolerance(1e-8))
                .unwrap()
                .ranks(),
            [0, 0, 0]
        );
        assert_eq!(
            reduce_rank(&c, &ReductionConfig::tolerance(1e-8))
                .unwrap()
                .rank(),
            0
        );
    }

    #[test]
    fn clamping_reported() {
        let a = random_canonical([5, 5, 5], 3, 2);
        let (t, rep) = rhosvd_with_report(&a, &ReductionConfig::ranks([9, 2, 2])).unwrap();
        assert!(rep.clamped);
        assert_eq!(t.ranks(), [3, 2, 2]);
    }

    #[test]
    fn tucker_to_canonical_ranks() {
        let mut next = lcg(5);
        let core = DenseTensor3::from_fn([2, 3, 4], |_, _, _| next()).unwrap();
        let z = [2usize, 3, 4].map(|r| {
            let m = DMatrix::from_fn(10, r, |_, _| next());
            m.qr().q()
        });
        let t = TuckerTensor3::new(core, z).unwrap();
        let c = tucker_to_canonical(&t).unwrap();
        assert!(c.rank() <= 6);
        assert!(c.to_dense().unwrap().max_abs_diff(&t.to_dense().unwrap()) < 1e-12);
    }

    #[test]
    fn doubled_tensor_merges_back() {
        let a = random_canonical([6, 7, 8], 3, 9);
        let s = crate::tensor::add(&a, &a).unwrap();
        let r = reduce_rank(&s, &ReductionConfig::tolerance(1e-12)).unwrap();
        assert!(r.rank() <= 3);
        let two = a.scaled(2.0).to_dense().unwrap();
        assert!(r.to_dense().unwrap().max_abs_diff(&two) < 1e-12 * two.norm());
    }

    #[test]
    fn merge_handles_sign_flips() {
        let a = random_canonical([5, 5, 5], 1, 4);
        let (w, f) = a.clone().into_parts();
        let flipped =
            CanonicalTensor3::new(vec![w[0]], [-f[0].clone(), f[1].clone(), -f[2].clone()])
                .unwrap();
        let s = crate::tensor::add(&a, &flipped).unwrap();
        let m = merge_parallel_terms(&s);
        assert_eq!(m.rank(), 1);
        let d = a.scaled(2.0).to_dense().unwrap();
        assert!(m.to_dense().unwrap().max_abs_diff(&d) < 1e-13);
    }
}
