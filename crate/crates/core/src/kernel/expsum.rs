use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Largest quadrature size tried by [`ExpSum::for_accuracy`].
pub const MAX_M: usize = 128;

/// Radial kernel represented through a Laplace-Gauss integral
/// `f(r) = c int_0^inf w(t) exp(-r^2 t^2) dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelKind {
    /// `1/r`
    Newton,
    /// `exp(-kappa r) / r`
    Shielded { kappa: f64 },
    /// `1/r^p`, `p >= 1`
    PowerLaw { p: f64 },
}

impl KernelKind {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            KernelKind::Newton => 1.0 / r,
            KernelKind::Shielded { kappa } => (-kappa * r).exp() / r,
            KernelKind::PowerLaw { p } => r.powf(-p),
        }
    }

    fn prefactor(&self) -> f64 {
        match *self {
            KernelKind::Newton | KernelKind::Shielded { .. } => 2.0 / PI.sqrt(),
            KernelKind::PowerLaw { p } => 2.0 / libm::tgamma(0.5 * p),
        }
    }

    fn density(&self, t: f64) -> f64 {
        let t = t.abs();
        match *self {
            KernelKind::Newton => 1.0,
            KernelKind::Shielded { kappa } => {
                if t == 0.0 {
                    0.0
                } else {
                    (-kappa * kappa / (4.0 * t * t)).exp()
                }
            }
            KernelKind::PowerLaw { p } => t.powf(p - 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            KernelKind::Newton => Ok(()),
            KernelKind::Shielded { kappa } if kappa >= 0.0 && kappa.is_finite() => Ok(()),
            KernelKind::PowerLaw { p } if p >= 1.0 && p.is_finite() => Ok(()),
            k => invalid(format!("unsupported kernel parameters {k:?}")),
        }
    }
}

/// Change of variables applied before the trapezoidal (sinc) rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Substitution {
    /// `t = u`
    Identity,
    /// `t = sinh(u) / scale`, symmetric nodes over the whole line
    Sinh { scale: f64 },
    /// `t = exp(u) / scale`, for integrands not even in `t`
    Exp { scale: f64 },
}

/// `sum_{k=-M}^{M} a_k exp(-t_k^2 r^2)`, a rank-`2M+1` Gaussian sum.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSum {
    pub kind: KernelKind,
    pub m: usize,
    pub c0: f64,
    /// Quadrature step `C0 log(M) / M`.
    pub step: f64,
    pub substitution: Substitution,
    /// Weight calibration factor.
    pub s: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Sinc quadrature for `1/r` with `t_k = k h_M`, `h_M = C0 log(M)/M` and
/// the symmetric-sum factor `s = 1/2`.
pub fn make_expsum(m: usize, c0: f64) -> Result<ExpSum> {
    ExpSum::new(KernelKind::Newton, m, c0, Substitution::Identity, 0.5)
}

impl ExpSum {
    pub fn new(
        kind: KernelKind,
        m: usize,
        c0: f64,
        substitution: Substitution,
        s: f64,
    ) -> Result<Self> {
        kind.validate()?;
        if m == 0 {
            return invalid("quadrature size M must be at least 1");
        }
        if !(c0 > 0.0) {
            return invalid(format!("C0 must be positive, got {c0}"));
        }
        if let Substitution::Sinh { scale } | Substitution::Exp { scale } = substitution {
            if !(scale > 0.0) {
                return invalid("substitution scale must be positive");
            }
        }
        let step = c0 * (m as f64).ln() / m as f64;
        let mut out = Self {
            kind,
            m,
            c0,
            step,
            substitution,
            s,
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        out.rebuild();
        Ok(out)
    }

    fn rebuild(&mut self) {
        let pre = self.kind.prefactor();
        let m = self.m as i64;
        self.nodes.clear();
        self.weights.clear();
        for k in -m..=m {
            let u = k as f64 * self.step;
            let (t, jac) = match self.substitution {
                Substitution::Identity => (u, 1.0),
                Substitution::Sinh { scale } => (u.sinh() / scale, u.cosh() / scale),
                Substitution::Exp { scale } => (u.exp() / scale, u.exp() / scale),
            };
            self.nodes.push(t);
            self.weights
                .push(self.s * pre * self.step * jac * self.kind.density(t));
        }
    }

    /// Sinc points `u_k = k h_M` before substitution.
    pub fn sinc_points(&self) -> Vec<f64> {
        (-(self.m as i64)..=self.m as i64)
            .map(|k| k as f64 * self.step)
            .collect()
    }

    /// Gaussian exponents `t_k`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rank(&self) -> usize {
        self.nodes.len()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, a)| a * (-(t * r) * (t * r)).exp())
            .sum()
    }

    pub fn max_relative_error(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        log_grid(lo, hi, samples)
            .into_iter()
            .map(|r| {
                let f = self.kind.eval(r);
                ((self.eval(r) - f) / f).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sets `s` by least squares on the relative residual over `[lo, hi]`.
    pub fn calibrate_scale(&mut self, lo: f64, hi: f64) {
        let old = self.s;
        if old == 0.0 {
            return;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for r in log_grid(lo, hi, 200) {
            let g = self.eval(r) / old / self.kind.eval(r);
            num += g;
            den += g * g;
        }
        if den > 0.0 {
            self.s = num / den;
            self.rebuild();
        }
    }

    /// Substituted rule with `C0`, the substitution scale and `s` tuned to
    /// minimize the maximum relative error on `[lo, hi]`. Power-law kernels
    /// use the exponential substitution, the others `sinh`.
    pub fn calibrated(kind: KernelKind, m: usize, lo: f64, hi: f64) -> Result<Self> {
        check_range(lo, hi)?;
        let sub = |scale: f64| match kind {
            KernelKind::PowerLaw { .. } => Substitution::Exp { scale },
            _ => Substitution::Sinh { scale },
        };
        if m == 1 {
            let mut e = Self::new(kind, 1, 1.0, sub(lo), 0.5)?;
            e.calibrate_scale(lo, hi);
            return Ok(e);
        }
        let objective = |c0: f64, scale: f64| -> (f64, Option<ExpSum>) {
            match Self::new(kind, m, c0, sub(scale), 0.5) {
                Ok(mut e) => {
                    e.calibrate_scale(lo, hi);
                    (e.max_relative_error(lo, hi, 120), Some(e))
                }
                Err(_) => (f64::INFINITY, None),
            }
        };
        let (ls_lo, ls_hi) = (lo.ln(), (std::f64::consts::E * hi).ln());
        // wide ranges need nodes spanning roughly ln(hi / lo) in u
        let c_hi = 3.0f64.max(1.5 * (40.0 * hi / lo).ln() / (m as f64).ln());
        let mut best = (f64::INFINITY, 1.0, 0.0);
        for i in 0..12 {
            let c0 = 0.4 + (c_hi - 0.4) * i as f64 / 11.0;
            for j in 0..16 {
                let ls = ls_lo + (ls_hi - ls_lo) * j as f64 / 15.0;
                let (err, _) = objective(c0, ls.exp());
                if err < best.0 {
                    best = (err, c0, ls);
                }
            }
        }
        // pattern search around the best grid point
        let (mut dc, mut dl) = (0.2, 0.5 * (ls_hi - ls_lo) / 15.0);
        for _ in 0..40 {
            let mut improved = false;
            for (a, b) in [(dc, 0.0), (-dc, 0.0), (0.0, dl), (0.0, -dl)] {
                let (c0, ls) = (best.1 + a, best.2 + b);
                if c0 <= 0.05 {
                    continue;
                }
                let (err, _) = objective(c0, ls.exp());
                if err < best.0 {
                    best = (err, c0, ls);
                    improved = true;
                }
            }
            if !improved {
                dc *= 0.5;
                dl *= 0.5;
                if dc < 1e-4 {
                    break;
                }
            }
        }
        objective(best.1, best.2.exp())
            .1
            .ok_or_else(|| Error::Numerical("kernel calibration failed".into()))
    }

    /// Smallest calibrated rule reaching relative error `eps` on `[lo, hi]`.
    pub fn for_accuracy(kind: KernelKind, lo: f64, hi: f64, eps: f64) -> Result<Self> {
        check_range(lo, hi)?;
        if !(eps > 0.0) {
            return invalid("accuracy must be positive");
        }
        let mut best = f64::INFINITY;
        let mut attempt = |m: usize| -> Result<Option<ExpSum>> {
            let e = Self::calibrated(kind, m, lo, hi)?;
            let err = e.max_relative_error(lo, hi, 400);
            best = best.min(err);
            Ok((err <= eps).then_some(e))
        };
        let (mut fail, mut hit) = (1usize, None);
        let mut m = 4;
        while m <= MAX_M {
            if let Some(e) = attempt(m)? {
                hit = Some((m, e));
                break;
            }
            fail = m;
            m *= 2;
        }
        let Some((mut ok, mut found)) = hit else {
            return Err(Error::Unattainable {
                target: eps,
                achieved: best,
                cap: 2 * MAX_M + 1,
            });
        };
        while ok - fail > 1 {
            let mid = (ok + fail) / 2;
            match attempt(mid)? {
                Some(e) => {
                    ok = mid;
                    found = e;
                }
                None => fail = mid,
            }
        }
        Ok(found)
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return invalid(format!("need 0 < lo < hi, got [{lo}, {hi}]"));
    }
    Ok(())
}

pub(crate) fn log_grid(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    if samples < 2 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..samples)
        .map(|i| (a + (b - a) * i as f64 / (samples - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_term_rule() {
        let e = make_expsum(1, 1.0).unwrap();
        assert_eq!(e.rank(), 3);
        let h = e.step;
        assert_eq!(e.sinc_points(), vec![-h, 0.0, h]);
        assert_eq!(e.nodes(), &[-h, 0.0, h]);
    }

    #[test]
    fn weights_positive_and_symmetric() {
        let e = ExpSum::calibrated(KernelKind::Newton, 12, 0.1, 10.0).unwrap();
        let (t, a) = (e.nodes(), e.weights());
        for k in 0..e.rank() {
            assert!(a[k] > 0.0);
            assert_eq!(a[k], a[e.rank() - 1 - k]);
            assert_eq!(t[k], -t[e.rank() - 1 - k]);
        }
    }

    #[test]
    fn calibrated_newton_accuracy() {
        let e = ExpSum::calibrated(KernelKind::Newton, 32, 0.1, 10.0).unwrap();
        assert!(e.max_relative_error(0.1, 10.0, 1000) < 1e-8);
        assert!((e.s - 0.5).abs() < 0.05, "s = {}", e.s);
    }

    #[test]
    fn other_kernels() {
        for kind in [
            KernelKind::Shielded { kappa: 0.7 },
            KernelKind::PowerLaw { p: 2.0 },
            KernelKind::PowerLaw { p: 3.0 },
        ] {
            let e = ExpSum::for_accuracy(kind, 0.5, 20.0, 1e-6).unwrap();
            assert!(e.max_relative_error(0.5, 20.0, 1000) < 2e-6, "{kind:?}");
        }
        assert!(ExpSum::new(
            KernelKind::PowerLaw { p: 0.5 },
            4,
            1.0,
            Substitution::Identity,
            0.5
        )
        .is_err());
    }

    #[test]
    fn invalid_arguments() {
        assert!(make_expsum(0, 1.0).is_err());
        assert!(make_expsum(3, 0.0).is_err());
        assert!(ExpSum::calibrated(KernelKind::Newton, 8, 2.0, 1.0).is_err());
    }
}
