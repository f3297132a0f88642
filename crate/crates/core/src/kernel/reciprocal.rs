use std::f64::consts::{E, PI};

use super::expsum::log_grid;
use crate::error::{invalid, Error, Result};

/// Default bound on the number of exponential terms.
pub const TERM_CAP: usize = 256;

/// `1/x ~ sum_k w_k exp(-lambda_k x)` on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReciprocalExpSum {
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
    pub rates: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ReciprocalExpSum {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.rates
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * (-l * x).exp())
            .sum()
    }

    pub fn max_relative_error(&self, samples: usize) -> f64 {
        log_grid(self.lo, self.hi, samples)
            .into_iter()
            .map(|x| (self.eval(x) * x - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn trapezoid(lo: f64, hi: f64, eps: f64, eta: f64, pad: f64) -> (Vec<f64>, Vec<f64>) {
    // 1/x = int_R exp(u - x e^u) du
    let u_lo = (0.25 * eps / hi).ln() - pad;
    let u_hi = ((4.0 / eps).ln() / lo).ln() + pad;
    let k_lo = (u_lo / eta).floor() as i64;
    let k_hi = (u_hi / eta).ceil() as i64;
    let mut rates = Vec::new();
    let mut weights = Vec::new();
    for k in k_lo..=k_hi {
        let l = (k as f64 * eta).exp();
        let w = eta * l;
        // largest relative contribution on [lo, hi] is at x = 1/l (clamped)
        let x = (1.0 / l).clamp(lo, hi);
        if w * x * (-l * x).exp() < 1e-3 * eps {
            continue;
        }
        rates.push(l);
        weights.push(w);
    }
    (rates, weights)
}

/// Exponential sum for `1/x` on `[lo, hi]` with relative error at most `eps`.
pub fn reciprocal_expsum(lo: f64, hi: f64, eps: f64) -> Result<ReciprocalExpSum> {
    reciprocal_expsum_capped(lo, hi, eps, TERM_CAP)
}

pub fn reciprocal_expsum_capped(
    lo: f64,
    hi: f64,
    eps: f64,
    cap: usize,
) -> Result<ReciprocalExpSum> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return invalid(format!("need 0 < lo <= hi, got [{lo}, {hi}]"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("accuracy must lie in (0, 1), got {eps}"));
    }
    if hi <= lo * (1.0 + 1e-12) {
        let l = 1.0 / lo;
        return Ok(ReciprocalExpSum {
            lo,
            hi,
            eps,
            rates: vec![l],
            weights: vec![E / lo],
        });
    }
    let mut eta = PI * PI / (4.0 / eps).ln();
    let mut pad = 0.0;
    let mut best = f64::INFINITY;
    for _ in 0..12 {
        let (rates, weights) = trapezoid(lo, hi, eps, eta, pad);
        if rates.len() > cap {
            break;
        }
        let s = ReciprocalExpSum {
            lo,
            hi,
            eps,
            rates,
            weights,
        };
        let err = s.max_relative_error(1000);
        if err <= eps {
            return Ok(s);
        }
        best = best.min(err);
        eta *= 0.85;
        pad += 0.5;
    }
    Err(Error::Unattainable {
        target: eps,
        achieved: best,
        cap,
    })
}
