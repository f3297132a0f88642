//! Windowed 1D linear convolution with a direct path for short vectors and a
//! zero-padded FFT path above [`FFT_THRESHOLD`].

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Operand length from which the FFT path is used.
pub const FFT_THRESHOLD: usize = 128;

/// Computes `out[i] = c[start + i]`, `i < len`, where `c = a * b` is the full
/// linear convolution of operands of lengths `la` and `lb`.
#[derive(Clone)]
pub struct ConvPlan {
    la: usize,
    lb: usize,
    start: usize,
    len: usize,
    fft: Option<FftPair>,
}

#[derive(Clone)]
struct FftPair {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Operand preprocessed for repeated use with one plan.
#[derive(Clone, Debug)]
pub enum Prepared {
    Direct(Vec<f64>),
    Spectrum(Vec<Complex<f64>>),
}

impl std::fmt::Debug for ConvPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvPlan")
            .field("la", &self.la)
            .field("lb", &self.lb)
            .field("start", &self.start)
            .field("len", &self.len)
            .field("fft_size", &self.fft.as_ref().map(|p| p.size))
            .finish()
    }
}

fn smooth_size(min: usize) -> usize {
    let mut best = min.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p3 = p5;
        while p3 < best {
            let mut v = p3;
            while v < min {
                v *= 2;
            }
            best = best.min(v);
            p3 *= 3;
        }
        p5 *= 5;
    }
    best
}

impl ConvPlan {
    pub fn new(la: usize, lb: usize, start: usize, len: usize) -> Self {
        let use_fft = la.max(lb) >= FFT_THRESHOLD;
        Self::build(la, lb, start, len, use_fft)
    }

    pub fn direct(la: usize, lb: usize, start: usize, len: usize) -> Self {
        Self::build(la, lb, start, len, false)
    }

    pub fn with_fft(la: usize, lb: usize, start: usize, len: usize) -> Self {
        Self::build(la, lb, start, len, true)
    }

    fn build(la: usize, lb: usize, start: usize, len: usize, use_fft: bool) -> Self {
        assert!(la > 0 && lb > 0, "empty convolution operand");
        let fft = use_fft.then(|| {
            let full = la + lb - 1;
            let size = smooth_size((start + len).max(full.saturating_sub(start)).max(1));
            let mut planner = FftPlanner::new();
            FftPair {
                size,
                forward: planner.plan_fft_forward(size),
                inverse: planner.plan_fft_inverse(size),
            }
        });
        Self {
            la,
            lb,
            start,
            len,
            fft,
        }
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    pub fn output_len(&self) -> usize {
        self.len
    }

    pub fn prepare(&self, x: &[f64]) -> Prepared {
        match &self.fft {
            None => Prepared::Direct(x.to_vec()),
            Some(p) => {
                let mut buf = vec![Complex::new(0.0, 0.0); p.size];
                for (b, v) in buf.iter_mut().zip(x) {
                    b.re = *v;
                }
                p.forward.process(&mut buf);
                Prepared::Spectrum(buf)
            }
        }
    }

    pub fn combine(&self, a: &Prepared, b: &Prepared, out: &mut [f64]) {
        assert_eq!(out.len(), self.len);
        match (a, b, &self.fft) {
            (Prepared::Direct(a), Prepared::Direct(b), None) => self.direct_into(a, b, out),
            (Prepared::Spectrum(fa), Prepared::Spectrum(fb), Some(p)) => {
                let mut buf: Vec<Complex<f64>> = fa.iter().zip(fb).map(|(x, y)| x * y).collect();
                p.inverse.process(&mut buf);
                let scale = 1.0 / p.size as f64;
                for (i, o) in out.iter_mut().enumerate() {
                    *o = buf[self.start + i].re * scale;
                }
            }
            _ => panic!("operands prepared with a different plan"),
        }
    }

    pub fn apply(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        assert_eq!(a.len(), self.la);
        assert_eq!(b.len(), self.lb);
        if self.fft.is_none() {
            self.direct_into(a, b, out);
        } else {
            self.combine(&self.prepare(a), &self.prepare(b), out);
        }
    }

    fn direct_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let m = self.start + i;
            // j ranges over a-indices with 0 <= m - j < lb
            let lo = (m + 1).saturating_sub(self.lb);
            let hi = m.min(self.la - 1);
            let mut s = 0.0;
            if lo <= hi {
                for j in lo..=hi {
                    s += a[j] * b[m - j];
                }
            }
            *o = s;
        }
    }
}

/// Central `n` entries of the full convolution of two length-`n` vectors.
pub fn convolve_central(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let plan = ConvPlan::new(n, b.len(), (n - 1) / 2, n);
    let mut out = vec![0.0; n];
    plan.apply(a, b, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        c
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(385), 400);
        assert_eq!(smooth_size(1025), 1080);
    }

    #[test]
    fn direct_and_fft_agree_with_full() {
        for (la, lb, start, len) in [
            (5, 5, 2, 5),
            (7, 14, 6, 7),
            (130, 260, 129, 130),
            (200, 200, 99, 200),
        ] {
            let a: Vec<f64> = (0..la).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
            let b: Vec<f64> = (0..lb).map(|i| ((i * 5 % 13) as f64).sin()).collect();
            let c = full(&a, &b);
            let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for plan in [
                ConvPlan::direct(la, lb, start, len),
                ConvPlan::with_fft(la, lb, start, len),
            ] {
                let mut out = vec![0.0; len];
                plan.apply(&a, &b, &mut out);
                for i in 0..len {
                    assert!(
                        (out[i] - c[start + i]).abs() <= 1e-12 * scale,
                        "{la} {lb} {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn impulse_is_identity() {
        let n = 9;
        let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut d = vec![0.0; n];
        d[n / 2] = 1.0;
        assert_eq!(convolve_central(&a, &d), a);
    }
}
