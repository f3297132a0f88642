//! Drivers shared by the command-line tools and the acceptance suite.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::grid::Grid3;
use crate::kernel::{cube_average_inverse_r, KernelKind, KernelTensor};
use crate::qtt::tt_decompose;
use crate::reduce::hosvd_decay;
use crate::tensor::{convolve, CanonicalTensor3, DenseTensor3};

/// One probe of the kernel tensor against the cell-averaged and point `1/r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelProbe {
    pub r: f64,
    /// Cell average of `1/r`, what the discrete kernel represents.
    pub exact: f64,
    /// `h^-3` times the tensor entry.
    pub approx: f64,
    pub rel_err: f64,
    pub inverse_r: f64,
    pub rel_err_point: f64,
}

/// Newton kernel on the `n`-grid of half-width `half_width`, probed along
/// the axis, a face diagonal and the body diagonal from the centre.
pub fn kernel_scan(
    n: usize,
    half_width: f64,
    eps: f64,
) -> Result<(KernelTensor, Vec<KernelProbe>)> {
    let grid = Grid3::cubic(half_width, n)?;
    let kt = KernelTensor::for_grid(&grid, KernelKind::Newton, eps, false)?;
    let c = n / 2;
    let mut probes = Vec::new();
    for dir in [[1, 0, 0], [1, 1, 0], [1, 1, 1]] {
        for m in 0..n - c {
            let idx = [0, 1, 2].map(|l| c + dir[l] * m);
            let x = grid.point(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r < 0.5 * grid.h() {
                continue;
            }
            probes.push(kernel_probe(&kt, idx));
        }
    }
    probes.sort_by(|a, b| a.r.total_cmp(&b.r));
    Ok((kt, probes))
}

pub fn kernel_probe(kt: &KernelTensor, idx: [usize; 3]) -> KernelProbe {
    let x = kt.displacement(idx);
    let h = kt.grid.h();
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let exact = cube_average_inverse_r(x, h);
    let approx = kt.cell_average(idx);
    KernelProbe {
        r,
        exact,
        approx,
        rel_err: ((approx - exact) / exact).abs(),
        inverse_r: 1.0 / r,
        rel_err_point: (approx * r - 1.0).abs(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayFunction {
    Slater,
    Newton,
}

impl DecayFunction {
    fn eval(self, d: [f64; 3], h: f64) -> f64 {
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        match self {
            DecayFunction::Slater => (-r).exp(),
            DecayFunction::Newton if r < 2.0 * h => cube_average_inverse_r(d, h),
            DecayFunction::Newton => 1.0 / r,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayCurves {
    pub single: Vec<f64>,
    pub lattice: Vec<f64>,
}

/// HOSVD error curves for one centred potential and for its sum over a
/// centred `m x m x m` lattice with the given spacing.
pub fn tucker_decay(
    f: DecayFunction,
    n: usize,
    half_width: f64,
    rmax: usize,
    m: usize,
    spacing: f64,
) -> Result<DecayCurves> {
    if rmax == 0 || rmax > n {
        return invalid(format!("rmax must lie in 1..={n}"));
    }
    let grid = Grid3::cubic(half_width, n)?;
    let h = grid.h();
    let xs = grid.axes[0].coordinates();
    let single = DenseTensor3::from_fn([n; 3], |i, j, k| f.eval([xs[i], xs[j], xs[k]], h))?;
    let centers: Vec<f64> = (0..m)
        .map(|k| (k as f64 - 0.5 * (m as f64 - 1.0)) * spacing)
        .collect();
    let data: Vec<f64> = (0..n * n * n)
        .into_par_iter()
        .map(|o| {
            let p = [xs[o / (n * n)], xs[(o / n) % n], xs[o % n]];
            let mut s = 0.0;
            for a in &centers {
                for b in &centers {
                    for c in &centers {
                        s += f.eval([p[0] - a, p[1] - b, p[2] - c], h);
                    }
                }
            }
            s
        })
        .collect();
    let lattice = DenseTensor3::from_vec([n; 3], data)?;
    Ok(DecayCurves {
        single: hosvd_decay(&single, rmax)?,
        lattice: hosvd_decay(&lattice, rmax)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub seconds: f64,
    pub rank: usize,
    /// Time relative to the previous `n`.
    pub ratio: Option<f64>,
    pub dense_fft_seconds: Option<f64>,
}

/// Largest `n` for which the dense 3D FFT reference is timed.
pub const DENSE_FFT_MAX_N: usize = 128;

fn random_canonical(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> Result<CanonicalTensor3> {
    let terms: Vec<(f64, [Vec<f64>; 3])> = (0..rank)
        .map(|_| {
            (
                1.0,
                [0, 1, 2].map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()),
            )
        })
        .collect();
    CanonicalTensor3::from_terms([n; 3], &terms)
}

/// Best of `reps` timings of the canonical convolution for `n` doubling
/// from `nmin` up to `nmax`.
pub fn conv_bench(
    nmin: usize,
    nmax: usize,
    rank: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if nmin < 2 || nmax < nmin || rank == 0 || reps == 0 {
        return invalid("conv-bench needs 2 <= nmin <= nmax, rank >= 1 and reps >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<BenchRow> = Vec::new();
    let mut n = nmin;
    while n <= nmax {
        let a = random_canonical(n, rank, &mut rng)?;
        let b = random_canonical(n, rank, &mut rng)?;
        let h = 1.0 / n as f64;
        let mut best = f64::INFINITY;
        for _ in 0..reps {
            let t = Instant::now();
            std::hint::black_box(convolve(&a, &b, h)?);
            best = best.min(t.elapsed().as_secs_f64());
        }
        let dense_fft_seconds = if n <= DENSE_FFT_MAX_N {
            let (da, db) = (a.to_dense()?, b.to_dense()?);
            let t = Instant::now();
            std::hint::black_box(dense_fft_convolve(&da, &db, h));
            Some(t.elapsed().as_secs_f64())
        } else {
            None
        };
        let ratio = rows.last().map(|p| best / p.seconds);
        rows.push(BenchRow {
            n,
            seconds: best,
            rank,
            ratio,
            dense_fft_seconds,
        });
        n *= 2;
    }
    Ok(rows)
}

/// Central `n^3` block of the full 3D linear convolution via a padded 3D FFT.
pub fn dense_fft_convolve(a: &DenseTensor3, b: &DenseTensor3, h: f64) -> Vec<f64> {
    use rustfft::num_complex::Complex;
    use rustfft::FftPlanner;
    let n = a.dims()[0];
    let m = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let load = |t: &DenseTensor3| {
        let mut buf = vec![Complex::new(0.0, 0.0); m * m * m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    buf[(i * m + j) * m + k].re = t.get(i, j, k);
                }
            }
        }
        buf
    };
    let transform = |buf: &mut Vec<Complex<f64>>, fft: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        for line in buf.chunks_mut(m) {
            fft.process(line);
        }
        let mut tmp = vec![Complex::new(0.0, 0.0); m];
        for stride in [m, m * m] {
            for base in 0..m * m * m {
                if (base / stride) % m != 0 {
                    continue;
                }
                for (q, t) in tmp.iter_mut().enumerate() {
                    *t = buf[base + q * stride];
                }
                fft.process(&mut tmp);
                for (q, t) in tmp.iter().enumerate() {
                    buf[base + q * stride] = *t;
                }
            }
        }
    };
    let (mut fa, mut fb) = (load(a), load(b));
    transform(&mut fa, &fwd);
    transform(&mut fb, &fwd);
    fa.iter_mut().zip(&fb).for_each(|(x, y)| *x *= y);
    transform(&mut fa, &inv);
    let scale = h * h * h / (m * m * m) as f64;
    let s = (n - 1) / 2;
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push(fa[((i + s) * m + j + s) * m + k + s].re * scale);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QttFunction {
    Exp,
    Sin,
    Poly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QttRow {
    pub draw: usize,
    pub params: Vec<f64>,
    pub ranks: Vec<usize>,
    pub max_rank: usize,
}

/// TT ranks of `f(x_i)`, `x_i = i / 2^L`, for random parameter draws.
pub fn qtt_rank_table(
    f: QttFunction,
    levels: usize,
    eps: f64,
    draws: usize,
    seed: u64,
) -> Result<Vec<QttRow>> {
    if levels == 0 || levels > 24 {
        return invalid("levels must lie in 1..=24");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 1usize << levels;
    (0..draws)
        .map(|draw| {
            let params: Vec<f64> = match f {
                QttFunction::Exp => vec![rng.gen_range(-5.0..5.0), rng.gen_range(0.5..2.0)],
                QttFunction::Sin => vec![
                    rng.gen_range(1.0..40.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.5..2.0),
                ],
                QttFunction::Poly => (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            };
            let x: Vec<f64> = (0..size)
                .map(|i| {
                    let t = i as f64 / size as f64;
                    match f {
                        QttFunction::Exp => params[1] * (params[0] * t).exp(),
                        QttFunction::Sin => params[2] * (params[0] * t + params[1]).sin(),
                        QttFunction::Poly => params.iter().rev().fold(0.0, |acc, c| acc * t + c),
                    }
                })
                .collect();
            let img = tt_decompose(&x, eps)?;
            Ok(QttRow {
                draw,
                params,
                ranks: img.ranks(),
                max_rank: img.max_rank(),
            })
        })
        .collect()
}
