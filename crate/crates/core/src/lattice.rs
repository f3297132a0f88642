//! Assembled-vector lattice sums of a reference kernel and the interaction
//! energy of uniformly charged finite lattices.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid3, WindowMap};
use crate::kernel::{ExpSum, KernelKind, KernelTensor};
use crate::reduce::{reduce_rank, ReductionConfig};
use crate::tensor::{add, CanonicalTensor3, TuckerTensor3};

/// Largest number of ordered pairs the direct oracle will visit.
pub const PAIR_LIMIT: u128 = 2_000_000_000;

/// Rectangular block of lattice indices `lo..hi` (exclusive) per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    /// Excluded blocks subtract their nodes from an enclosing included block.
    pub include: bool,
    /// Overrides the lattice charge for this block.
    pub charge: Option<f64>,
}

impl Block {
    pub fn include(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self {
            lo,
            hi,
            include: true,
            charge: None,
        }
    }

    pub fn exclude(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self {
            lo,
            hi,
            include: false,
            charge: None,
        }
    }

    fn overlaps(&self, o: &Block) -> bool {
        (0..3).all(|l| self.lo[l] < o.hi[l] && o.lo[l] < self.hi[l])
    }

    fn contains(&self, o: &Block) -> bool {
        (0..3).all(|l| self.lo[l] <= o.lo[l] && o.hi[l] <= self.hi[l])
    }

    pub fn volume(&self) -> usize {
        (0..3).map(|l| self.hi[l] - self.lo[l]).product()
    }
}

/// Charges on the nodes `x_k = (k - (L-1)/2) b + shift h` of an
/// `L1 x L2 x L3` lattice, bound to a grid with `h = b / n0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub counts: [usize; 3],
    pub spacing: f64,
    pub charge: f64,
    pub n0: usize,
    /// Extra lattice periods of empty box on each side.
    pub padding: usize,
    /// Translation in grid steps.
    pub shift: [i64; 3],
    pub blocks: Vec<Block>,
}

impl LatticeSpec {
    pub fn new(counts: [usize; 3], spacing: f64, charge: f64, n0: usize) -> Result<Self> {
        let s = Self {
            counts,
            spacing,
            charge,
            n0,
            padding: 0,
            shift: [0; 3],
            blocks: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_blocks(mut self, blocks: Vec<Block>) -> Result<Self> {
        self.blocks = blocks;
        self.validate()?;
        Ok(self)
    }

    pub fn with_padding(mut self, padding: usize) -> Result<Self> {
        self.padding = padding;
        self.validate()?;
        Ok(self)
    }

    pub fn with_shift(mut self, shift: [i64; 3]) -> Result<Self> {
        self.shift = shift;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.contains(&0) {
            return invalid("lattice counts must be positive");
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return invalid("lattice spacing must be positive");
        }
        if self.n0 < 2 || self.n0 % 2 != 0 {
            return invalid(format!("n0 must be even and at least 2, got {}", self.n0));
        }
        let margin = (self.padding * self.n0 + self.n0 / 2) as i64;
        if self.shift.iter().any(|s| s.abs() > margin) {
            return Err(Error::OutOfDomain(format!(
                "shift {:?} leaves the box (margin {margin})",
                self.shift
            )));
        }
        self.resolve_blocks().map(|_| ())
    }

    pub fn h(&self) -> f64 {
        self.spacing / self.n0 as f64
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Grid with `n0 (L + 2 padding) + 1` nodes per axis.
    pub fn grid(&self) -> Result<Grid3> {
        Grid3::with_spacing(
            self.h(),
            self.counts.map(|l| self.n0 * (l + 2 * self.padding) + 1),
        )
    }

    /// Grid node index of lattice index `k` on `axis`.
    pub fn node_index(&self, axis: usize, k: usize) -> usize {
        let base = (k + self.padding) * self.n0 + self.n0 / 2;
        (base as i64 + self.shift[axis]) as usize
    }

    pub fn position(&self, k: [usize; 3]) -> [f64; 3] {
        [0, 1, 2].map(|l| {
            (k[l] as f64 - 0.5 * (self.counts[l] as f64 - 1.0)) * self.spacing
                + self.shift[l] as f64 * self.h()
        })
    }

    /// Blocks with defaults applied: the whole lattice when none are given.
    pub fn resolve_blocks(&self) -> Result<Vec<(Block, f64)>> {
        if self.blocks.is_empty() {
            return Ok(vec![(Block::include([0; 3], self.counts), self.charge)]);
        }
        for b in &self.blocks {
            if (0..3).any(|l| b.lo[l] >= b.hi[l] || b.hi[l] > self.counts[l]) {
                return invalid(format!("block {b:?} is empty or outside the lattice"));
            }
        }
        let inc: Vec<&Block> = self.blocks.iter().filter(|b| b.include).collect();
        let exc: Vec<&Block> = self.blocks.iter().filter(|b| !b.include).collect();
        for group in [&inc, &exc] {
            for (i, a) in group.iter().enumerate() {
                if group[i + 1..].iter().any(|b| a.overlaps(b)) {
                    return invalid(format!("block {a:?} overlaps another block"));
                }
            }
        }
        for e in &exc {
            if inc.iter().filter(|b| b.contains(e)).count() != 1 {
                return invalid(format!(
                    "excluded block {e:?} is not inside exactly one included block"
                ));
            }
        }
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                let q = b.charge.unwrap_or(self.charge);
                (*b, if b.include { q } else { -q })
            })
            .collect())
    }

    /// Charged nodes after resolving blocks, as `(lattice index, charge)`.
    pub fn charged_nodes(&self) -> Result<Vec<([usize; 3], f64)>> {
        let blocks = self.resolve_blocks()?;
        let mut out = Vec::new();
        for i in 0..self.counts[0] {
            for j in 0..self.counts[1] {
                for k in 0..self.counts[2] {
                    let p = [i, j, k];
                    let q: f64 = blocks
                        .iter()
                        .filter(|(b, _)| (0..3).all(|l| b.lo[l] <= p[l] && p[l] < b.hi[l]))
                        .map(|(_, q)| q)
                        .sum();
                    if q != 0.0 {
                        out.push((p, q));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Doubled-grid Newton reference kernel for the lattice grid.
pub fn reference_kernel(spec: &LatticeSpec, eps: f64) -> Result<KernelTensor> {
    KernelTensor::for_grid(&spec.grid()?, KernelKind::Newton, eps, true)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    /// Number of 1D window-and-add operations performed.
    pub window_applications: usize,
}

fn check_reference(spec: &LatticeSpec, reference: &KernelTensor) -> Result<Grid3> {
    let grid = spec.grid()?;
    if !reference.doubled || reference.tensor.dims() != grid.extents().map(|n| 2 * n) {
        return invalid("reference kernel must live on the doubled lattice grid");
    }
    Ok(grid)
}

fn assemble_axis(
    spec: &LatticeSpec,
    grid: &Grid3,
    axis: usize,
    columns: &DMatrix<f64>,
    range: (usize, usize),
    stats: &mut AssemblyStats,
) -> DMatrix<f64> {
    let n = grid.axes[axis].n;
    let mut out = DMatrix::zeros(n, columns.ncols());
    for q in 0..columns.ncols() {
        let col = &columns.as_slice()[q * 2 * n..(q + 1) * 2 * n];
        let mut acc = vec![0.0; n];
        for k in range.0..range.1 {
            let mut idx = [0usize; 3];
            idx[axis] = spec.node_index(axis, k);
            let w = WindowMap::for_node(grid, idx);
            for (a, v) in acc.iter_mut().zip(w.apply(axis, col)) {
                *a += v;
            }
            stats.window_applications += 1;
        }
        out.column_mut(q).copy_from_slice(&acc);
    }
    out
}

fn assemble_block(
    spec: &LatticeSpec,
    grid: &Grid3,
    reference: &KernelTensor,
    block: &Block,
    charge: f64,
    stats: &mut AssemblyStats,
) -> Result<CanonicalTensor3> {
    let factors = [0, 1, 2].map(|l| {
        assemble_axis(
            spec,
            grid,
            l,
            reference.tensor.factor(l),
            (block.lo[l], block.hi[l]),
            stats,
        )
    });
    let weights = reference
        .tensor
        .weights()
        .iter()
        .map(|w| w * charge)
        .collect();
    CanonicalTensor3::new(weights, factors)
}

/// Potential of the full rectangular lattice; rank equals the reference rank.
pub fn lattice_sum_canonical(
    spec: &LatticeSpec,
    reference: &KernelTensor,
) -> Result<(CanonicalTensor3, AssemblyStats)> {
    let grid = check_reference(spec, reference)?;
    let mut stats = AssemblyStats::default();
    let block = Block::include([0; 3], spec.counts);
    let t = assemble_block(spec, &grid, reference, &block, spec.charge, &mut stats)?;
    Ok((t, stats))
}

/// Sum over resolved blocks before any reduction; rank is `R` per block.
pub fn lattice_sum_blocks(
    spec: &LatticeSpec,
    reference: &KernelTensor,
) -> Result<(CanonicalTensor3, AssemblyStats)> {
    let grid = check_reference(spec, reference)?;
    let mut stats = AssemblyStats::default();
    let mut total = CanonicalTensor3::zeros(grid.extents());
    for (b, q) in spec.resolve_blocks()? {
        let t = assemble_block(spec, &grid, reference, &b, q, &mut stats)?;
        total = add(&total, &t)?;
    }
    Ok((total, stats))
}

/// Composite-geometry potential: block sums followed by rank reduction.
pub fn lattice_sum_composite(
    spec: &LatticeSpec,
    reference: &KernelTensor,
    cfg: &ReductionConfig,
) -> Result<CanonicalTensor3> {
    let (t, _) = lattice_sum_blocks(spec, reference)?;
    if spec.resolve_blocks()?.len() == 1 {
        return Ok(t);
    }
    reduce_rank(&t, cfg)
}

/// Lattice sum in Tucker form: windowed sums of the master side matrices
/// with the core left untouched.
pub fn lattice_sum_tucker(spec: &LatticeSpec, master: &TuckerTensor3) -> Result<TuckerTensor3> {
    let grid = spec.grid()?;
    if master.dims() != grid.extents().map(|n| 2 * n) {
        return invalid("master Tucker tensor must live on the doubled lattice grid");
    }
    let mut stats = AssemblyStats::default();
    let factors = [0, 1, 2].map(|l| {
        assemble_axis(
            spec,
            &grid,
            l,
            master.factor(l),
            (0, spec.counts[l]),
            &mut stats,
        )
    });
    let t = master.with_factors(factors)?;
    if spec.charge == 1.0 {
        return Ok(t);
    }
    // charge enters through the first side matrix so the core stays intact
    let mut f = t.factors().clone();
    f[0] *= spec.charge;
    t.with_factors(f)
}

/// Windowed single reference kernel centred on lattice node `k`.
pub fn windowed_kernel(
    spec: &LatticeSpec,
    reference: &KernelTensor,
    k: [usize; 3],
) -> Result<CanonicalTensor3> {
    let grid = check_reference(spec, reference)?;
    let idx = [0, 1, 2].map(|l| spec.node_index(l, k[l]));
    let w = WindowMap::for_node(&grid, idx);
    let factors = [0, 1, 2].map(|l| {
        let n = grid.axes[l].n;
        let f = reference.tensor.factor(l);
        DMatrix::from_fn(n, f.ncols(), |i, q| f[(w.offsets[l] + i, q)])
    });
    CanonicalTensor3::new(reference.tensor.weights().to_vec(), factors)
}

/// `sum_{d=-(L-1)}^{L-1} (L - |d|) f(d)` per axis and term.
fn traced_sums(
    counts: [usize; 3],
    rank: usize,
    value: impl Fn(usize, usize, i64) -> f64,
) -> Vec<[f64; 3]> {
    (0..rank)
        .map(|q| {
            [0, 1, 2].map(|l| {
                let ll = counts[l] as i64;
                (-(ll - 1)..ll)
                    .map(|d| (ll - d.abs()) as f64 * value(l, q, d))
                    .sum()
            })
        })
        .collect()
}

fn energy_from_traces(
    spec: &LatticeSpec,
    weights: &[f64],
    traced: &[[f64; 3]],
    self_term: f64,
    volume: f64,
) -> f64 {
    let total: f64 = weights
        .iter()
        .zip(traced)
        .map(|(w, t)| w * t[0] * t[1] * t[2])
        .sum();
    let l3 = spec.node_count() as f64;
    0.5 * spec.charge * spec.charge / volume * (total - l3 * self_term)
}

fn check_energy_spec(spec: &LatticeSpec) -> Result<()> {
    if !spec.blocks.is_empty() {
        return invalid("the energy evaluator handles uniform rectangular lattices only");
    }
    Ok(())
}

/// Interaction energy from the lattice-traced reference kernel:
/// `E = Z^2 h^-3 / 2 (<P_hat, 1> - L^3 P(0))`.
pub fn lattice_interaction_energy(spec: &LatticeSpec, reference: &KernelTensor) -> Result<f64> {
    check_energy_spec(spec)?;
    let grid = check_reference(spec, reference)?;
    let t = &reference.tensor;
    let origin = grid.axes.map(|a| a.n - 1);
    let n0 = spec.n0 as i64;
    let traced = traced_sums(spec.counts, t.rank(), |l, q, d| {
        t.factor(l)[((origin[l] as i64 + d * n0) as usize, q)]
    });
    let p0 = t.get(origin[0], origin[1], origin[2]);
    Ok(energy_from_traces(
        spec,
        t.weights(),
        &traced,
        p0,
        grid.cell_volume(),
    ))
}

/// As [`lattice_interaction_energy`], evaluating the kernel factors only at
/// the `2L - 1` lattice displacements per axis instead of the whole grid.
pub fn lattice_energy(spec: &LatticeSpec, eps: f64) -> Result<f64> {
    check_energy_spec(spec)?;
    let h = spec.h();
    let reach = spec
        .counts
        .iter()
        .map(|&l| ((l as f64) * spec.spacing).powi(2))
        .sum::<f64>()
        .sqrt();
    let es = ExpSum::for_accuracy(
        KernelKind::Newton,
        0.5 * spec.spacing.min(reach),
        reach.max(spec.spacing),
        eps,
    )?;
    lattice_energy_with(spec, &es, h)
}

pub fn lattice_energy_with(spec: &LatticeSpec, es: &ExpSum, h: f64) -> Result<f64> {
    let nodes = es.nodes();
    let a = es.weights();
    let cell = |t: f64, x: f64| crate::kernel::cell_integral(t, x - 0.5 * h, x + 0.5 * h);
    let traced: Vec<[f64; 3]> = (0..nodes.len())
        .into_par_iter()
        .map(|q| {
            [0, 1, 2].map(|l| {
                let ll = spec.counts[l] as i64;
                (-(ll - 1)..ll)
                    .map(|d| (ll - d.abs()) as f64 * cell(nodes[q], d as f64 * spec.spacing))
                    .sum()
            })
        })
        .collect();
    let p0: f64 = (0..nodes.len())
        .map(|q| a[q] * cell(nodes[q], 0.0).powi(3))
        .sum();
    Ok(energy_from_traces(spec, a, &traced, p0, h * h * h))
}

#[derive(Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `1/2 sum_{j != k} Z_j Z_k / |x_j - x_k|` by direct compensated summation.
pub fn direct_energy_oracle(spec: &LatticeSpec) -> Result<f64> {
    let nodes = spec.charged_nodes()?;
    let n = nodes.len() as u128;
    let pairs = n * n.saturating_sub(1);
    if pairs > PAIR_LIMIT {
        return Err(Error::PairGuard {
            pairs,
            limit: PAIR_LIMIT,
        });
    }
    let pos: Vec<([f64; 3], f64)> = nodes.iter().map(|(k, q)| (spec.position(*k), *q)).collect();
    let rows: Vec<f64> = (0..pos.len())
        .into_par_iter()
        .map(|j| {
            let (xj, qj) = pos[j];
            let mut acc = Neumaier::default();
            for &(xk, qk) in &pos[j + 1..] {
                let d =
                    ((xj[0] - xk[0]).powi(2) + (xj[1] - xk[1]).powi(2) + (xj[2] - xk[2]).powi(2))
                        .sqrt();
                acc.add(qj * qk / d);
            }
            acc.value()
        })
        .collect();
    let mut total = Neumaier::default();
    for r in rows {
        total.add(r);
    }
    Ok(total.value())
}
