use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::output::{num, Metadata};
use super::{CliError, CliResult, Counts, DecayFn, MassArg, QttFn, RouteArg, RunConfig};
use crate::experiments::{self, DecayFunction, QttFunction};
use crate::grid::Grid3;
use crate::hf::io::{parse_basis, parse_geometry, place_basis};
use crate::hf::{
    basis_kernel, scf_solve, tei_cholesky, BasisSet, FockRoute, MassMode, Molecule, ScfConfig,
    TeiFactorization,
};
use crate::lattice::{direct_energy_oracle, lattice_energy, LatticeSpec};
use crate::mp2::{mo_transform_cholesky, mp2_energy, MoSpace, Mp2Mode, DEFAULT_EXPSUM_EPS};

/// Flag values win over the config table, which wins over defaults.
macro_rules! mergeable {
    ($t:ident { $($f:ident),* } flags { $($b:ident),* }) => {
        impl $t {
            pub fn merge(self, base: Option<Self>) -> Self {
                let base = base.unwrap_or_default();
                Self { $($f: self.$f.or(base.$f),)* $($b: self.$b || base.$b,)* }
            }
        }
    };
}

fn need<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{flag} (flag or config entry)")))
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct KernelArgs {
    /// Grid points per axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Half-width of the cubic box [default: 20].
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub half_width: Option<f64>,
    /// Relative accuracy of the exponential sum [default: 1e-6].
    #[arg(long)]
    pub eps: Option<f64>,
}
mergeable!(KernelArgs { n, half_width, eps } flags {});

pub fn cmd_kernel(rc: &RunConfig, a: KernelArgs, out: &mut dyn Write) -> CliResult<()> {
    let n = need(a.n, "n")?;
    let half_width = a.half_width.unwrap_or(20.0);
    let eps = a.eps.unwrap_or(1e-6);
    let (kt, probes) = experiments::kernel_scan(n, half_width, eps)?;
    let settings = KernelArgs {
        n: Some(n),
        half_width: Some(half_width),
        eps: Some(eps),
    };
    let meta = Metadata::new(rc.command, &settings, rc.seed, rc.threads).tolerance("eps", eps);
    let rank = kt.rank().to_string();
    let rows: Vec<Vec<String>> = probes
        .iter()
        .map(|p| {
            vec![
                num(p.r),
                num(p.exact),
                num(p.approx),
                num(p.rel_err),
                num(p.inverse_r),
                num(p.rel_err_point),
                rank.clone(),
            ]
        })
        .collect();
    rc.emit(
        out,
        "kernel",
        &meta,
        &[
            "r",
            "exact",
            "approx",
            "rel_err",
            "inverse_r",
            "rel_err_point",
            "rank",
        ],
        &rows,
    )
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TuckerDecayArgs {
    #[arg(long, value_enum)]
    pub function: Option<DecayFn>,
    /// Grid points per axis [default: 64].
    #[arg(long)]
    pub n: Option<usize>,
    /// Largest Tucker rank [default: 15].
    #[arg(long)]
    pub rmax: Option<usize>,
    /// Half-width of the cubic box [default: 10].
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub half_width: Option<f64>,
    /// Centres per axis of the lattice sum [default: 8].
    #[arg(long)]
    pub lattice: Option<usize>,
    /// Distance between lattice centres [default: 2].
    #[arg(long)]
    pub spacing: Option<f64>,
}
mergeable!(TuckerDecayArgs { function, n, rmax, half_width, lattice, spacing } flags {});

pub fn cmd_tucker_decay(rc: &RunConfig, a: TuckerDecayArgs, out: &mut dyn Write) -> CliResult<()> {
    let settings = TuckerDecayArgs {
        function: Some(need(a.function, "function")?),
        n: Some(a.n.unwrap_or(64)),
        rmax: Some(a.rmax.unwrap_or(15)),
        half_width: Some(a.half_width.unwrap_or(10.0)),
        lattice: Some(a.lattice.unwrap_or(8)),
        spacing: Some(a.spacing.unwrap_or(2.0)),
    };
    let f = match settings.function {
        Some(DecayFn::Newton) => DecayFunction::Newton,
        _ => DecayFunction::Slater,
    };
    let curves = experiments::tucker_decay(
        f,
        settings.n.unwrap_or_default(),
        settings.half_width.unwrap_or_default(),
        settings.rmax.unwrap_or_default(),
        settings.lattice.unwrap_or_default(),
        settings.spacing.unwrap_or_default(),
    )?;
    let meta = Metadata::new(rc.command, &settings, rc.seed, rc.threads);
    let rows: Vec<Vec<String>> = (0..curves.single.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                num(curves.single[i]),
                num(curves.lattice[i]),
            ]
        })
        .collect();
    rc.emit(
        out,
        "tucker-decay",
        &meta,
        &["r", "e_fn_single", "e_fn_lattice"],
        &rows,
    )
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConvBenchArgs {
    /// Smallest grid size [default: 128].
    #[arg(long)]
    pub nmin: Option<usize>,
    /// Largest grid size [default: 512].
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Canonical rank of both operands [default: 10].
    #[arg(long)]
    pub rank: Option<usize>,
    /// Timings per size; the best is reported [default: 3].
    #[arg(long)]
    pub reps: Option<usize>,
}
mergeable!(ConvBenchArgs { nmin, nmax, rank, reps } flags {});

/// Allowed growth of the convolution time per doubling of `n`.
pub const CONV_RATIO_BOUND: f64 = 4.0;

pub fn cmd_conv_bench(
    rc: &RunConfig,
    a: ConvBenchArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let settings = ConvBenchArgs {
        nmin: Some(a.nmin.unwrap_or(128)),
        nmax: Some(a.nmax.unwrap_or(512)),
        rank: Some(a.rank.unwrap_or(10)),
        reps: Some(a.reps.unwrap_or(3)),
    };
    let rows = experiments::conv_bench(
        settings.nmin.unwrap_or_default(),
        settings.nmax.unwrap_or_default(),
        settings.rank.unwrap_or_default(),
        settings.reps.unwrap_or_default(),
        rc.seed,
    )?;
    for r in rows
        .iter()
        .filter(|r| r.ratio.is_some_and(|q| q > CONV_RATIO_BOUND))
    {
        writeln!(
            err,
            "warning: time ratio {:.2} at n = {} exceeds {CONV_RATIO_BOUND}",
            r.ratio.unwrap_or_default(),
            r.n
        )?;
    }
    let meta = Metadata::new(rc.command, &settings, rc.seed, rc.threads)
        .tolerance("ratio-bound", CONV_RATIO_BOUND);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.seconds),
                r.rank.to_string(),
                r.ratio.map(num).unwrap_or_default(),
                r.dense_fft_seconds.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    rc.emit(
        out,
        "conv-bench",
        &meta,
        &["n", "seconds", "rank", "ratio", "dense_fft_seconds"],
        &table,
    )
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct HfArgs {
    /// Lines of `Z x y z` in bohr.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Per-element shell blocks.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Half-width of the cubic box.
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub half_width: Option<f64>,
    /// Append the MP2 correlation energy.
    #[arg(long)]
    #[serde(default)]
    pub mp2: bool,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Convergence threshold on the energy change.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub mixing: Option<f64>,
    #[arg(long)]
    pub kernel_eps: Option<f64>,
    #[arg(long)]
    pub fit_eps: Option<f64>,
    #[arg(long)]
    pub chol_eps: Option<f64>,
    #[arg(long)]
    pub mp2_eps: Option<f64>,
    #[arg(long, value_enum)]
    pub route: Option<RouteArg>,
    #[arg(long, value_enum)]
    pub mass: Option<MassArg>,
}
mergeable!(HfArgs { geometry, basis, n, half_width, max_iter, tol, mixing, kernel_eps, fit_eps, chol_eps, mp2_eps, route, mass } flags { mp2 });

impl HfArgs {
    /// Resolves file paths relative to the directory of the config file.
    pub fn rebase(mut self, dir: &Path) -> Self {
        self.geometry = self.geometry.map(|p| dir.join(p));
        self.basis = self.basis.map(|p| dir.join(p));
        self
    }

    pub fn scf_config(&self) -> ScfConfig {
        let d = ScfConfig::default();
        ScfConfig {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol.unwrap_or(d.tol),
            mixing: self.mixing.unwrap_or(d.mixing),
            kernel_eps: self.kernel_eps.unwrap_or(d.kernel_eps),
            fit_eps: self.fit_eps.unwrap_or(d.fit_eps),
            chol_eps: self.chol_eps.unwrap_or(d.chol_eps),
            mass: match self.mass {
                Some(MassArg::Exact) => MassMode::Exact,
                Some(MassArg::Lumped) => MassMode::Lumped,
                None => d.mass,
            },
            route: match self.route {
                Some(RouteArg::Tensor) => FockRoute::Tensor,
                Some(RouteArg::Factorized) => FockRoute::Factorized,
                None => d.route,
            },
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn matrix_rows(name: &str, m: &nalgebra::DMatrix<f64>, rows: &mut Vec<Vec<String>>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            rows.push(vec![
                name.to_owned(),
                i.to_string(),
                j.to_string(),
                num(m[(i, j)]),
            ]);
        }
    }
}

pub fn cmd_hf(rc: &RunConfig, a: HfArgs, out: &mut dyn Write) -> CliResult<()> {
    let geometry = need(a.geometry.clone(), "geometry")?;
    let basis_path = need(a.basis.clone(), "basis")?;
    let n = need(a.n, "n")?;
    let half_width = need(a.half_width, "box")?;
    let cfg = a.scf_config();
    cfg.validate()?;
    let mp2_eps = a.mp2_eps.unwrap_or(DEFAULT_EXPSUM_EPS);

    let nuclei = parse_geometry(&read(&geometry)?)?;
    let basis = parse_basis(&read(&basis_path)?)?;
    let placed = place_basis(&nuclei, &basis)?;
    let mol = Molecule::neutral(nuclei)?;
    let bs = BasisSet::from_shells(&placed, Grid3::cubic(half_width, n)?)?;

    let t0 = Instant::now();
    let st = scf_solve(&mol, &bs, &cfg)?;
    let scf_seconds = t0.elapsed().as_secs_f64();

    let mut report = vec![
        ("total_energy", num(st.energy)),
        ("electronic_energy", num(st.electronic_energy())),
        ("nuclear_repulsion", num(st.nuclear_repulsion)),
        ("iterations", st.iterations().to_string()),
        ("converged", st.converged.to_string()),
        ("basis_functions", bs.len().to_string()),
        ("occupied_orbitals", st.n_orb.to_string()),
        ("homo", num(st.orbital_energies[st.n_orb - 1])),
    ];
    if let Some(e) = st.orbital_energies.get(st.n_orb) {
        report.push(("lumo", num(*e)));
    }
    report.push(("scf_seconds", num(scf_seconds)));

    if a.mp2 && st.converged {
        let t1 = Instant::now();
        let chol = match &st.tei {
            Some(c) => c.clone(),
            None => {
                let kernel = basis_kernel(&bs, cfg.kernel_eps)?;
                tei_cholesky(
                    &TeiFactorization::new(&bs, &kernel, cfg.fit_eps)?,
                    cfg.chol_eps,
                )?
            }
        };
        let mos = MoSpace::new(st.orbital_energies.clone(), st.n_orb, st.c.clone())?;
        let mo = mo_transform_cholesky(&chol, &mos)?;
        let e2 = mp2_energy(&mo, &mos, Mp2Mode::Factorized { eps: mp2_eps })?;
        report.push(("mp2_energy", num(e2)));
        report.push(("total_energy_mp2", num(st.energy + e2)));
        report.push(("mp2_seconds", num(t1.elapsed().as_secs_f64())));
    }

    let settings = HfArgs {
        n: Some(n),
        half_width: Some(half_width),
        mp2_eps: Some(mp2_eps),
        ..a
    };
    let mut meta = Metadata::new(rc.command, &(&settings, &cfg), rc.seed, rc.threads)
        .tolerance("tol", cfg.tol)
        .tolerance("kernel_eps", cfg.kernel_eps)
        .tolerance("fit_eps", cfg.fit_eps)
        .tolerance("chol_eps", cfg.chol_eps);
    if a.mp2 {
        meta = meta.tolerance("mp2_eps", mp2_eps);
    }
    let report_rows: Vec<Vec<String>> = report
        .into_iter()
        .map(|(k, v)| vec![k.to_owned(), v])
        .collect();
    rc.emit(out, "hf", &meta, &["quantity", "value"], &report_rows)?;
    if rc.out.is_some() {
        let iters: Vec<Vec<String>> = st
            .history
            .iter()
            .map(|h| {
                vec![
                    h.iteration.to_string(),
                    num(h.energy),
                    num(h.delta_e),
                    num(h.density_change),
                    num(h.orthonormality),
                ]
            })
            .collect();
        rc.emit(
            out,
            "hf-iterations",
            &meta,
            &[
                "iteration",
                "energy",
                "delta_e",
                "density_change",
                "orthonormality",
            ],
            &iters,
        )?;
        let mut mats = Vec::new();
        matrix_rows("overlap", &st.s, &mut mats);
        matrix_rows("core_hamiltonian", &st.h_core, &mut mats);
        matrix_rows("fock", &st.fock, &mut mats);
        matrix_rows("density", &st.d, &mut mats);
        matrix_rows("coefficients", &st.c, &mut mats);
        for (i, e) in st.orbital_energies.iter().enumerate() {
            mats.push(vec![
                "orbital_energies".into(),
                i.to_string(),
                "0".into(),
                num(*e),
            ]);
        }
        rc.emit(
            out,
            "hf-matrices",
            &meta,
            &["matrix", "row", "col", "value"],
            &mats,
        )?;
    }
    if !st.converged {
        return Err(CliError::NotConverged(st.iterations()));
    }
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct LatticeArgs {
    /// Charges per axis: `N` or `a,b,c`.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<Counts>,
    /// Distance between neighbouring charges in bohr [default: 2].
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Charge of every site [default: 1].
    #[arg(long = "Z")]
    #[serde(rename = "Z")]
    pub z: Option<f64>,
    /// Grid intervals per unit cell, even [default: 64].
    #[arg(long)]
    pub n0: Option<usize>,
    /// Accuracy of the kernel expansion [default: 1e-8].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Also evaluate the direct pair sum.
    #[arg(long)]
    #[serde(default)]
    pub oracle: bool,
}
mergeable!(LatticeArgs { l, spacing, z, n0, eps } flags { oracle });

pub fn cmd_lattice_energy(rc: &RunConfig, a: LatticeArgs, out: &mut dyn Write) -> CliResult<()> {
    let counts = need(a.l, "L")?;
    let settings = LatticeArgs {
        l: Some(counts),
        spacing: Some(a.spacing.unwrap_or(2.0)),
        z: Some(a.z.unwrap_or(1.0)),
        n0: Some(a.n0.unwrap_or(64)),
        eps: Some(a.eps.unwrap_or(1e-8)),
        oracle: a.oracle,
    };
    let eps = settings.eps.unwrap_or_default();
    let spec = LatticeSpec::new(
        counts.0,
        settings.spacing.unwrap_or_default(),
        settings.z.unwrap_or_default(),
        settings.n0.unwrap_or_default(),
    )?;
    let t0 = Instant::now();
    let energy = lattice_energy(&spec, eps)?;
    let seconds = t0.elapsed().as_secs_f64();
    let mut header = vec!["L", "n0", "spacing", "Z", "energy", "seconds"];
    let mut row = vec![
        counts.to_string(),
        spec.n0.to_string(),
        num(spec.spacing),
        num(spec.charge),
        num(energy),
        num(seconds),
    ];
    if a.oracle {
        let t1 = Instant::now();
        let direct = direct_energy_oracle(&spec)?;
        let oracle_seconds = t1.elapsed().as_secs_f64();
        header.extend(["oracle_energy", "oracle_seconds", "rel_dev"]);
        row.extend([
            num(direct),
            num(oracle_seconds),
            num(((energy - direct) / direct).abs()),
        ]);
    }
    let meta = Metadata::new(rc.command, &settings, rc.seed, rc.threads).tolerance("eps", eps);
    rc.emit(out, "lattice-energy", &meta, &header, &[row])
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct QttArgs {
    #[arg(long, value_enum)]
    pub function: Option<QttFn>,
    /// Number of binary levels; the vector has 2^L entries [default: 16].
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub levels: Option<usize>,
    /// Relative truncation threshold [default: 1e-10].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Random parameter draws [default: 20].
    #[arg(long)]
    pub draws: Option<usize>,
}
mergeable!(QttArgs { function, levels, eps, draws } flags {});

pub fn cmd_qtt_rank(rc: &RunConfig, a: QttArgs, out: &mut dyn Write) -> CliResult<()> {
    let function = need(a.function, "function")?;
    let settings = QttArgs {
        function: Some(function),
        levels: Some(a.levels.unwrap_or(16)),
        eps: Some(a.eps.unwrap_or(1e-10)),
        draws: Some(a.draws.unwrap_or(20)),
    };
    let f = match function {
        QttFn::Exp => QttFunction::Exp,
        QttFn::Sin => QttFunction::Sin,
        QttFn::Poly => QttFunction::Poly,
    };
    let eps = settings.eps.unwrap_or_default();
    let table = experiments::qtt_rank_table(
        f,
        settings.levels.unwrap_or_default(),
        eps,
        settings.draws.unwrap_or_default(),
        rc.seed,
    )?;
    let join = |v: Vec<String>| v.join(";");
    let rows: Vec<Vec<String>> = table
        .into_iter()
        .map(|r| {
            vec![
                r.draw.to_string(),
                join(r.params.iter().map(|p| num(*p)).collect()),
                r.max_rank.to_string(),
                join(r.ranks.iter().map(|k| k.to_string()).collect()),
            ]
        })
        .collect();
    let meta = Metadata::new(rc.command, &settings, rc.seed, rc.threads).tolerance("eps", eps);
    rc.emit(
        out,
        "qtt-rank",
        &meta,
        &["draw", "params", "max_rank", "ranks"],
        &rows,
    )
}
