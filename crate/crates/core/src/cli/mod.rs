//! Command-line front end. Every table goes to `<out>/<command>.csv` when
//! `--out` is given and to stdout otherwise.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use commands::*;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "GRIDTENSOR_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error("SCF did not converge in {0} iterations")]
    NotConverged(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Config(_) => 2,
            CliError::Output(_) | CliError::NotConverged(_) => 1,
            CliError::Numeric(e) => match e {
                Error::Numerical(_) | Error::Unattainable { .. } | Error::DivisionGuard(_) => 1,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "gridtensor",
    version,
    about = "Grid-based tensor numerics for electronic structure"
)]
pub struct Cli {
    /// TOML file with one table per command; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pointwise accuracy of the low-rank Newton kernel.
    Kernel(KernelArgs),
    /// Tucker approximation error against rank.
    TuckerDecay(TuckerDecayArgs),
    /// Timing of the canonical 3D convolution under grid doubling.
    ConvBench(ConvBenchArgs),
    /// Restricted Hartree-Fock on the grid, optionally with MP2.
    Hf(HfArgs),
    /// Interaction energy of a cuboid lattice of point charges.
    LatticeEnergy(LatticeArgs),
    /// QTT ranks of sampled one-dimensional functions.
    QttRank(QttArgs),
}

#[derive(Deserialize, Default, Debug)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub kernel: Option<KernelArgs>,
    pub tucker_decay: Option<TuckerDecayArgs>,
    pub conv_bench: Option<ConvBenchArgs>,
    pub hf: Option<HfArgs>,
    pub lattice_energy: Option<LatticeArgs>,
    pub qtt_rank: Option<QttArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(toml::from_str(&text)?)
    }
}

/// Settings shared by every command after merging flags, config and defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: &'static str,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub seed: u64,
    /// Directory that relative paths in the config file are resolved against.
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Writes `name.csv` into the output directory, or to `stdout` without one.
    pub fn emit(
        &self,
        stdout: &mut dyn Write,
        name: &str,
        meta: &output::Metadata,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> CliResult<()> {
        match &self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                    path: dir.clone(),
                    source,
                })?;
                let path = dir.join(format!("{name}.csv"));
                let mut f = std::fs::File::create(&path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                output::write_table(&mut f, meta, header, rows)?;
            }
            None => output::write_table(stdout, meta, header, rows)?,
        }
        Ok(())
    }
}

/// Lattice extent given as `N` (cubic) or `a,b,c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counts(pub [usize; 3]);

impl FromStr for Counts {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad lattice extent '{p}': {e}"))
            })
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [n] => Ok(Counts([n; 3])),
            [a, b, c] => Ok(Counts([a, b, c])),
            _ => Err(format!("lattice extent '{s}' must be N or a,b,c")),
        }
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "{a},{b},{c}")
    }
}

impl Serialize for Counts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Counts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            List([usize; 3]),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Counts([n; 3])),
            Raw::List(v) => Ok(Counts(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayFn {
    Slater,
    Newton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QttFn {
    Exp,
    Sin,
    Poly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteArg {
    Factorized,
    Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassArg {
    Lumped,
    Exact,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let (file, base_dir) = match &cli.config {
        Some(p) => (
            ConfigFile::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (ConfigFile::default(), PathBuf::new()),
    };
    let threads = cli
        .threads
        .or(file.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let mut rc = RunConfig {
        command: "",
        out: cli
            .out
            .clone()
            .or_else(|| file.out.as_ref().map(|p| base_dir.join(p))),
        threads,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        base_dir,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let (mut buf_out, mut buf_err) = (Vec::<u8>::new(), Vec::<u8>::new());
    let result = pool.install(|| {
        let (stdout, stderr): (&mut dyn Write, &mut dyn Write) = (&mut buf_out, &mut buf_err);
        match cli.command {
            Command::Kernel(a) => {
                rc.command = "kernel";
                cmd_kernel(&rc, a.merge(file.kernel), stdout)
            }
            Command::TuckerDecay(a) => {
                rc.command = "tucker-decay";
                cmd_tucker_decay(&rc, a.merge(file.tucker_decay), stdout)
            }
            Command::ConvBench(a) => {
                rc.command = "conv-bench";
                cmd_conv_bench(&rc, a.merge(file.conv_bench), stdout, stderr)
            }
            Command::Hf(a) => {
                rc.command = "hf";
                cmd_hf(
                    &rc,
                    a.merge(file.hf.map(|h| h.rebase(&rc.base_dir))),
                    stdout,
                )
            }
            Command::LatticeEnergy(a) => {
                rc.command = "lattice-energy";
                cmd_lattice_energy(&rc, a.merge(file.lattice_energy), stdout)
            }
            Command::QttRank(a) => {
                rc.command = "qtt-rank";
                cmd_qtt_rank(&rc, a.merge(file.qtt_rank), stdout)
            }
        }
    });
    stdout.write_all(&buf_out)?;
    stderr.write_all(&buf_err)?;
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_parse() {
        assert_eq!("4".parse::<Counts>().unwrap(), Counts([4; 3]));
        assert_eq!("2, 3,4".parse::<Counts>().unwrap(), Counts([2, 3, 4]));
        assert!("2,3".parse::<Counts>().is_err());
        assert!("x".parse::<Counts>().is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(toml::from_str::<ConfigFile>("[kernel]\nn = 3\nbogus = 1\n").is_err());
        assert!(toml::from_str::<ConfigFile>("nonsense = 1\n").is_err());
        let c: ConfigFile = toml::from_str("seed = 4\n[lattice-energy]\nL = \"2,2,1\"\n").unwrap();
        assert_eq!(c.lattice_energy.unwrap().l, Some(Counts([2, 2, 1])));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::NotConverged(3).exit_code(), 1);
        assert_eq!(
            CliError::Numeric(Error::Numerical("x".into())).exit_code(),
            1
        );
        assert_eq!(
            CliError::Numeric(Error::InvalidArgument("x".into())).exit_code(),
            2
        );
    }
}
