//! Configuration and driver for the `wgmorley` binary.
//!
//! Every flag has a key of the same name in the optional `key = value`
//! config file; flags win over file values.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use wgmorley::analysis::LevelTiming;
use wgmorley::{convergence_study, manufactured_case, MeshFamily, PenaltyConvention, Solver};

/// Environment variable that overrides the configured thread count.
pub const THREADS_ENV: &str = "WGMORLEY_THREADS";

#[derive(Parser, Debug, Default)]
#[command(
    name = "wgmorley",
    version,
    about = "Convergence studies for weak Galerkin Morley elements on polytopal meshes"
)]
pub struct Args {
    /// Mesh family: square, triangle, polygon or cube.
    #[arg(long)]
    pub mesh: Option<MeshFamily>,
    /// Polynomial degree, at least 3.
    #[arg(long)]
    pub k: Option<usize>,
    /// Level range `first:last` (or a single level).
    #[arg(long)]
    pub levels: Option<Levels>,
    /// Linear solver: full or schur.
    #[arg(long)]
    pub solver: Option<Solver>,
    /// Backward-error tolerance of the linear solve.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Manufactured case: poly2d or poly3d.
    #[arg(long)]
    pub case: Option<Case>,
    /// Report format: csv or markdown.
    #[arg(long)]
    pub output: Option<Format>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Stabilizer weighting: lattice or cellwise.
    #[arg(long)]
    pub penalty: Option<PenaltyConvention>,
    /// Flat `key = value` file with defaults for the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    Poly2d,
    Poly3d,
}

impl Case {
    pub fn dim(self) -> usize {
        match self {
            Case::Poly2d => 2,
            Case::Poly3d => 3,
        }
    }
}

impl FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "poly2d" => Ok(Case::Poly2d),
            "poly3d" => Ok(Case::Poly3d),
            _ => Err(format!("unknown case `{s}` (expected poly2d or poly3d)")),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Poly2d => "poly2d",
            Case::Poly3d => "poly3d",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(format!(
                "unknown output format `{s}` (expected csv or markdown)"
            )),
        }
    }
}

/// Inclusive level range as written on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Levels {
    pub first: u32,
    pub last: u32,
}

impl FromStr for Levels {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad level `{t}` in `{s}`"))
        };
        let (first, last) = match s.split_once(':') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => (num(s)?, num(s)?),
        };
        Ok(Levels { first, last })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshFamily,
    pub k: usize,
    pub levels: RangeInclusive<u32>,
    pub solver: Solver,
    pub tol: f64,
    pub case: Case,
    pub output: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub penalty: PenaltyConvention,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] wgmorley::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

const KEYS: [&str; 10] = [
    "mesh", "k", "levels", "solver", "tol", "case", "output", "out", "threads", "penalty",
];

/// Parses a flat `key = value` file. `#` starts a comment.
pub fn read_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key `{key}`",
                n + 1
            )));
        }
        if map
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(CliError::Usage(format!(
                "config line {}: duplicate key `{key}`",
                n + 1
            )));
        }
    }
    Ok(map)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    file.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
        })
        .transpose()
}

/// Merges flags over the config file (if any) and validates the result.
pub fn parse_config(args: Args) -> Result<RunConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            read_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let mesh = args
        .mesh
        .or(from_file(&file, "mesh")?)
        .unwrap_or(MeshFamily::Square);
    let k = args.k.or(from_file(&file, "k")?).unwrap_or(3);
    let levels = args
        .levels
        .or(from_file(&file, "levels")?)
        .unwrap_or(Levels { first: 2, last: 5 });
    let solver = args
        .solver
        .or(from_file(&file, "solver")?)
        .unwrap_or(Solver::Schur);
    let tol = args.tol.or(from_file(&file, "tol")?).unwrap_or(1e-12);
    let case = args.case.or(from_file(&file, "case")?);
    let output = args
        .output
        .or(from_file(&file, "output")?)
        .unwrap_or(Format::Markdown);
    let out = args.out.or(from_file(&file, "out")?);
    let threads = args.threads.or(from_file(&file, "threads")?);
    let penalty = args
        .penalty
        .or(from_file(&file, "penalty")?)
        .unwrap_or(PenaltyConvention::Lattice);

    if k < 3 {
        return Err(CliError::Usage("k must be ≥ 3".into()));
    }
    if levels.first == 0 {
        return Err(CliError::Usage("levels start at 1".into()));
    }
    if levels.first > levels.last {
        return Err(CliError::Usage(format!(
            "inverted level range {}:{}",
            levels.first, levels.last
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::Usage(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if threads == Some(0) {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    let case = case.unwrap_or(if mesh.dim() == 3 {
        Case::Poly3d
    } else {
        Case::Poly2d
    });
    if case.dim() != mesh.dim() {
        return Err(CliError::Usage(format!(
            "mesh {} needs case {}, got {case}",
            mesh.name(),
            if mesh.dim() == 3 { "poly3d" } else { "poly2d" }
        )));
    }
    Ok(RunConfig {
        mesh,
        k,
        levels: levels.first..=levels.last,
        solver,
        tol,
        case,
        output,
        out,
        threads,
        penalty,
    })
}

/// Runs the study and returns the report text. Per-level progress goes to `log`.
pub fn run(cfg: &RunConfig, log: &mut (dyn Write + Send)) -> Result<String, CliError> {
    let mut study = || {
        let case = manufactured_case(cfg.case.dim());
        let mut io = Ok(());
        let report = convergence_study(
            cfg.mesh,
            cfg.k,
            cfg.levels.clone(),
            &case,
            cfg.penalty,
            cfg.solver,
            cfg.tol,
            |t: &LevelTiming| {
                if io.is_ok() {
                    io = writeln!(
                        log,
                        "level {}: {} dofs, {} unknowns, {:.3} s",
                        t.level,
                        t.dofs,
                        t.unknowns,
                        t.elapsed.as_secs_f64()
                    );
                }
            },
        );
        io?;
        Ok::<_, CliError>(report?)
    };
    let report = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(study)?,
        None => study()?,
    };
    Ok(match cfg.output {
        Format::Csv => report.to_csv()?,
        Format::Markdown => report.to_markdown(),
    })
}

/// Writes the report to the configured path or stdout.
pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => write_file(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| {
        CliError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}
