//! Command-line front end: `solve`, `verify`, `gen` and `bench`.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 certificate failure,
//! 3 infeasible configuration.

mod bench;
mod io;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bnb::{solve_kth_bnb, BnbCertificate, KthSolver};
use crate::certify::{
    check_eps_certificate, check_solution, deflation_baseline, CertLevel, DEFAULT_ORACLE_CAP, DEFAULT_TOL,
};
use crate::decomp::{threshold_spca, BlockSummary};
use crate::error::SpcaError;
use crate::exact::{solve_sequence, SolverMode, SpcaSolution};
use crate::linalg::SymMatrix;
use crate::synth::{generate, GenConfig};

pub use bench::{run_bench, BenchRow};
pub use io::{
    components_csv, format_matrix, load_matrix, parse_matrix, Certificates, ComponentRecord, ConfigRecord,
    EpsCertificate, MatrixRecord, ResultDocument,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CERTIFICATE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "ORTHO_SPCA_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("certificate check failed: {0}")]
    Certificate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Certificate(_) => EXIT_CERTIFICATE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<SpcaError> for CliError {
    fn from(e: SpcaError) -> Self {
        match e {
            SpcaError::InvalidSparsity { .. }
            | SpcaError::InvalidComponentCount { .. }
            | SpcaError::NoOrthogonalDirection
            | SpcaError::OracleCapExceeded { .. } => CliError::Infeasible(e.to_string()),
            SpcaError::InvalidTolerance(_) | SpcaError::InvalidInput(_) => CliError::Usage(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ortho-spca",
    version,
    about = "Sparse PCA with strictly orthogonal components"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute K sparse components and write them with their certificates.
    Solve(SolveArgs),
    /// Re-certify a saved result against a matrix.
    Verify(VerifyArgs),
    /// Write a synthetic near-block-diagonal PSD matrix.
    Gen(GenArgs),
    /// Per-step variance, timing and orthogonality for several modes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Bnb,
    Threshold,
    Deflation,
}

impl From<ModeArg> for SolverMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => SolverMode::Exact,
            ModeArg::Bnb => SolverMode::Bnb,
            ModeArg::Threshold => SolverMode::Threshold,
            ModeArg::Deflation => SolverMode::Deflation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    None,
    Cheap,
    Oracle,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    /// Per-subproblem tolerance; required for `bnb`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Threshold level; required for `threshold`.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Accepted for reproducible scripts; the solvers are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long, value_enum, default_value = "oracle")]
    pub level: LevelArg,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
    /// Write the verification report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub block_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub r_max: usize,
    /// Comma-separated list of modes.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact,deflation")]
    pub modes: Vec<ModeArg>,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Validated settings for one `solve` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub matrix_path: PathBuf,
    pub p: usize,
    pub k: usize,
    pub mode: SolverMode,
    pub eps: f64,
    pub delta: f64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub seed: u64,
    pub oracle_cap: usize,
}

impl RunConfig {
    pub fn from_args(a: &SolveArgs) -> Result<Self, CliError> {
        let mode = SolverMode::from(a.mode);
        if mode == SolverMode::Bnb && a.eps.is_none() {
            return Err(CliError::Usage("--mode bnb requires --eps".into()));
        }
        if mode == SolverMode::Threshold && a.delta.is_none() {
            return Err(CliError::Usage("--mode threshold requires --delta".into()));
        }
        let eps = a.eps.unwrap_or(0.0);
        let delta = a.delta.unwrap_or(0.0);
        for (name, v) in [("eps", eps), ("delta", delta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Usage(format!(
                    "--{name} must be a finite non-negative number, got {v}"
                )));
            }
        }
        if eps > 0.0 && !matches!(mode, SolverMode::Bnb | SolverMode::Threshold) {
            return Err(CliError::Usage(format!(
                "--eps is only used by bnb and threshold, not {mode}"
            )));
        }
        if delta > 0.0 && mode != SolverMode::Threshold {
            return Err(CliError::Usage(format!(
                "--delta is only used by threshold, not {mode}"
            )));
        }
        Ok(Self {
            matrix_path: a.matrix.clone(),
            p: a.p,
            k: a.k,
            mode,
            eps,
            delta,
            output_path: a.out.clone(),
            output_format: a.format,
            seed: a.seed,
            oracle_cap: a.oracle_cap,
        })
    }

    fn check_shape(&self, n: usize) -> Result<(), CliError> {
        if self.p == 0 || self.p > n {
            return Err(CliError::Infeasible(format!(
                "p = {} must satisfy 1 <= p <= n = {n}",
                self.p
            )));
        }
        if self.k == 0 || self.k > n {
            return Err(CliError::Infeasible(format!(
                "k = {} must satisfy 1 <= k <= n = {n}",
                self.k
            )));
        }
        Ok(())
    }

    fn record(&self) -> ConfigRecord {
        ConfigRecord {
            mode: self.mode,
            p: self.p,
            k: self.k,
            eps: self.eps,
            delta: self.delta,
            oracle_cap: self.oracle_cap,
            matrix_path: Some(self.matrix_path.display().to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn run(command: &Command) -> Result<i32, CliError> {
    match command {
        Command::Solve(a) => cmd_solve(&RunConfig::from_args(a)?),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a).map(|()| EXIT_OK),
        Command::Bench(a) => cmd_bench(a).map(|()| EXIT_OK),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs the configured solver and assembles the result document.
pub fn solve_document(q: &SymMatrix, cfg: &RunConfig) -> Result<ResultDocument, CliError> {
    cfg.check_shape(q.n())?;
    let mut bnb_certs: Vec<BnbCertificate> = Vec::new();
    let mut blocks = None;
    let sol = match cfg.mode {
        SolverMode::Exact => solve_sequence(q, cfg.p, cfg.k)?,
        SolverMode::Bnb => {
            let mut sol = SpcaSolution::new(q, cfg.p, SolverMode::Bnb, cfg.eps);
            for _ in 0..cfg.k {
                let (c, cert) = solve_kth_bnb(q, cfg.p, &sol.components, cfg.eps)?;
                sol.stats.nodes_explored += cert.nodes_explored;
                sol.stats.nodes_pruned += cert.nodes_pruned;
                sol.components.push(c);
                bnb_certs.push(cert);
            }
            sol
        }
        SolverMode::Threshold => {
            let solver = if cfg.eps > 0.0 {
                KthSolver::Bnb { eps: cfg.eps }
            } else {
                KthSolver::Exact
            };
            let out = threshold_spca(q, cfg.p, cfg.delta, cfg.k, solver)?;
            blocks = Some(BlockSummary::new(&out.structure, cfg.p));
            out.solution
        }
        SolverMode::Deflation => deflation_baseline(q, cfg.p, cfg.k)?,
    };

    let mut warnings = Vec::new();
    for (k, c) in sol.components.iter().enumerate() {
        if c.sparsity_relaxed {
            warnings.push(format!(
                "component {} has no {}-sparse direction orthogonal to its prefix; a dense direction was returned",
                k + 1,
                cfg.p
            ));
        }
    }
    if cfg.mode == SolverMode::Deflation {
        warnings.push("deflation components are not guaranteed to be orthogonal".into());
    }

    let solution = check_solution(q, cfg.p, &sol, DEFAULT_TOL);
    let mut passed = solution.passed;
    let eps = if cfg.eps > 0.0 || cfg.delta > 0.0 {
        let slack = sol.guarantee_slack();
        if q.n() <= cfg.oracle_cap {
            let report = check_eps_certificate(q, cfg.p, &sol, slack, CertLevel::Oracle { cap: cfg.oracle_cap })?;
            passed &= report.passed;
            Some(EpsCertificate {
                level: "oracle".into(),
                slack,
                report: Some(report),
                note: None,
            })
        } else {
            Some(EpsCertificate {
                level: "skipped".into(),
                slack,
                report: None,
                note: Some(format!("n = {} exceeds the oracle cap {}", q.n(), cfg.oracle_cap)),
            })
        }
    } else {
        None
    };
    for cert in &bnb_certs {
        passed &= cert.gap() <= cert.eps + 1e-9;
    }

    Ok(ResultDocument {
        config: cfg.record(),
        matrix: MatrixRecord {
            n: q.n(),
            trace: q.trace(),
            fingerprint: sol.matrix.hash.clone(),
        },
        components: ResultDocument::component_records(&sol),
        cumulative_variance: ResultDocument::cumulative(&sol),
        total_variance: sol.total_variance(),
        certificates: Certificates {
            passed,
            solution,
            eps,
            bnb: bnb_certs,
        },
        blocks,
        stats: sol.stats,
        warnings,
    })
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<i32, CliError> {
    let q = load_matrix(&cfg.matrix_path)?;
    let doc = solve_document(&q, cfg)?;
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    let text = match cfg.output_format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => components_csv(&doc.to_solution()?),
    };
    emit(cfg.output_path.as_deref(), &text)?;
    if doc.certificates.passed {
        Ok(EXIT_OK)
    } else {
        for f in doc.certificates.solution.failures() {
            eprintln!("failed: {} = {:e} > {:e}", f.name, f.value, f.tolerance);
        }
        Ok(EXIT_CERTIFICATE)
    }
}

/// Result of `verify`, written as JSON.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub solution: crate::certify::CertificateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<crate::certify::CertificateReport>,
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32, CliError> {
    let q = load_matrix(&a.matrix)?;
    let text = fs::read_to_string(&a.result).map_err(|e| CliError::Io(format!("{}: {e}", a.result.display())))?;
    let doc: ResultDocument =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", a.result.display())))?;
    let sol = doc.to_solution()?;
    let p = doc.config.p;
    if p == 0 || p > q.n() {
        return Err(CliError::Infeasible(format!(
            "p = {p} must satisfy 1 <= p <= n = {}",
            q.n()
        )));
    }
    let level = match a.level {
        LevelArg::None => None,
        LevelArg::Cheap => Some(CertLevel::Cheap),
        LevelArg::Oracle => {
            if q.n() > a.oracle_cap {
                return Err(CliError::Infeasible(format!(
                    "oracle verification refused: n = {} exceeds the oracle cap {}",
                    q.n(),
                    a.oracle_cap
                )));
            }
            Some(CertLevel::Oracle { cap: a.oracle_cap })
        }
    };
    let solution = check_solution(&q, p, &sol, a.tol);
    let eps = level
        .map(|l| check_eps_certificate(&q, p, &sol, sol.guarantee_slack(), l))
        .transpose()?;
    let passed = solution.passed && eps.as_ref().is_none_or(|r| r.passed);
    let report = VerifyReport { passed, solution, eps };
    let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    emit(a.out.as_deref(), &s)?;
    Ok(if passed { EXIT_OK } else { EXIT_CERTIFICATE })
}

pub fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let cfg = GenConfig {
        n: a.n,
        d: a.d,
        block_size: a.block_size,
        coupling: a.coupling,
        noise: a.noise,
        seed: a.seed,
        shuffle: a.shuffle,
    };
    let q = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(a.out.as_deref(), &format_matrix(&q))
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let q = load_matrix(&a.matrix)?;
    let modes: Vec<SolverMode> = a.modes.iter().map(|&m| m.into()).collect();
    let rows = run_bench(&q, a.p, a.r_max, &modes, a.eps, a.delta)?;
    emit(a.out.as_deref(), &bench::rows_csv(&rows)?)
}
