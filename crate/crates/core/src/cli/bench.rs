use std::time::Instant;

use serde::Serialize;

use crate::bnb::KthSolver;
use crate::certify::{max_angle_deviation, DeflationState};
use crate::decomp::{block_diagonalize, BlockStructure, CandidatePool};
use crate::error::SpcaError;
use crate::exact::{SolverMode, SparseComponent};
use crate::linalg::SymMatrix;

use super::CliError;

/// One line of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub r: usize,
    pub mode: SolverMode,
    pub variance_r: f64,
    pub cumulative_variance: f64,
    pub step_time_seconds: f64,
    pub max_angle_deviation_after_r: f64,
}

/// Runs each mode for `r_max` steps, timing every step separately.
pub fn run_bench(
    q: &SymMatrix,
    p: usize,
    r_max: usize,
    modes: &[SolverMode],
    eps: f64,
    delta: f64,
) -> Result<Vec<BenchRow>, CliError> {
    let n = q.n();
    if p == 0 || p > n {
        return Err(CliError::Infeasible(format!("p = {p} must satisfy 1 <= p <= n = {n}")));
    }
    if r_max == 0 || r_max > n {
        return Err(CliError::Infeasible(format!(
            "r-max = {r_max} must satisfy 1 <= r-max <= n = {n}"
        )));
    }
    if !(eps.is_finite() && eps >= 0.0 && delta.is_finite() && delta >= 0.0) {
        return Err(CliError::Usage(
            "--eps and --delta must be finite and non-negative".into(),
        ));
    }
    let mut rows = Vec::new();
    for &mode in modes {
        // setup (decomposition and the first block solves) is charged to step 1
        let setup = Instant::now();
        let structure = match mode {
            SolverMode::Threshold => Some(block_diagonalize(q, delta)?),
            _ => None,
        };
        let mut stepper = Stepper::new(q, p, mode, eps, structure.as_ref())?;
        let mut carry = setup.elapsed().as_secs_f64();
        let mut xs: Vec<Vec<f64>> = Vec::new();
        let mut cumulative = 0.0;
        for r in 1..=r_max {
            let start = Instant::now();
            let c = stepper.step()?;
            let elapsed = start.elapsed().as_secs_f64() + std::mem::take(&mut carry);
            cumulative += c.variance;
            xs.push(c.dense());
            rows.push(BenchRow {
                r,
                mode,
                variance_r: c.variance,
                cumulative_variance: cumulative,
                step_time_seconds: elapsed,
                max_angle_deviation_after_r: max_angle_deviation(&xs),
            });
        }
    }
    Ok(rows)
}

pub(crate) fn rows_csv(rows: &[BenchRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

enum Stepper<'a> {
    Sequential {
        q: &'a SymMatrix,
        p: usize,
        solver: KthSolver,
        previous: Vec<SparseComponent>,
    },
    Threshold {
        q: &'a SymMatrix,
        pool: CandidatePool<'a>,
    },
    Deflation(DeflationState<'a>),
}

impl<'a> Stepper<'a> {
    fn new(
        q: &'a SymMatrix,
        p: usize,
        mode: SolverMode,
        eps: f64,
        structure: Option<&'a BlockStructure>,
    ) -> Result<Self, CliError> {
        Ok(match mode {
            SolverMode::Exact => Stepper::Sequential {
                q,
                p,
                solver: KthSolver::Exact,
                previous: Vec::new(),
            },
            SolverMode::Bnb => Stepper::Sequential {
                q,
                p,
                solver: KthSolver::Bnb { eps },
                previous: Vec::new(),
            },
            SolverMode::Threshold => {
                let structure = structure.expect("threshold mode needs a block structure");
                let solver = if eps > 0.0 {
                    KthSolver::Bnb { eps }
                } else {
                    KthSolver::Exact
                };
                Stepper::Threshold {
                    q,
                    pool: CandidatePool::new(structure, p, solver)?,
                }
            }
            SolverMode::Deflation => Stepper::Deflation(DeflationState::new(q, p)),
        })
    }

    fn step(&mut self) -> Result<SparseComponent, CliError> {
        match self {
            Stepper::Sequential { q, p, solver, previous } => {
                let (c, _) = solver.solve(q, *p, previous)?;
                previous.push(c.clone());
                Ok(c)
            }
            Stepper::Threshold { q, pool } => pool
                .emit_original(q)?
                .ok_or_else(|| CliError::from(SpcaError::NoOrthogonalDirection)),
            Stepper::Deflation(state) => Ok(state.next_component()?),
        }
    }
}
