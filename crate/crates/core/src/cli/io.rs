//! Matrix CSV files and the JSON result document.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bnb::BnbCertificate;
use crate::certify::CertificateReport;
use crate::decomp::BlockSummary;
use crate::error::SpcaError;
use crate::exact::{SolveStats, SolverMode, SparseComponent, SpcaSolution};
use crate::linalg::{IndexSet, MatrixFingerprint, SymMatrix};

use super::CliError;

/// Reads a square numeric CSV matrix. A first row whose first cell is not a
/// number is treated as a header and skipped.
pub fn load_matrix(path: &Path) -> Result<SymMatrix, CliError> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<SymMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if line == 0 && record.get(0).is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>().map_err(|_| {
                    CliError::Parse(format!(
                        "non-numeric cell '{cell}' at line {}, column {}",
                        line + 1,
                        col + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    SymMatrix::from_rows(&rows).map_err(|e| match e {
        SpcaError::NotSquare { rows, row, cols } => CliError::Parse(format!(
            "matrix is not square: {rows} rows but row {} has {cols} columns",
            row + 1
        )),
        other => CliError::Parse(other.to_string()),
    })
}

/// CSV text with one matrix row per line.
pub fn format_matrix(q: &SymMatrix) -> String {
    let mut out = String::new();
    for i in 0..q.n() {
        let row: Vec<String> = q.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub mode: SolverMode,
    pub p: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub oracle_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub n: usize,
    pub trace: f64,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub k: usize,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub variance: f64,
    #[serde(default)]
    pub relaxed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsCertificate {
    /// `oracle`, `cheap` or `skipped`.
    pub level: String,
    pub slack: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CertificateReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub passed: bool,
    pub solution: CertificateReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<EpsCertificate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bnb: Vec<BnbCertificate>,
}

/// Everything `solve` writes and `verify` reads back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub config: ConfigRecord,
    pub matrix: MatrixRecord,
    pub components: Vec<ComponentRecord>,
    pub cumulative_variance: Vec<f64>,
    pub total_variance: f64,
    pub certificates: Certificates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockSummary>,
    #[serde(default)]
    pub stats: SolveStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ResultDocument {
    pub fn component_records(sol: &SpcaSolution) -> Vec<ComponentRecord> {
        sol.components
            .iter()
            .enumerate()
            .map(|(k, c)| ComponentRecord {
                k: k + 1,
                support: c.support.indices().to_vec(),
                values: c.values.clone(),
                variance: c.variance,
                relaxed: c.sparsity_relaxed,
            })
            .collect()
    }

    pub fn cumulative(sol: &SpcaSolution) -> Vec<f64> {
        sol.components
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c.variance;
                Some(*acc)
            })
            .collect()
    }

    /// Rebuilds the solution the document describes.
    pub fn to_solution(&self) -> Result<SpcaSolution, CliError> {
        let n = self.matrix.n;
        let components = self
            .components
            .iter()
            .map(|c| {
                if c.support.len() != c.values.len() {
                    return Err(CliError::Parse(format!(
                        "component {} has {} support indices but {} values",
                        c.k,
                        c.support.len(),
                        c.values.len()
                    )));
                }
                let support = IndexSet::new(c.support.clone(), n).map_err(|e| CliError::Parse(e.to_string()))?;
                Ok(SparseComponent {
                    support,
                    values: c.values.clone(),
                    variance: c.variance,
                    sparsity_relaxed: c.relaxed,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SpcaSolution {
            components,
            matrix: MatrixFingerprint {
                n,
                hash: self.matrix.fingerprint.clone(),
            },
            p: self.config.p,
            mode: self.config.mode,
            eps: self.config.eps,
            delta: self.config.delta,
            stats: self.stats,
        })
    }
}

/// Long-format component table: one row per support entry.
pub fn components_csv(sol: &SpcaSolution) -> String {
    let mut out = String::from("k,variance,relaxed,index,value\n");
    for (k, c) in sol.components.iter().enumerate() {
        for (&j, v) in c.support.indices().iter().zip(&c.values) {
            out.push_str(&format!(
                "{},{:?},{},{},{:?}\n",
                k + 1,
                c.variance,
                c.sparsity_relaxed,
                j,
                v
            ));
        }
    }
    out
}
