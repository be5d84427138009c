//! Per-iteration traces and run summaries for the first-order solvers.

use serde::{Deserialize, Serialize};

use crate::spectral::SymMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Terminated by the stationarity test.
    Stationary,
    MaxIter,
    Error(String),
}

/// What the `measure` column of the trace reports. The two kinds are not
/// interchangeable: the trust-box gap upper-bounds the unit-Frobenius-ball
/// stationarity measure at termination but is a different quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// `|X_{k+1} - X_k|_F` of the accepted step (projected gradient).
    ConsecutiveGap,
    /// `|m_k|`, the magnitude of the linearized improvement over the
    /// eigenvalue trust box (Frank-Wolfe).
    FwGap,
}

/// One row of the solve trace. `accepted` is false only for the terminal
/// record written by the stationarity test, which moves no iterate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    /// Objective value after this iteration's move (or at the current point
    /// for the terminal record).
    pub f: f64,
    pub measure: f64,
    /// Stepsize: `h_k` for projected gradient, `gamma_k` for Frank-Wolfe.
    pub step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Line-search shrinks, or curvature-scale growths for Frank-Wolfe.
    pub backtracks: u32,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_cert: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub measure_kind: MeasureKind,
    /// Objective value at the starting point.
    pub f0: f64,
    pub records: Vec<IterRecord>,
    pub final_x: SymMatrix,
    pub final_value: f64,
    pub final_measure: f64,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Full iterate history, captured only on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<SymMatrix>>,
}

/// Compact run summary, the shape written next to the JSONL trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub iters: usize,
    pub final_value: f64,
    pub final_measure: f64,
    pub wall_ms: f64,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            status: self.status.clone(),
            iters: self.records.iter().filter(|r| r.accepted).count(),
            final_value: self.final_value,
            final_measure: self.final_measure,
            wall_ms: self.wall_ms,
        }
    }

    /// Writes the trace as JSONL, one record per line.
    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
