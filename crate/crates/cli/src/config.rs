//! Flag/JSON parameter plumbing shared by the subcommands. Config files
//! reject unknown keys; explicit flags override file values.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use eigopt::constraints::{preset, EigenConstraint, Preset};
use eigopt::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetKind {
    Psd,
    EigBox,
    CondNumber,
    M3,
    RankRelax,
    #[value(name = "example-21", alias = "example21")]
    Example21,
}

/// Constraint selection: either an explicit JSON system or a named preset.
#[derive(Args, Clone, Debug)]
pub struct ConstraintArgs {
    /// Constraint JSON file: {"A": [[...]], "b": [...], "eps": ...}
    #[arg(long, conflicts_with = "preset")]
    pub constraint: Option<PathBuf>,

    /// Named constraint family.
    #[arg(long, value_enum)]
    pub preset: Option<PresetKind>,

    /// Eigenvalue count for presets (defaults to the input matrix size).
    #[arg(long)]
    pub n: Option<usize>,

    /// Box preset: lower bound.
    #[arg(long)]
    pub lower: Option<f64>,

    /// Box preset: upper bound.
    #[arg(long)]
    pub upper: Option<f64>,

    /// Condition-number preset: cap kappa.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Staircase preset: number of rows.
    #[arg(long = "m3-rows")]
    pub m3_rows: Option<usize>,

    /// Rank-relaxation preset: retained rank k.
    #[arg(long = "rank-k")]
    pub rank_k: Option<usize>,

    /// Rank-relaxation preset: slack delta.
    #[arg(long = "rank-delta")]
    pub rank_delta: Option<f64>,

    /// Ordering-gap eps for the tightened model (overrides the file value).
    #[arg(long = "eps-order")]
    pub eps_order: Option<f64>,
}

impl ConstraintArgs {
    pub fn build(&self, n_hint: Option<usize>) -> Result<EigenConstraint> {
        let ec = if let Some(path) = &self.constraint {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<EigenConstraint>(&text)?
        } else {
            let kind = self.preset.ok_or_else(|| {
                Error::InvalidParams("either --constraint or --preset is required".into())
            })?;
            let n = self.n.or(n_hint).ok_or_else(|| {
                Error::InvalidParams("--n required when no matrix fixes the size".into())
            })?;
            let family = match kind {
                PresetKind::Psd => Preset::Psd,
                PresetKind::EigBox => Preset::EigBox {
                    lower: self.lower.unwrap_or(0.0),
                    upper: self.upper.unwrap_or(1.0),
                },
                PresetKind::CondNumber => Preset::CondNumber {
                    kappa: self.kappa.unwrap_or(1000.0),
                },
                PresetKind::M3 => Preset::M3 {
                    m: self.m3_rows.unwrap_or(1),
                },
                PresetKind::RankRelax => Preset::RankRelax {
                    k: self.rank_k.unwrap_or(1),
                    delta: self.rank_delta.unwrap_or(1e-10),
                },
                PresetKind::Example21 => Preset::Example21,
            };
            preset(&family, n)?
        };
        match self.eps_order {
            Some(eps) => ec.with_eps(eps),
            None => Ok(ec),
        }
    }
}

/// Experiment config file for `precondition`; every field optional, flags win.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecondConfig {
    pub experiment: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub set: Option<String>,
    pub kappa: Option<f64>,
    pub m3_rows: Option<usize>,
    pub alg: Option<String>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
}

/// Experiment config file for `quadsys`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadsysConfig {
    pub experiment: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub method: Option<String>,
    pub init: Option<String>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub pgm_eps: Option<f64>,
    pub pgm_max_iter: Option<usize>,
    pub newton_max_iter: Option<usize>,
    pub jobs: Option<usize>,
}

pub fn load_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(T::default()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}
