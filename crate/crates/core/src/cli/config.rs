use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::report::to_json_bytes;
use super::AppError;
use crate::potential::{
    discretize, parse_potential, range_and_positivity, Expr, LocallyConstantPotential,
};
use crate::shift_space::{enumerate_cylinders, ZeroOneMatrix};
use crate::thermo::ThermoError;
use crate::transfer_op::{PerronOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Expression,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputationSection {
    #[serde(default = "default_depth")]
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ComputationSection {
    fn default() -> Self {
        ComputationSection {
            k: default_depth(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: 0,
        }
    }
}

fn default_depth() -> usize {
    1
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_theta() -> f64 {
    0.5
}

/// The TOML document as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub matrix: Vec<String>,
    pub potential: PotentialSection,
    #[serde(default)]
    pub computation: ComputationSection,
    #[serde(default = "default_theta")]
    pub metric_theta: f64,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub matrix: ZeroOneMatrix,
    pub h: LocallyConstantPotential,
    pub expr: Option<Expr>,
}

impl RunConfig {
    pub fn k(&self) -> usize {
        self.raw.computation.k
    }

    pub fn seed(&self) -> u64 {
        self.raw.computation.seed
    }

    pub fn perron_options(&self) -> PerronOptions {
        PerronOptions {
            tol: self.raw.computation.tol,
            max_iter: self.raw.computation.max_iter,
            seed: self.raw.computation.seed,
        }
    }

    /// SHA-256 of the canonical JSON encoding of the normalized document.
    pub fn hash(&self) -> String {
        let mut raw = self.raw.clone();
        if let Some(t) = raw.potential.text.as_mut() {
            *t = t.split_whitespace().collect::<Vec<_>>().join(" ");
        }
        let bytes = to_json_bytes(&raw, false).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn invalid(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

pub fn parse_config(text: &str) -> Result<RunConfig, AppError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
    validate(raw)
}

pub fn load_config(path: &Path) -> Result<RunConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        AppError::Config(m) => AppError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn validate(raw: RawConfig) -> Result<RunConfig, AppError> {
    let matrix =
        ZeroOneMatrix::from_row_strings(&raw.matrix).map_err(|e| invalid(e.to_string()))?;
    let p = &raw.potential;
    let c = &raw.computation;
    if p.depth < 1 {
        return Err(invalid("potential.depth must be at least 1"));
    }
    if c.k < p.depth {
        return Err(invalid(format!(
            "computation.k = {} is below potential.depth = {}",
            c.k, p.depth
        )));
    }
    if !(c.tol > 0.0) {
        return Err(invalid("computation.tol must be positive"));
    }
    if c.max_iter == 0 {
        return Err(invalid("computation.max_iter must be positive"));
    }
    if !(raw.metric_theta > 0.0 && raw.metric_theta < 1.0) {
        return Err(invalid("metric_theta must lie in (0, 1)"));
    }
    enumerate_cylinders(&matrix, c.k).map_err(|e| invalid(e.to_string()))?;
    let (h, expr) = match p.kind {
        PotentialKind::Expression => {
            if p.table.is_some() {
                return Err(invalid(
                    "potential.table is not used with kind = \"expression\"",
                ));
            }
            let text = p
                .text
                .as_deref()
                .ok_or_else(|| invalid("potential.text is required for kind = \"expression\""))?;
            let expr =
                parse_potential(text).map_err(|e| invalid(format!("potential.text: {e}")))?;
            let h = discretize(&expr, &matrix, p.depth).map_err(|e| invalid(e.to_string()))?;
            (h, Some(expr))
        }
        PotentialKind::Table => {
            if p.text.is_some() {
                return Err(invalid("potential.text is not used with kind = \"table\""));
            }
            let table = p
                .table
                .clone()
                .ok_or_else(|| invalid("potential.table is required for kind = \"table\""))?;
            let h = LocallyConstantPotential::from_table(&matrix, p.depth, table)
                .map_err(|e| invalid(e.to_string()))?;
            (h, None)
        }
    };
    let range = range_and_positivity(&h);
    if !range.exceeds_one {
        return Err(invalid(
            ThermoError::HNotExceedingOne { min: range.min }.to_string(),
        ));
    }
    Ok(RunConfig {
        raw,
        matrix,
        h,
        expr,
    })
}
