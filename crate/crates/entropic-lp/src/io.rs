//! JSON instance files and solve reports.
//!
//! Instance schema: `{"p": [p_s ...], "cost": [[[c ...] per b] per a] per s}`.
//! Reduced schema (costs independent of the action):
//! `{"num_a": A, "p": [...], "cost": [[c ...] per b] per s}`.

use std::fs;
use std::path::Path;

use entropic_lp_core::{ProblemInstance, ReducedInstance, SolveReport};
use serde::{Deserialize, Serialize};

use crate::AppError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub p: Vec<f64>,
    pub cost: Vec<Vec<Vec<f64>>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        InstanceFile {
            p: inst.prior().to_vec(),
            cost: inst.to_nested(),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance, AppError> {
        Ok(ProblemInstance::from_nested(self.p, &self.cost)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedFile {
    pub num_a: usize,
    pub p: Vec<f64>,
    pub cost: Vec<Vec<f64>>,
}

impl ReducedFile {
    pub fn into_reduced(self) -> Result<ReducedInstance, AppError> {
        Ok(ReducedInstance::new(self.num_a, self.p, &self.cost)?)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::Parse(format!("{}: {e}", path.display())))
}

pub fn read_instance(path: &Path) -> Result<ProblemInstance, AppError> {
    read_json::<InstanceFile>(path)?.into_instance()
}

pub fn read_reduced(path: &Path) -> Result<ReducedInstance, AppError> {
    read_json::<ReducedFile>(path)?.into_reduced()
}

pub fn instance_json(inst: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("plain numbers serialize")
}

/// Full-solver comparison attached by `ba --cross-check`.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub full_value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportFile {
    pub value: f64,
    pub lambda: f64,
    pub g: f64,
    pub phase: &'static str,
    pub outer_iterations: usize,
    pub inner_iterations_total: usize,
    pub elapsed_s: f64,
    pub policy: Vec<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<CrossCheck>,
}

impl ReportFile {
    pub fn new(report: &SolveReport, timing: bool) -> Self {
        ReportFile {
            value: report.value,
            lambda: report.lambda,
            g: report.g_val,
            phase: report.phase.as_str(),
            outer_iterations: report.outer_iterations,
            inner_iterations_total: report.inner_iterations_total,
            elapsed_s: if timing { report.elapsed_s } else { 0.0 },
            policy: report.policy.to_nested(),
            cross_check: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numbers serialize")
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), AppError> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| AppError::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
