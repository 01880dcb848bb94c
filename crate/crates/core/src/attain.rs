//! First phase: can the unconstrained minimum `c_min` be reached inside the
//! constraint set?
//!
//! Policies achieving `c_min` are exactly those supported on the per-state
//! argmin sets `I^s`. Minimizing `g` over that face (the engine with `η = 0`)
//! and checking the sign of the limit decides attainability.

use alloc::vec::Vec;

use crate::bpg::{run_bpg, BpgConfig, IterLimits};
use crate::entropy::g_value;
use crate::instance::{cost_summary, JointPolicy, ProblemInstance, SupportPattern};
use crate::{Error, Result};

/// `g` at the face limit must be at most this for `c_min` to count as attainable.
pub const ATTAIN_THRESHOLD: f64 = 1e-9;

/// Relative tolerance for cost ties with the per-state minimum.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AttainReport {
    pub attainable: bool,
    pub g_at_limit: f64,
    /// Limit of the restricted recursion, embedded in the full shape.
    pub policy: JointPolicy,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-state sets of all `(a, b)` whose cost ties with the state minimum.
pub fn minimal_supports(inst: &ProblemInstance) -> SupportPattern {
    let dims = inst.dims();
    let summary = cost_summary(inst);
    let scale = inst.costs().iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    let tol = TIE_TOL * scale;
    let mask: Vec<bool> = inst
        .costs()
        .iter()
        .enumerate()
        .map(|(i, c)| *c <= summary.c_min_s[i / dims.per_state()] + tol)
        .collect();
    SupportPattern::from_mask(dims, mask).expect("every state has an argmin")
}

/// Minimizes `g` over the minimal-cost face from `q0` (uniform on each `I^s`
/// by default) and classifies the instance.
pub fn solve_delta0(inst: &ProblemInstance, limits: &IterLimits, q0: Option<&JointPolicy>) -> Result<AttainReport> {
    let pattern = minimal_supports(inst);
    let cfg = BpgConfig::untilted(inst, *limits)?;
    let start;
    let q0 = match q0 {
        Some(q) => q,
        None => {
            start = JointPolicy::uniform_on(&pattern);
            &start
        }
    };
    let out = run_bpg(inst, &pattern, &cfg, q0)?;
    let g_at_limit = g_value(inst, &out.policy).to_f64();
    Ok(AttainReport {
        attainable: g_at_limit <= ATTAIN_THRESHOLD,
        g_at_limit,
        policy: out.policy,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// The optimal value when `c_min` is attainable: `c_min` plus `value_offset`
/// (the normalization shift to re-add).
pub fn attainability_value(inst: &ProblemInstance, report: &AttainReport, value_offset: f64) -> Result<f64> {
    if !report.attainable {
        return Err(Error::NotAttainable);
    }
    Ok(cost_summary(inst).c_min + value_offset)
}
