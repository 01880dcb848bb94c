//! Second phase: the multiplier search.
//!
//! When `c_min` is not attainable the constraint is active at the optimum and
//! the solution minimizes `𝓛(q, λ) = Σ p_s c·q + λ g(q)` for a unique `λ̄ > 0`
//! with `g = 0`. For fixed `λ` the minimizer is the limit of
//!
//! ```text
//! q'[s,a,b] ∝ t_b · exp(−c[s,a,b] / λ),   t = T(q)
//! ```
//!
//! and `g` at that limit is nonincreasing in `λ`, so `λ̄` is found by bisection
//! on `[0, λ_max]` with `λ_max = (c_max − c_min) / ln|A|`, where the limit is
//! guaranteed to have `g < 0`. The bracket halves every outer step, so
//! `⌊log₂((c_max − c_min)/(ε_b ln|A|))⌋ + 1` steps reach width `ε_b`.

use alloc::vec::Vec;

use crate::attain::solve_delta0;
use crate::bpg::{run_bpg, BpgConfig, BpgOutcome, IterLimits, TraceRecord};
use crate::entropy::g_value;
use crate::instance::{
    cost_summary, expected_cost, normalize_costs, validate_instance, JointPolicy, NormalizedCosts, ProblemInstance,
    SupportPattern,
};
use crate::timer::Stopwatch;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionConfig {
    /// Stop once the multiplier bracket is narrower than this.
    pub eps_b: f64,
    /// Inner fixed-point tolerance, `0 < eps_f < eps_b`.
    pub eps_f: f64,
    /// Dead band around zero for the sign of `g`.
    pub zero_band: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Start each inner solve from the previous multiplier's limit.
    pub warm_start: bool,
    /// Inner trace stride.
    pub stride: usize,
    /// Keep the inner traces of every outer step.
    pub record_inner: bool,
    /// Keep every outer iterate to report `‖q_k − q_final‖₂`.
    pub keep_iterates: bool,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        BisectionConfig {
            eps_b: 1e-10,
            eps_f: 1e-12,
            zero_band: 1e-20,
            max_outer: 200,
            max_inner: 100_000,
            warm_start: true,
            stride: 1,
            record_inner: false,
            keep_iterates: false,
        }
    }
}

impl BisectionConfig {
    /// Looser tolerances for large random instances.
    pub fn high_dimensional() -> Self {
        BisectionConfig {
            eps_b: 1e-6,
            eps_f: 1e-8,
            ..BisectionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_f > 0.0) || !(self.eps_f < self.eps_b) {
            return Err(Error::InvalidConfig("tolerances must satisfy 0 < eps_f < eps_b"));
        }
        if !(self.zero_band >= 0.0) {
            return Err(Error::InvalidConfig("zero_band must be nonnegative"));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be at least 1"));
        }
        self.limits().validate()
    }

    pub fn limits(&self) -> IterLimits {
        IterLimits {
            eps_fixed: self.eps_f,
            max_inner: self.max_inner,
            stride: self.stride,
            record_marginals: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// `c_min` is reachable inside the constraint set; `λ = 0`.
    Attainable,
    /// The constraint binds; `λ > 0` and `g ≈ 0`.
    Active,
    /// Every state has constant cost; the uniform policy is returned.
    Degenerate,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Attainable => "Attainable",
            Phase::Active => "Active",
            Phase::Degenerate => "Degenerate",
        }
    }
}

/// One bisection step.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    pub lambda: f64,
    /// Expected cost of the inner limit in original units.
    pub value: f64,
    pub g: f64,
    /// Final step residual of the inner loop.
    pub residual: f64,
    pub elapsed_s: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    /// `‖q_k − q_final‖₂`, filled when iterates are kept.
    pub error_to_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Optimal value in the units of the original costs.
    pub value: f64,
    /// Multiplier for the normalized costs; `0` unless the phase is active.
    pub lambda: f64,
    pub policy: JointPolicy,
    pub g_val: f64,
    pub phase: Phase,
    pub outer_iterations: usize,
    pub inner_iterations_total: usize,
    /// Inner solves stopped by `max_inner` rather than by `eps_f`.
    pub inner_unconverged: usize,
    pub traces: Vec<OuterRecord>,
    pub inner_traces: Vec<Vec<TraceRecord>>,
    pub elapsed_s: f64,
    /// Per-state shifts subtracted from the costs before solving.
    pub offsets: Vec<f64>,
}

/// Inner solve for a fixed multiplier: the engine on the full pattern with
/// `η = 1/λ` and `d = p_s c`.
pub fn solve_for_lambda(inst: &ProblemInstance, lambda: f64, limits: &IterLimits, q0: &JointPolicy) -> Result<BpgOutcome> {
    let cfg = BpgConfig::lagrangian(inst, lambda, *limits)?;
    run_bpg(inst, &SupportPattern::full(inst.dims()), &cfg, q0)
}

/// `(c_max − c_min) / ln|A|`.
pub fn lambda_max(inst: &ProblemInstance) -> Result<f64> {
    let summary = cost_summary(inst);
    if summary.is_degenerate() || !(summary.c_max > summary.c_min) {
        return Err(Error::DegenerateCosts);
    }
    Ok((summary.c_max - summary.c_min) / libm::log(inst.dims().num_a as f64))
}

/// `⌊log₂((c_max − c_min) / (ε_b ln|A|))⌋ + 1`, the number of halvings after
/// which the bracket is narrower than `ε_b`.
pub fn k0_bound(inst: &ProblemInstance, eps_b: f64) -> Result<usize> {
    let ratio = lambda_max(inst)? / eps_b;
    let k = libm::floor(libm::log2(ratio)) + 1.0;
    Ok(if k > 0.0 { k as usize } else { 0 })
}

/// `g` at the inner limits for two multipliers, both started from uniform.
pub fn g_monotonicity_check(
    inst: &ProblemInstance,
    lambda_1: f64,
    lambda_2: f64,
    limits: &IterLimits,
) -> Result<(f64, f64)> {
    if !(lambda_1 <= lambda_2) {
        return Err(Error::InvalidConfig("multipliers must be ordered"));
    }
    let q0 = JointPolicy::uniform(inst.dims());
    let g1 = g_value(inst, &solve_for_lambda(inst, lambda_1, limits, &q0)?.policy).to_f64();
    let g2 = g_value(inst, &solve_for_lambda(inst, lambda_2, limits, &q0)?.policy).to_f64();
    Ok((g1, g2))
}

/// Weight of the cold start blended into every warm start.
///
/// The previous limit can carry entries near underflow (1e-30 and below).
/// Multiplicative steps move such entries by a comparable amount, so the
/// step residual drops below `eps_f` long before the iterate has moved, and
/// the inner loop stops on a spurious boundary point. Blending in the cold
/// start keeps every entry of order `WARM_MIX / (|A||B|)`.
pub const WARM_MIX: f64 = 1e-3;

/// Bisection on the multiplier for a normalized, non-attainable instance.
///
/// The lower end `λ = 0` is never solved: non-attainability certifies
/// `g > 0` there. The upper end is solved once to certify `g < 0`.
pub fn bisection_solve(norm: &NormalizedCosts, cfg: &BisectionConfig, q0: &JointPolicy) -> Result<SolveReport> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    let inst: &ProblemInstance = &norm.instance;
    let offset = norm.value_offset();
    let limits = cfg.limits();
    let upper = lambda_max(inst)?;

    let top = solve_for_lambda(inst, upper, &limits, q0)?;
    let g_top = g_value(inst, &top.policy).to_f64();
    if !(g_top < 0.0) {
        return Err(Error::BracketFailure { g: g_top });
    }
    let mut inner_total = top.iterations;
    let mut unconverged = usize::from(!top.converged);

    let (mut lo, mut hi) = (0.0_f64, upper);
    let mut current = (upper, top, g_top);
    let mut traces = Vec::new();
    let mut inner_traces = Vec::new();
    let mut iterates = Vec::new();
    let mut k = 0;
    while hi - lo >= cfg.eps_b {
        if k >= cfg.max_outer {
            return Err(Error::MaxOuterExceeded(cfg.max_outer));
        }
        let lambda = 0.5 * (lo + hi);
        let warm;
        let start = if cfg.warm_start {
            warm = q0.mix(&current.1.policy, WARM_MIX)?;
            &warm
        } else {
            q0
        };
        let out = solve_for_lambda(inst, lambda, &limits, start)?;
        let g = g_value(inst, &out.policy).to_f64();
        if g < -cfg.zero_band {
            hi = lambda;
        } else if g > cfg.zero_band {
            lo = lambda;
        } else {
            lo = lambda;
            hi = lambda;
        }
        inner_total += out.iterations;
        unconverged += usize::from(!out.converged);
        traces.push(OuterRecord {
            k,
            lambda,
            value: expected_cost(inst, &out.policy)? + offset,
            g,
            residual: out.final_residual,
            elapsed_s: clock.elapsed_s(),
            inner_iterations: out.iterations,
            inner_converged: out.converged,
            error_to_final: None,
        });
        if cfg.record_inner {
            inner_traces.push(out.trace.clone());
        }
        if cfg.keep_iterates {
            iterates.push(out.policy.clone());
        }
        current = (lambda, out, g);
        k += 1;
    }

    let (lambda, out, g_val) = current;
    for (record, q) in traces.iter_mut().zip(&iterates) {
        record.error_to_final = Some(q.l2_distance(&out.policy));
    }
    Ok(SolveReport {
        value: expected_cost(inst, &out.policy)? + offset,
        lambda,
        policy: out.policy,
        g_val,
        phase: Phase::Active,
        outer_iterations: k,
        inner_iterations_total: inner_total,
        inner_unconverged: unconverged,
        traces,
        inner_traces,
        elapsed_s: clock.elapsed_s(),
        offsets: norm.offsets.clone(),
    })
}

/// Validate, normalize, decide attainability, and bisect when needed.
/// Values are reported in the original cost units.
pub fn full_solve(inst: ProblemInstance, cfg: &BisectionConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    let valid = validate_instance(inst)?;
    let dims = valid.dims();
    let norm = match normalize_costs(&valid) {
        Ok(norm) => norm,
        Err(Error::DegenerateCosts) => {
            let policy = JointPolicy::uniform(dims);
            return Ok(SolveReport {
                value: expected_cost(&valid, &policy)?,
                lambda: 0.0,
                g_val: g_value(&valid, &policy).to_f64(),
                policy,
                phase: Phase::Degenerate,
                outer_iterations: 0,
                inner_iterations_total: 0,
                inner_unconverged: 0,
                traces: Vec::new(),
                inner_traces: Vec::new(),
                elapsed_s: clock.elapsed_s(),
                offsets: cost_summary(&valid).c_min_s,
            });
        }
        Err(e) => return Err(e),
    };
    let attain = solve_delta0(&norm.instance, &cfg.limits(), None)?;
    if attain.attainable {
        return Ok(SolveReport {
            value: crate::attain::attainability_value(&norm.instance, &attain, norm.value_offset())?,
            lambda: 0.0,
            policy: attain.policy,
            g_val: attain.g_at_limit,
            phase: Phase::Attainable,
            outer_iterations: 0,
            inner_iterations_total: attain.iterations,
            inner_unconverged: usize::from(!attain.converged),
            traces: Vec::new(),
            inner_traces: Vec::new(),
            elapsed_s: clock.elapsed_s(),
            offsets: norm.offsets,
        });
    }
    let mut report = bisection_solve(&norm, cfg, &JointPolicy::uniform(dims))?;
    report.inner_iterations_total += attain.iterations;
    report.elapsed_s = clock.elapsed_s();
    Ok(report)
}
