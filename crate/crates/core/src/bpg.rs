//! Bregman proximal gradient engine with the negative-entropy kernel.
//!
//! For a support pattern `Ξ`, a tilt `d` and a weight `η ≥ 0` the engine
//! minimizes `F(q, η) = g_Ξ(q) + η Σ_s Σ_{(a,b)∈Ξ_s} d[s,a,b] q[s,a,b]` over
//! the product of simplices on `Ξ` with the multiplicative update
//!
//! ```text
//! q'[s,a,b] ∝ t_b · exp(−η d[s,a,b] / p_s),   t = T_Ξ(q),   (a,b) ∈ Ξ_s
//! ```
//!
//! The exponent `ln t_b − η d / p_s` is shifted by its per-state maximum
//! before exponentiation. The next iterate depends on the current one only
//! through `t`, which is reduced sequentially; the per-state updates are
//! independent and run on rayon when the `parallel` feature is on, with
//! identical results.

use alloc::vec;
use alloc::vec::Vec;

use crate::entropy::{g_of, kl_divergence};
use crate::instance::{b_marginal, check_shapes, l2_distance, JointPolicy, ProblemInstance, SupportPattern};
use crate::sum::compensated;
use crate::timer::Stopwatch;
use crate::{Error, Result};

/// Stopping rule and recording options for the fixed-point loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterLimits {
    /// Stop once `‖q^{n+1} − q^n‖₂ < eps_fixed` over the whole tensor.
    pub eps_fixed: f64,
    /// Hard cap on the number of steps.
    pub max_inner: usize,
    /// Record a trace entry every `stride` steps (the last step is always recorded).
    pub stride: usize,
    /// Keep `T_Ξ(q^n)` for every step, needed by [`certificate_gap`].
    pub record_marginals: bool,
}

impl Default for IterLimits {
    fn default() -> Self {
        IterLimits {
            eps_fixed: 1e-12,
            max_inner: 100_000,
            stride: 1,
            record_marginals: false,
        }
    }
}

impl IterLimits {
    pub fn with_eps(eps_fixed: f64) -> Self {
        IterLimits {
            eps_fixed,
            ..IterLimits::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_fixed > 0.0) {
            return Err(Error::InvalidConfig("eps_fixed must be positive"));
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidConfig("max_inner must be at least 1"));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be at least 1"));
        }
        Ok(())
    }
}

/// Tilt weight, tilt tensor and stopping rule of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct BpgConfig {
    pub eta: f64,
    /// Flat `(s, a, b)` tilt `d`; entries off the pattern are ignored.
    pub tilt: Vec<f64>,
    pub limits: IterLimits,
}

impl BpgConfig {
    pub fn new(eta: f64, tilt: Vec<f64>, limits: IterLimits) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidConfig("eta must be finite and nonnegative"));
        }
        if tilt.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidConfig("tilt must be finite"));
        }
        limits.validate()?;
        Ok(BpgConfig { eta, tilt, limits })
    }

    /// `η = 0`: pure minimization of `g_Ξ`.
    pub fn untilted(inst: &ProblemInstance, limits: IterLimits) -> Result<Self> {
        BpgConfig::new(0.0, vec![0.0; inst.dims().len()], limits)
    }

    /// The Lagrangian subproblem at multiplier `λ`: `η = 1/λ`, `d = p_s c`,
    /// so that `F = 𝓛(·, λ)/λ`.
    pub fn lagrangian(inst: &ProblemInstance, lambda: f64, limits: IterLimits) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidLambda(lambda));
        }
        let n = inst.dims().per_state();
        let tilt = inst
            .costs()
            .iter()
            .enumerate()
            .map(|(i, c)| inst.prior()[i / n] * c)
            .collect();
        BpgConfig::new(1.0 / lambda, tilt, limits)
    }
}

/// Per-iteration scalars of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Index of the iterate the record describes (`1` after the first step).
    pub n: usize,
    pub objective_f: f64,
    pub g_val: f64,
    /// `‖q^n − q^{n−1}‖₂`.
    pub residual: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpgOutcome {
    /// Last iterate.
    pub policy: JointPolicy,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub final_f: f64,
    pub final_residual: f64,
    /// `T_Ξ(q^0), …, T_Ξ(q^iterations)` when requested.
    pub marginals: Vec<Vec<f64>>,
}

struct Engine<'a> {
    inst: &'a ProblemInstance,
    pattern: &'a SupportPattern,
    /// `−η d / p_s` on the pattern.
    log_weight: Vec<f64>,
    eta: f64,
    tilt: &'a [f64],
}

impl<'a> Engine<'a> {
    fn new(inst: &'a ProblemInstance, pattern: &'a SupportPattern, cfg: &'a BpgConfig) -> Result<Self> {
        let dims = inst.dims();
        if pattern.dims() != dims || cfg.tilt.len() != dims.len() {
            return Err(Error::ShapeMismatch("pattern, tilt and instance differ"));
        }
        let n = dims.per_state();
        let log_weight = cfg
            .tilt
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if cfg.eta == 0.0 {
                    0.0
                } else {
                    -cfg.eta * d / inst.prior()[i / n]
                }
            })
            .collect();
        Ok(Engine {
            inst,
            pattern,
            log_weight,
            eta: cfg.eta,
            tilt: &cfg.tilt,
        })
    }

    fn marginal(&self, q: &[f64], t: &mut [f64]) {
        b_marginal(self.inst.dims(), self.inst.prior(), q, t);
    }

    /// Writes the successor of the iterate whose marginal is `t` into `out`.
    fn step(&self, t: &[f64], out: &mut [f64]) -> Result<()> {
        let dims = self.inst.dims();
        let ln_t: Vec<f64> = t
            .iter()
            .map(|x| if *x > 0.0 { libm::log(*x) } else { f64::NEG_INFINITY })
            .collect();
        let n = dims.per_state();
        let update = |(s, row): (usize, &mut [f64])| -> Result<()> {
            let base = s * n;
            let mut max = f64::NEG_INFINITY;
            for (j, x) in row.iter_mut().enumerate() {
                *x = if self.pattern.contains_flat(base + j) {
                    self.log_weight[base + j] + ln_t[j % dims.num_b]
                } else {
                    f64::NEG_INFINITY
                };
                max = max.max(*x);
            }
            if max == f64::NEG_INFINITY || max.is_nan() {
                return Err(Error::NumericalUnderflow(s));
            }
            row.iter_mut().for_each(|x| *x = libm::exp(*x - max));
            let z = compensated(row.iter().copied());
            if !(z > 0.0) || !z.is_finite() {
                return Err(Error::NumericalUnderflow(s));
            }
            row.iter_mut().for_each(|x| *x /= z);
            Ok(())
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            out.par_chunks_mut(n).enumerate().try_for_each(update)
        }
        #[cfg(not(feature = "parallel"))]
        {
            out.chunks_mut(n).enumerate().try_for_each(update)
        }
    }

    fn objective(&self, q: &[f64]) -> (f64, f64) {
        let g = g_of(self.inst, q).to_f64();
        if self.eta == 0.0 {
            return (g, g);
        }
        let linear = compensated(
            q.iter()
                .zip(self.tilt)
                .enumerate()
                .filter(|(i, _)| self.pattern.contains_flat(*i))
                .map(|(_, (x, d))| x * d),
        );
        (g + self.eta * linear, g)
    }
}

fn check_on_pattern(q: &JointPolicy, pattern: &SupportPattern, strict: bool) -> Result<()> {
    let mass = pattern.mass_outside(q);
    if mass > 1e-14 {
        return Err(Error::SupportViolation { mass });
    }
    if strict {
        if let Some(i) = (0..q.as_slice().len()).find(|i| pattern.contains_flat(*i) && !(q.as_slice()[*i] > 0.0)) {
            return Err(Error::NotInterior(i));
        }
    }
    Ok(())
}

fn restrict(q: &JointPolicy, pattern: &SupportPattern) -> Vec<f64> {
    q.as_slice()
        .iter()
        .zip(pattern.mask())
        .map(|(x, m)| if *m { *x } else { 0.0 })
        .collect()
}

/// One multiplicative step on the pattern.
pub fn bpg_step(
    inst: &ProblemInstance,
    pattern: &SupportPattern,
    cfg: &BpgConfig,
    q: &JointPolicy,
) -> Result<JointPolicy> {
    check_shapes(inst, q)?;
    let engine = Engine::new(inst, pattern, cfg)?;
    check_on_pattern(q, pattern, false)?;
    let current = restrict(q, pattern);
    let mut t = vec![0.0; inst.dims().num_b];
    engine.marginal(&current, &mut t);
    let mut next = vec![0.0; current.len()];
    engine.step(&t, &mut next)?;
    Ok(JointPolicy::from_raw(inst.dims(), next))
}

/// Iterates [`bpg_step`] from `q0 ∈ ri(Δ_Ξ)` until the step residual drops
/// below `eps_fixed` or `max_inner` steps were taken.
pub fn run_bpg(
    inst: &ProblemInstance,
    pattern: &SupportPattern,
    cfg: &BpgConfig,
    q0: &JointPolicy,
) -> Result<BpgOutcome> {
    cfg.limits.validate()?;
    check_shapes(inst, q0)?;
    let engine = Engine::new(inst, pattern, cfg)?;
    check_on_pattern(q0, pattern, true)?;
    let clock = Stopwatch::start();
    let limits = cfg.limits;
    let mut current = restrict(q0, pattern);
    let mut next = vec![0.0; current.len()];
    let mut t = vec![0.0; inst.dims().num_b];
    let mut trace = Vec::new();
    let mut marginals = Vec::new();
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut last_recorded_f = None;
    while iterations < limits.max_inner {
        engine.marginal(&current, &mut t);
        if limits.record_marginals {
            marginals.push(t.clone());
        }
        engine.step(&t, &mut next)?;
        residual = l2_distance(&next, &current);
        core::mem::swap(&mut current, &mut next);
        iterations += 1;
        converged = residual < limits.eps_fixed;
        let last = converged || iterations == limits.max_inner;
        if iterations % limits.stride == 0 || last {
            let (f, g) = engine.objective(&current);
            trace.push(TraceRecord {
                n: iterations,
                objective_f: f,
                g_val: g,
                residual,
                elapsed_s: clock.elapsed_s(),
            });
            last_recorded_f = Some(f);
        }
        if converged {
            break;
        }
    }
    if limits.record_marginals {
        engine.marginal(&current, &mut t);
        marginals.push(t.clone());
    }
    let final_f = last_recorded_f.unwrap_or_else(|| engine.objective(&current).0);
    Ok(BpgOutcome {
        policy: JointPolicy::from_raw(inst.dims(), current),
        iterations,
        trace,
        converged,
        final_f,
        final_residual: residual,
        marginals,
    })
}

/// `F(q, η)` for the given configuration.
pub fn objective(inst: &ProblemInstance, pattern: &SupportPattern, cfg: &BpgConfig, q: &JointPolicy) -> Result<f64> {
    check_shapes(inst, q)?;
    let engine = Engine::new(inst, pattern, cfg)?;
    Ok(engine.objective(&restrict(q, pattern)).0)
}

/// Both sides of the rate certificate
///
/// ```text
/// n (F(q^n) − F(q_ref)) + Σ_{k<n} D_B(T(q^{k+1}), T(q^k))  ≤  Σ_s p_s D(q_ref^s, q^{0,s})
/// ```
///
/// for the run `outcome` started at `q0`. Returns `None` when the run did not
/// keep its marginals or has no trace record for iterate `n`.
pub fn certificate_gap(
    inst: &ProblemInstance,
    pattern: &SupportPattern,
    cfg: &BpgConfig,
    q0: &JointPolicy,
    q_ref: &JointPolicy,
    outcome: &BpgOutcome,
    n: usize,
) -> Option<(f64, f64)> {
    let dims = inst.dims();
    let per_state = dims.per_state();
    let rhs = compensated((0..dims.num_s).map(|s| {
        let r = &q_ref.as_slice()[s * per_state..(s + 1) * per_state];
        let z = &q0.as_slice()[s * per_state..(s + 1) * per_state];
        inst.prior()[s] * kl_divergence(r, z).map(|d| d.to_f64()).unwrap_or(f64::INFINITY)
    }));
    if n == 0 {
        return Some((0.0, rhs));
    }
    if outcome.marginals.len() <= n {
        return None;
    }
    let f_n = outcome.trace.iter().find(|r| r.n == n)?.objective_f;
    let f_ref = objective(inst, pattern, cfg, q_ref).ok()?;
    let drift = compensated(
        outcome.marginals[..=n]
            .windows(2)
            .map(|w| kl_divergence(&w[1], &w[0]).map(|d| d.to_f64()).unwrap_or(f64::INFINITY)),
    );
    Some((n as f64 * (f_n - f_ref) + drift, rhs))
}
