//! Costs that do not depend on the action `a`.
//!
//! If `c[s,a,b] = ĉ[s,b]`, the problem is equivalent to a distortion-rate
//! problem over `q̂ ∈ Δ(B)^S` with mutual-information budget `ln|A|`:
//!
//! ```text
//! minimize Σ_s p_s Σ_b ĉ[s,b] q̂[s,b]   s.t.   Σ_s p_s Σ_b q̂[s,b] ln(q̂[s,b] / T̂(q̂)_b) ≤ ln|A|
//! ```
//!
//! Both problems share their optimal value and `q = q̂/|A|` maps solutions
//! back. For a fixed multiplier the reduced problem is solved by the
//! Blahut–Arimoto alternation between `q̂` and its marginal `t`.

use alloc::vec;
use alloc::vec::Vec;

use crate::attain::solve_delta0;
use crate::entropy::{g_value, psi, ExtendedReal};
use crate::instance::{l2_distance, Dims, JointPolicy, ProblemInstance};
use crate::lagrange::{BisectionConfig, OuterRecord, Phase, SolveReport};
use crate::sum::compensated;
use crate::timer::Stopwatch;
use crate::{Error, Result, SIMPLEX_TOL};

/// Relative tolerance for "constant in `a`".
pub const REDUCIBLE_TOL: f64 = 1e-12;

/// Prior and `(s, b)` cost of an action-independent instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedInstance {
    num_a: usize,
    num_b: usize,
    prior: Vec<f64>,
    /// Flat `(s, b)`.
    cost: Vec<f64>,
}

impl ReducedInstance {
    /// `cost` is nested `[s][b]`.
    pub fn new(num_a: usize, prior: Vec<f64>, cost: &[Vec<f64>]) -> Result<Self> {
        if num_a < 2 {
            return Err(Error::TooFewActions(num_a));
        }
        let num_b = cost.first().map_or(0, Vec::len);
        if num_b == 0 || cost.len() != prior.len() || cost.iter().any(|r| r.len() != num_b) {
            return Err(Error::ShapeMismatch("reduced cost must be |S| rows of |B| entries"));
        }
        Ok(ReducedInstance {
            num_a,
            num_b,
            prior,
            cost: cost.concat(),
        })
    }

    pub fn num_a(&self) -> usize {
        self.num_a
    }

    pub fn num_b(&self) -> usize {
        self.num_b
    }

    pub fn num_s(&self) -> usize {
        self.prior.len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn cost(&self, s: usize, b: usize) -> f64 {
        self.cost[s * self.num_b + b]
    }

    pub fn state_costs(&self, s: usize) -> &[f64] {
        &self.cost[s * self.num_b..(s + 1) * self.num_b]
    }

    /// The mutual-information budget `ln|A|`.
    pub fn budget(&self) -> f64 {
        libm::log(self.num_a as f64)
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.num_a, self.num_b, self.num_s())
    }

    /// The full instance `c[s,a,b] = ĉ[s,b]`.
    pub fn tile(&self) -> ProblemInstance {
        let dims = self.dims();
        let cost = (0..dims.len())
            .map(|i| {
                let s = i / dims.per_state();
                self.cost(s, i % self.num_b)
            })
            .collect();
        ProblemInstance::new(dims, self.prior.clone(), cost).expect("tiled shape is consistent")
    }
}

/// The reduction when every `(s, b)` slice is constant in `a`.
pub fn detect_reducible(inst: &ProblemInstance) -> Option<ReducedInstance> {
    let dims = inst.dims();
    let mut cost = vec![vec![0.0; dims.num_b]; dims.num_s];
    for (s, row) in cost.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            let slice = (0..dims.num_a).map(|a| inst.cost(s, a, b));
            let (lo, hi, mag) = slice.fold((f64::INFINITY, f64::NEG_INFINITY, 0.0_f64), |(lo, hi, m), c| {
                (lo.min(c), hi.max(c), m.max(c.abs()))
            });
            if hi - lo > REDUCIBLE_TOL * mag {
                return None;
            }
            *entry = inst.cost(s, 0, b);
        }
    }
    ReducedInstance::new(dims.num_a, inst.prior().to_vec(), &cost).ok()
}

/// `T̂(q̂)_b = Σ_s p_s q̂[s,b]`.
fn reduced_marginal(red: &ReducedInstance, q_hat: &[f64], out: &mut [f64]) {
    for (b, t) in out.iter_mut().enumerate() {
        *t = compensated((0..red.num_s()).map(|s| red.prior[s] * q_hat[s * red.num_b + b]));
    }
}

/// The reduced constraint functional `Σ_s p_s D(q̂^s, T̂(q̂))`.
pub fn reduced_g(red: &ReducedInstance, q_hat: &[f64]) -> ExtendedReal {
    if q_hat.len() != red.num_s() * red.num_b {
        return ExtendedReal::PosInfinity;
    }
    let mut t = vec![0.0; red.num_b];
    reduced_marginal(red, q_hat, &mut t);
    let mut terms = Vec::with_capacity(q_hat.len());
    for s in 0..red.num_s() {
        for b in 0..red.num_b {
            match psi(q_hat[s * red.num_b + b], t[b]) {
                ExtendedReal::Finite(v) => terms.push(red.prior[s] * v),
                ExtendedReal::PosInfinity => return ExtendedReal::PosInfinity,
            }
        }
    }
    ExtendedReal::Finite(compensated(terms))
}

/// Limit of a Blahut–Arimoto run.
#[derive(Debug, Clone, PartialEq)]
pub struct BaIterate {
    /// Flat `(s, b)` conditional.
    pub q_hat: Vec<f64>,
    /// `T̂(q_hat)`.
    pub t: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// `q̂[s,b] ∝ t_b exp(−ĉ[s,b]/λ̂)` for every state, stabilized in the log domain.
fn conditional_from(red: &ReducedInstance, lam_hat: f64, t: &[f64], out: &mut [f64]) -> Result<()> {
    let ln_t: Vec<f64> = t
        .iter()
        .map(|x| if *x > 0.0 { libm::log(*x) } else { f64::NEG_INFINITY })
        .collect();
    for (s, row) in out.chunks_mut(red.num_b).enumerate() {
        let mut max = f64::NEG_INFINITY;
        for (b, x) in row.iter_mut().enumerate() {
            *x = ln_t[b] - red.cost(s, b) / lam_hat;
            max = max.max(*x);
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::NumericalUnderflow(s));
        }
        row.iter_mut().for_each(|x| *x = libm::exp(*x - max));
        let z = compensated(row.iter().copied());
        row.iter_mut().for_each(|x| *x /= z);
    }
    Ok(())
}

/// Alternates `q̂_n = softmax_b(ln t_n − ĉ/λ̂)` and `t_{n+1} = T̂(q̂_n)` until
/// `‖q̂_n − q̂_{n−1}‖₂ < eps_f`.
pub fn ba_iteration(red: &ReducedInstance, lam_hat: f64, t0: &[f64], eps_f: f64, max_inner: usize) -> Result<BaIterate> {
    if !(lam_hat > 0.0) || !lam_hat.is_finite() {
        return Err(Error::InvalidLambda(lam_hat));
    }
    if t0.len() != red.num_b {
        return Err(Error::ShapeMismatch("starting marginal must have |B| entries"));
    }
    if let Some(i) = t0.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::NotInterior(i));
    }
    let sum = compensated(t0.iter().copied());
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotNormalized { state: 0, sum });
    }
    let mut t: Vec<f64> = t0.iter().map(|x| x / sum).collect();
    let mut q_prev = vec![0.0; red.num_s() * red.num_b];
    let mut q = q_prev.clone();
    for n in 1..=max_inner {
        conditional_from(red, lam_hat, &t, &mut q)?;
        reduced_marginal(red, &q, &mut t);
        if n > 1 {
            let residual = l2_distance(&q, &q_prev);
            if residual < eps_f {
                return Ok(BaIterate {
                    q_hat: q,
                    t,
                    iterations: n,
                    residual,
                });
            }
        }
        core::mem::swap(&mut q, &mut q_prev);
    }
    Err(Error::MaxInnerExceeded(max_inner))
}

/// `q[s,a,b] = q̂[s,b] / |A|`.
pub fn lift_policy(red: &ReducedInstance, q_hat: &[f64]) -> Result<JointPolicy> {
    if q_hat.len() != red.num_s() * red.num_b {
        return Err(Error::ShapeMismatch("q_hat must have |S|·|B| entries"));
    }
    let dims = red.dims();
    let inv = 1.0 / red.num_a as f64;
    let q = (0..dims.len())
        .map(|i| {
            let s = i / dims.per_state();
            q_hat[s * red.num_b + i % red.num_b] * inv
        })
        .collect();
    JointPolicy::new(dims, q)
}

/// `q̂[s,b] = Σ_a q[s,a,b]`.
fn collapse(q: &JointPolicy) -> Vec<f64> {
    let d = q.dims();
    (0..d.num_s)
        .flat_map(|s| (0..d.num_b).map(move |b| (s, b)))
        .map(|(s, b)| compensated((0..d.num_a).map(|a| q.get(s, a, b))))
        .collect()
}

/// Result of [`ba_solve`]: the lifted report plus the reduced solution.
#[derive(Debug, Clone, PartialEq)]
pub struct BaReport {
    /// Policy lifted to the full shape; `g_val` is the full constraint value.
    pub report: SolveReport,
    /// Flat `(s, b)` reduced solution.
    pub q_hat: Vec<f64>,
    pub reduced_g: f64,
}

fn reduced_value(red: &ReducedInstance, q_hat: &[f64]) -> f64 {
    compensated((0..red.num_s()).map(|s| {
        let row = &q_hat[s * red.num_b..(s + 1) * red.num_b];
        red.prior[s] * compensated(row.iter().zip(red.state_costs(s)).map(|(q, c)| q * c))
    }))
}

/// Bisection over `λ̂` with the Blahut–Arimoto inner solver.
pub fn ba_solve(red: &ReducedInstance, cfg: &BisectionConfig) -> Result<BaReport> {
    cfg.validate()?;
    let clock = Stopwatch::start();
    // validation and normalization go through the tiled instance
    let valid = crate::instance::validate_instance(red.tile())?;
    let red = &ReducedInstance {
        prior: valid.prior().to_vec(),
        ..red.clone()
    };
    let offsets: Vec<f64> = (0..red.num_s())
        .map(|s| red.state_costs(s).iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let offset = compensated(red.prior.iter().zip(&offsets).map(|(p, o)| p * o));
    let shifted_cost: Vec<Vec<f64>> = (0..red.num_s())
        .map(|s| red.state_costs(s).iter().map(|c| c - offsets[s]).collect())
        .collect();
    let norm = ReducedInstance::new(red.num_a, red.prior.clone(), &shifted_cost)?;
    let budget = norm.budget();
    let b = norm.num_b;
    let finish = |q_hat: Vec<f64>, lambda: f64, phase: Phase, outer: usize, inner: usize, traces: Vec<OuterRecord>| {
        let policy = lift_policy(&norm, &q_hat)?;
        let reduced = reduced_g(&norm, &q_hat).to_f64();
        Ok(BaReport {
            report: SolveReport {
                value: reduced_value(&norm, &q_hat) + offset,
                lambda,
                g_val: g_value(&norm.tile(), &policy).to_f64(),
                policy,
                phase,
                outer_iterations: outer,
                inner_iterations_total: inner,
                inner_unconverged: 0,
                traces,
                inner_traces: Vec::new(),
                elapsed_s: clock.elapsed_s(),
                offsets: offsets.clone(),
            },
            q_hat,
            reduced_g: reduced,
        })
    };

    if shifted_cost.iter().flatten().all(|c| *c == 0.0) {
        let uniform = vec![1.0 / b as f64; norm.num_s() * b];
        return finish(uniform, 0.0, Phase::Degenerate, 0, 0, Vec::new());
    }
    let attain = solve_delta0(&norm.tile(), &cfg.limits(), None)?;
    if attain.attainable {
        return finish(collapse(&attain.policy), 0.0, Phase::Attainable, 0, attain.iterations, Vec::new());
    }

    let upper = crate::lagrange::lambda_max(&norm.tile())?;
    let uniform_t = vec![1.0 / b as f64; b];
    let top = ba_iteration(&norm, upper, &uniform_t, cfg.eps_f, cfg.max_inner)?;
    let g_top = reduced_g(&norm, &top.q_hat).to_f64() - budget;
    if !(g_top < 0.0) {
        return Err(Error::BracketFailure { g: g_top });
    }
    let mut inner_total = attain.iterations + top.iterations;
    let (mut lo, mut hi) = (0.0_f64, upper);
    let mut current = (upper, top);
    let mut traces = Vec::new();
    let mut k = 0;
    while hi - lo >= cfg.eps_b {
        if k >= cfg.max_outer {
            return Err(Error::MaxOuterExceeded(cfg.max_outer));
        }
        let lambda = 0.5 * (lo + hi);
        // blended for the same reason as the full solver's warm start
        let start: Vec<f64> = if cfg.warm_start {
            let w = crate::lagrange::WARM_MIX;
            let raw: Vec<f64> = current.1.t.iter().zip(&uniform_t).map(|(t, u)| (1.0 - w) * t + w * u).collect();
            let sum = compensated(raw.iter().copied());
            raw.into_iter().map(|x| x / sum).collect()
        } else {
            uniform_t.clone()
        };
        let out = ba_iteration(&norm, lambda, &start, cfg.eps_f, cfg.max_inner)?;
        let g = reduced_g(&norm, &out.q_hat).to_f64() - budget;
        if g < -cfg.zero_band {
            hi = lambda;
        } else if g > cfg.zero_band {
            lo = lambda;
        } else {
            lo = lambda;
            hi = lambda;
        }
        inner_total += out.iterations;
        traces.push(OuterRecord {
            k,
            lambda,
            value: reduced_value(&norm, &out.q_hat) + offset,
            g,
            residual: out.residual,
            elapsed_s: clock.elapsed_s(),
            inner_iterations: out.iterations,
            inner_converged: true,
            error_to_final: None,
        });
        current = (lambda, out);
        k += 1;
    }
    let (lambda, out) = current;
    finish(out.q_hat, lambda, Phase::Active, k, inner_total, traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::ghn_instance;

    fn two_state() -> ReducedInstance {
        ReducedInstance::new(2, vec![0.5, 0.5], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn detect_and_roundtrip() {
        assert!(detect_reducible(&ghn_instance()).is_none());
        let red = ReducedInstance::new(3, vec![0.2, 0.8], &[vec![0.3, 1.0, 2.0], vec![5.0, 0.0, 0.1]]).unwrap();
        let back = detect_reducible(&red.tile()).unwrap();
        assert_eq!(back, red);
        assert_eq!(back.cost(1, 2), 0.1);
    }

    #[test]
    fn single_state_is_softmax() {
        let red = ReducedInstance::new(2, vec![1.0], &[vec![0.0, 0.5, 2.0]]).unwrap();
        let out = ba_iteration(&red, 0.7, &[1.0 / 3.0; 3], 1e-14, 10_000).unwrap();
        // with one state t = q̂, and the only fixed point reachable from the
        // interior keeps the argmin; the iteration drives q̂ toward the
        // cheapest b, one factor exp(−Δc/λ̂) per step
        assert!(out.q_hat[0] > 1.0 - 1e-6);
        for (q, t) in out.q_hat.iter().zip(&out.t) {
            assert!((q - t).abs() < 1e-15);
        }
    }

    #[test]
    fn first_pass_matches_softmax_formula() {
        let red = ReducedInstance::new(2, vec![1.0], &[vec![0.0, 0.5, 2.0]]).unwrap();
        let lam = 0.7;
        let mut q = vec![0.0; 3];
        conditional_from(&red, lam, &[1.0 / 3.0; 3], &mut q).unwrap();
        let w: Vec<f64> = [0.0f64, 0.5, 2.0].iter().map(|c| (-c / lam).exp()).collect();
        let z: f64 = w.iter().sum();
        for (x, y) in q.iter().zip(&w) {
            assert!((x - y / z).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_cost_keeps_uniform() {
        let red = ReducedInstance::new(2, vec![0.5, 0.5], &[vec![1.0; 4], vec![1.0; 4]]).unwrap();
        let out = ba_iteration(&red, 0.3, &[0.25; 4], 1e-13, 100).unwrap();
        assert!(out.q_hat.iter().all(|x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn lifted_policy_shapes() {
        let red = two_state();
        let q = lift_policy(&red, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(q, JointPolicy::uniform(red.dims()));
        let q = lift_policy(&red, &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(q.get(0, 0, 1), 0.5);
        assert_eq!(q.get(1, 1, 1), 0.5);
        assert_eq!(q.get(1, 1, 0), 0.0);
    }

    #[test]
    fn lift_identity_and_marginal() {
        let red = ReducedInstance::new(3, vec![0.3, 0.7], &[vec![0.0, 1.0, 4.0], vec![2.0, 0.0, 1.0]]).unwrap();
        let q_hat = [0.2, 0.3, 0.5, 0.6, 0.1, 0.3];
        let lifted = lift_policy(&red, &q_hat).unwrap();
        let full = g_value(&red.tile(), &lifted).to_f64();
        let reduced = reduced_g(&red, &q_hat).to_f64();
        assert!((full - (reduced - red.budget())).abs() < 1e-12);

        let out = ba_iteration(&red, 0.8, &[0.2, 0.5, 0.3], 1e-13, 100_000).unwrap();
        let mut t = vec![0.0; 3];
        reduced_marginal(&red, &out.q_hat, &mut t);
        for (x, y) in t.iter().zip(&out.t) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn iteration_errors() {
        let red = two_state();
        assert_eq!(ba_iteration(&red, 0.5, &[1.0, 0.0], 1e-12, 10).unwrap_err(), Error::NotInterior(1));
        assert!(matches!(
            ba_iteration(&red, 0.5, &[0.9, 0.1], 1e-300, 3),
            Err(Error::MaxInnerExceeded(3))
        ));
    }

    #[test]
    fn solve_matches_full_solver_on_tiled_instance() {
        // I(b; s) = ln 3 at the argmins exceeds the ln 2 budget
        let cost = [vec![0.0, 1.0, 2.0], vec![1.5, 0.0, 1.0], vec![1.0, 2.0, 0.0]];
        let red = ReducedInstance::new(2, vec![0.3, 0.3, 0.4], &cost).unwrap();
        let cfg = BisectionConfig::default();
        let ba = ba_solve(&red, &cfg).unwrap();
        let full = crate::lagrange::full_solve(red.tile(), &cfg).unwrap();
        assert_eq!(ba.report.phase, Phase::Active);
        assert!((ba.report.value - full.value).abs() < 1e-8);
        assert!((ba.report.lambda - full.lambda).abs() < 1e-9);
    }

    #[test]
    fn large_budget_is_attainable() {
        // each state's argmin b differs, so I(b;s) = ln 2 < ln 4
        let red = ReducedInstance::new(4, vec![0.5, 0.5], &[vec![0.0, 3.0], vec![2.0, 1.0]]).unwrap();
        let ba = ba_solve(&red, &BisectionConfig::default()).unwrap();
        assert_eq!(ba.report.phase, Phase::Attainable);
        assert!((ba.report.value - 0.5).abs() < 1e-15);
    }
}
