//! Independent checks used by the tests and the acceptance suite.
//!
//! None of these go through the solver: [`kkt_residual`] evaluates the
//! first-order conditions directly, [`ghn_analytic`] solves the 2×2×2 game in
//! closed form up to a scalar root, and [`grid_bruteforce`] scans rational
//! points of the simplex product.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::entropy::g_value;
use crate::generators::ghn_instance;
use crate::instance::{b_marginal, check_shapes, expected_cost, JointPolicy, ProblemInstance};
use crate::sum::compensated;
use crate::{Error, Result};

/// Entries at or below this are treated as off-support by default.
pub const SUPPORT_FLOOR: f64 = 1e-9;

/// Largest grid accepted by [`grid_bruteforce`].
pub const MAX_RESOLUTION: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Max over states of the spread of `c[s,a,b] + λ ln(q[s,a,b]/t_b)` on the support.
    pub stationarity_residual: f64,
    /// `|g(q)|`.
    pub primal_feasibility: f64,
    /// `|λ g(q)|`.
    pub complementarity: f64,
}

/// Stationarity holds iff the per-state residuals are constant on the
/// support; the constant is the simplex multiplier, so only the spread matters.
pub fn kkt_residual(inst: &ProblemInstance, q: &JointPolicy, lambda: f64, support_floor: f64) -> Result<KktReport> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidLambda(lambda));
    }
    check_shapes(inst, q)?;
    let dims = inst.dims();
    let mut t = vec![0.0; dims.num_b];
    b_marginal(dims, inst.prior(), q.as_slice(), &mut t);
    let mut worst = 0.0_f64;
    for s in 0..dims.num_s {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, (x, c)) in q.state(s).iter().zip(inst.state_costs(s)).enumerate() {
            if *x <= support_floor {
                continue;
            }
            let r = c + lambda * libm::log(x / t[i % dims.num_b]);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if lo > hi {
            return Err(Error::EmptySupport(s));
        }
        worst = worst.max(hi - lo);
    }
    let g = g_value(inst, q).to_f64();
    Ok(KktReport {
        stationarity_residual: worst,
        primal_feasibility: g.abs(),
        complementarity: (lambda * g).abs(),
    })
}

/// Closed-form solution of the 2×2×2 game.
#[derive(Debug, Clone, PartialEq)]
pub struct GhnSolution {
    /// Mass on the zero-cost cell of each state.
    pub gamma: f64,
    pub policy: JointPolicy,
    pub value: f64,
}

/// Entropy of `(γ, (1−γ)/3, (1−γ)/3, (1−γ)/3)` minus `ln 2`.
fn ghn_equation(gamma: f64) -> f64 {
    let rest = 1.0 - gamma;
    let xlx = |x: f64| if x > 0.0 { x * libm::log(x) } else { 0.0 };
    -xlx(gamma) - xlx(rest) + rest * libm::log(3.0) - core::f64::consts::LN_2
}

/// By symmetry the marginal is uniform, so `g = 0` reduces to the entropy
/// of each state's joint equalling `ln 2`. The left side is decreasing on
/// `[1/4, 1]`, so bisection on that bracket is safe.
pub fn ghn_analytic() -> GhnSolution {
    let (mut lo, mut hi) = (0.25_f64, 1.0_f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if ghn_equation(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    let off = (1.0 - gamma) / 3.0;
    let q = vec![gamma, off, off, off, off, off, off, gamma];
    let inst = ghn_instance();
    let policy = JointPolicy::new(inst.dims(), q).expect("rows sum to one");
    let value = expected_cost(&inst, &policy).expect("matching shapes");
    GhnSolution { gamma, policy, value }
}

/// Best feasible grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBest {
    pub value: f64,
    pub policy: JointPolicy,
    /// Candidate pairs whose constraint value was evaluated.
    pub evaluated: u64,
}

/// All compositions of `total` into `parts` nonnegative integers, flat, in
/// lexicographic order.
fn compositions(total: u32, parts: usize) -> Vec<u32> {
    fn fill(rest: u32, slot: usize, cur: &mut Vec<u32>, out: &mut Vec<u32>) {
        if slot + 1 == cur.len() {
            cur[slot] = rest;
            out.extend_from_slice(cur);
            return;
        }
        for v in 0..=rest {
            cur[slot] = v;
            fill(rest - v, slot + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    fill(total, 0, &mut vec![0; parts], &mut out);
    out
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * libm::log(x)
    } else {
        0.0
    }
}

/// Grid points of one state, sorted by cost (ties by grid index).
struct StateGrid {
    points: Vec<u32>,
    /// `(cost, grid index)` in scan order.
    order: Vec<(f64, usize)>,
    /// `Σ q ln q` per grid index.
    neg_entropy: Vec<f64>,
}

impl StateGrid {
    fn new(costs: &[f64], resolution: u32) -> Self {
        let k = costs.len();
        let points = compositions(resolution, k);
        let r = resolution as f64;
        let n = points.len() / k;
        let mut order = Vec::with_capacity(n);
        let mut neg_entropy = Vec::with_capacity(n);
        for (i, point) in points.chunks(k).enumerate() {
            let cost = compensated(point.iter().zip(costs).map(|(m, c)| c * (*m as f64) / r));
            order.push((cost, i));
            neg_entropy.push(compensated(point.iter().map(|m| xlnx(*m as f64 / r))));
        }
        order.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then(x.1.cmp(&y.1)));
        StateGrid {
            points,
            order,
            neg_entropy,
        }
    }

    fn point(&self, i: usize, k: usize) -> &[u32] {
        &self.points[i * k..(i + 1) * k]
    }
}

/// Exhaustive minimum of the expected cost over feasible points of the grid
/// with denominator `resolution`, by branch and bound over cost-sorted
/// per-state compositions (exact: a branch is cut only once its cost alone
/// exceeds the incumbent). `Ok(None)` means no grid point satisfies
/// `g ≤ 0`; identical per-state points have `g = −H(a|b) ≤ 0`, so this only
/// happens if rounding pushes all of those above zero.
///
/// Only tiny shapes are accepted: `|A|·|B| ≤ 4`, `|S| ≤ 2`.
pub fn grid_bruteforce(inst: &ProblemInstance, resolution: usize) -> Result<Option<GridBest>> {
    let dims = inst.dims();
    if dims.per_state() > 4 || dims.num_s > 2 {
        return Err(Error::TooLarge("grid oracle needs |A|·|B| <= 4 and |S| <= 2"));
    }
    if resolution > MAX_RESOLUTION {
        return Err(Error::TooLarge("grid resolution must be at most 200"));
    }
    if resolution == 0 {
        return Err(Error::InvalidConfig("grid resolution must be positive"));
    }
    let k = dims.per_state();
    let nb = dims.num_b;
    let r = resolution as f64;
    let prior = inst.prior();
    let grids: Vec<StateGrid> = (0..dims.num_s)
        .map(|s| StateGrid::new(inst.state_costs(s), resolution as u32))
        .collect();

    // g = Σ_s p_s Σ q ln q − Σ_b t_b ln t_b
    let g_of = |idx: &[usize]| -> f64 {
        let mut t = [0.0_f64; 4];
        let mut own = 0.0;
        for (s, &i) in idx.iter().enumerate() {
            own += prior[s] * grids[s].neg_entropy[i];
            for (j, m) in grids[s].point(i, k).iter().enumerate() {
                t[j % nb] += prior[s] * (*m as f64) / r;
            }
        }
        own - t[..nb].iter().map(|x| xlnx(*x)).sum::<f64>()
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluated = 0_u64;
    let better = |total: f64, idx: &[usize], best: &Option<(f64, Vec<usize>)>| match best {
        None => true,
        Some((v, bi)) => total < *v || (total == *v && idx < bi.as_slice()),
    };
    match dims.num_s {
        1 => {
            for &(cost, i) in &grids[0].order {
                evaluated += 1;
                if g_of(&[i]) <= 0.0 {
                    best = Some((prior[0] * cost, vec![i]));
                    break;
                }
            }
        }
        _ => {
            let floor1 = prior[1] * grids[1].order[0].0;
            for &(c0, i0) in &grids[0].order {
                let head = prior[0] * c0;
                if matches!(&best, Some((v, _)) if head + floor1 > *v) {
                    break;
                }
                for &(c1, i1) in &grids[1].order {
                    let total = head + prior[1] * c1;
                    if matches!(&best, Some((v, _)) if total > *v) {
                        break;
                    }
                    let idx = [i0, i1];
                    if !better(total, &idx, &best) {
                        continue;
                    }
                    evaluated += 1;
                    if g_of(&idx) <= 0.0 {
                        best = Some((total, idx.to_vec()));
                        // anything later in this row costs at least as much
                        break;
                    }
                }
            }
        }
    }

    let Some((_, idx)) = best else {
        return Ok(None);
    };
    let q: Vec<f64> = idx
        .iter()
        .enumerate()
        .flat_map(|(s, &i)| grids[s].point(i, k).iter().map(|m| *m as f64 / r))
        .collect();
    let policy = JointPolicy::new(dims, q)?;
    let value = expected_cost(inst, &policy)?;
    Ok(Some(GridBest {
        value,
        policy,
        evaluated,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Dims;

    #[test]
    fn ghn_closed_form() {
        let sol = ghn_analytic();
        assert!((sol.gamma - 0.81071).abs() < 1e-5);
        assert!((sol.value - 0.18929).abs() < 1e-5);
        assert!((sol.value - (1.0 - sol.gamma)).abs() < 1e-15);
        assert!(g_value(&ghn_instance(), &sol.policy).to_f64().abs() < 1e-10);
    }

    #[test]
    fn kkt_at_closed_form() {
        let sol = ghn_analytic();
        let lam = -1.0 / libm::log((1.0 - sol.gamma) / (3.0 * sol.gamma));
        let report = kkt_residual(&ghn_instance(), &sol.policy, lam, SUPPORT_FLOOR).unwrap();
        assert!(report.stationarity_residual < 1e-12);
        let report = kkt_residual(&ghn_instance(), &sol.policy, 0.39166, SUPPORT_FLOOR).unwrap();
        assert!(report.stationarity_residual <= 1e-4);
        assert!(report.primal_feasibility < 1e-10);
    }

    #[test]
    fn kkt_at_uniform_is_cost_spread() {
        let inst = ghn_instance();
        let q = JointPolicy::uniform(inst.dims());
        let report = kkt_residual(&inst, &q, 0.7, SUPPORT_FLOOR).unwrap();
        assert!((report.stationarity_residual - 1.0).abs() < 1e-15);
        let g = core::f64::consts::LN_2;
        assert!((report.primal_feasibility - g).abs() < 1e-12);
        assert!((report.complementarity - 0.7 * g).abs() < 1e-12);
    }

    #[test]
    fn kkt_errors() {
        let inst = ghn_instance();
        let q = JointPolicy::uniform(inst.dims());
        assert_eq!(kkt_residual(&inst, &q, 0.0, SUPPORT_FLOOR).unwrap_err(), Error::InvalidLambda(0.0));
        assert_eq!(kkt_residual(&inst, &q, 1.0, 0.5).unwrap_err(), Error::EmptySupport(0));
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(3, 2), vec![0, 3, 1, 2, 2, 1, 3, 0]);
        assert_eq!(compositions(100, 4).len() / 4, 176_851);
    }

    #[test]
    fn grid_on_ghn() {
        let best = grid_bruteforce(&ghn_instance(), 100).unwrap().unwrap();
        assert!(best.value >= 0.18929 - 1e-5);
        assert!(best.value - 0.18929 < 5e-3);
        assert!(g_value(&ghn_instance(), &best.policy).to_f64() <= 1e-15);
    }

    #[test]
    fn grid_hits_attainable_minimum() {
        let d = Dims::new(2, 2, 2);
        let cost = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let inst = ProblemInstance::new(d, vec![0.5, 0.5], cost).unwrap();
        for res in [1, 2, 10] {
            let best = grid_bruteforce(&inst, res).unwrap().unwrap();
            assert_eq!(best.value, 0.0);
        }
    }

    #[test]
    fn grid_single_state() {
        // with one state g = −H(a | b) ≤ 0, so the plain minimum is feasible
        let d = Dims::new(2, 2, 1);
        let inst = ProblemInstance::new(d, vec![1.0], vec![3.0, 1.0, 2.0, 4.0]).unwrap();
        let best = grid_bruteforce(&inst, 5).unwrap().unwrap();
        assert_eq!(best.value, 1.0);
    }

    #[test]
    fn grid_vertices_and_guards() {
        // resolution 1 only offers vertices; pairs on different b's have
        // g = ln 2, so both states must share a b
        let inst = ghn_instance();
        let best = grid_bruteforce(&inst, 1).unwrap().unwrap();
        assert_eq!(best.value, 0.5);
        let d = Dims::new(2, 2, 2);
        assert!(grid_bruteforce(&ProblemInstance::new(Dims::new(3, 2, 1), vec![1.0], vec![0.0; 6]).unwrap(), 4).is_err());
        assert!(grid_bruteforce(&ProblemInstance::new(d, vec![0.5, 0.5], vec![0.0; 8]).unwrap(), 201).is_err());
    }
}
