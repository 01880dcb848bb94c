//! Problem data, joint policies, support patterns and cost bookkeeping.
//!
//! Every tensor is stored flat in `(s, a, b)` order: entry `(s, a, b)` lives
//! at `(s * |A| + a) * |B| + b`, so the `|A|·|B|` entries of one state are
//! contiguous.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::sum::compensated;
use crate::{Error, Result, SIMPLEX_TOL};

/// Alphabet sizes `|A|`, `|B|`, `|S|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub num_a: usize,
    pub num_b: usize,
    pub num_s: usize,
}

impl Dims {
    pub const fn new(num_a: usize, num_b: usize, num_s: usize) -> Self {
        Dims { num_a, num_b, num_s }
    }

    /// Entries per state, `|A|·|B|`.
    #[inline]
    pub const fn per_state(&self) -> usize {
        self.num_a * self.num_b
    }

    /// Total number of entries, `|S|·|A|·|B|`.
    #[inline]
    pub const fn len(&self) -> usize {
        self.num_s * self.num_a * self.num_b
    }

    #[inline]
    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn index(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.num_a + a) * self.num_b + b
    }
}

/// Raw problem data: prior over states and the cost tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    dims: Dims,
    prior: Vec<f64>,
    cost: Vec<f64>,
}

impl ProblemInstance {
    /// Builds an instance from a flat `(s, a, b)` cost vector. Only shapes are
    /// checked here; see [`validate_instance`] for the problem hypotheses.
    pub fn new(dims: Dims, prior: Vec<f64>, cost: Vec<f64>) -> Result<Self> {
        if dims.num_a == 0 || dims.num_b == 0 || dims.num_s == 0 {
            return Err(Error::ShapeMismatch("every alphabet must be nonempty"));
        }
        if prior.len() != dims.num_s {
            return Err(Error::ShapeMismatch("prior length differs from |S|"));
        }
        if cost.len() != dims.len() {
            return Err(Error::ShapeMismatch("cost length differs from |S|·|A|·|B|"));
        }
        Ok(ProblemInstance { dims, prior, cost })
    }

    /// Builds an instance from a cost nested as `[s][a][b]`.
    pub fn from_nested(prior: Vec<f64>, cost: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_s = cost.len();
        let num_a = cost.first().map_or(0, Vec::len);
        let num_b = cost.first().and_then(|c| c.first()).map_or(0, Vec::len);
        let dims = Dims::new(num_a, num_b, num_s);
        let mut flat = Vec::with_capacity(dims.len());
        for per_state in cost {
            if per_state.len() != num_a {
                return Err(Error::ShapeMismatch("ragged cost tensor (a axis)"));
            }
            for row in per_state {
                if row.len() != num_b {
                    return Err(Error::ShapeMismatch("ragged cost tensor (b axis)"));
                }
                flat.extend_from_slice(row);
            }
        }
        ProblemInstance::new(dims, prior, flat)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Flat `(s, a, b)` cost vector.
    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    /// The `|A|·|B|` costs of state `s`, row-major in `(a, b)`.
    pub fn state_costs(&self, s: usize) -> &[f64] {
        let n = self.dims.per_state();
        &self.cost[s * n..(s + 1) * n]
    }

    #[inline]
    pub fn cost(&self, s: usize, a: usize, b: usize) -> f64 {
        self.cost[self.dims.index(s, a, b)]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        nest(self.dims, &self.cost)
    }
}

pub(crate) fn nest(dims: Dims, flat: &[f64]) -> Vec<Vec<Vec<f64>>> {
    (0..dims.num_s)
        .map(|s| {
            (0..dims.num_a)
                .map(|a| {
                    let start = dims.index(s, a, 0);
                    flat[start..start + dims.num_b].to_vec()
                })
                .collect()
        })
        .collect()
}

/// An instance whose prior lies in the relative interior of the simplex,
/// with `|A| ≥ 2` and finite costs.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedInstance(ProblemInstance);

impl Deref for ValidatedInstance {
    type Target = ProblemInstance;

    fn deref(&self) -> &ProblemInstance {
        &self.0
    }
}

impl ValidatedInstance {
    pub fn into_inner(self) -> ProblemInstance {
        self.0
    }
}

/// Checks the problem hypotheses. A prior whose sum is within
/// [`SIMPLEX_TOL`] of one is renormalized.
pub fn validate_instance(inst: ProblemInstance) -> Result<ValidatedInstance> {
    let ProblemInstance { dims, mut prior, cost } = inst;
    if dims.num_a < 2 {
        return Err(Error::TooFewActions(dims.num_a));
    }
    for (index, &value) in prior.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositivePrior { index, value });
        }
    }
    let sum = compensated(prior.iter().copied());
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::PriorNotNormalized { sum });
    }
    prior.iter_mut().for_each(|p| *p /= sum);
    if let Some(i) = cost.iter().position(|c| !c.is_finite()) {
        let s = i / dims.per_state();
        let a = (i % dims.per_state()) / dims.num_b;
        let b = i % dims.num_b;
        return Err(Error::NonFiniteCost { s, a, b });
    }
    Ok(ValidatedInstance(ProblemInstance { dims, prior, cost }))
}

/// Per-state and prior-weighted minimal and maximal costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSummary {
    pub c_min_s: Vec<f64>,
    pub c_min: f64,
    pub c_max_s: Vec<f64>,
    pub c_max: f64,
}

impl CostSummary {
    /// True when every state's cost is constant, so any feasible point solves.
    pub fn is_degenerate(&self) -> bool {
        self.c_min_s.iter().zip(&self.c_max_s).all(|(lo, hi)| lo == hi)
    }
}

pub fn cost_summary(inst: &ProblemInstance) -> CostSummary {
    let dims = inst.dims();
    let mut c_min_s = Vec::with_capacity(dims.num_s);
    let mut c_max_s = Vec::with_capacity(dims.num_s);
    for s in 0..dims.num_s {
        let row = inst.state_costs(s);
        c_min_s.push(row.iter().copied().fold(f64::INFINITY, f64::min));
        c_max_s.push(row.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let weighted = |v: &[f64]| compensated(inst.prior().iter().zip(v).map(|(p, c)| p * c));
    CostSummary {
        c_min: weighted(&c_min_s),
        c_max: weighted(&c_max_s),
        c_min_s,
        c_max_s,
    }
}

/// Output of [`normalize_costs`]: the shifted instance and the per-state
/// offsets that were subtracted.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCosts {
    pub instance: ValidatedInstance,
    pub offsets: Vec<f64>,
}

impl NormalizedCosts {
    /// `Σ_s p_s offset_s`, the amount to add back to values of the shifted instance.
    pub fn value_offset(&self) -> f64 {
        compensated(self.instance.prior().iter().zip(&self.offsets).map(|(p, o)| p * o))
    }
}

/// Subtracts each state's minimal cost so that `min_{a,b} c[s,·,·] = 0`.
///
/// Fails with [`Error::DegenerateCosts`] when every shifted cost is zero.
pub fn normalize_costs(inst: &ValidatedInstance) -> Result<NormalizedCosts> {
    let dims = inst.dims();
    let summary = cost_summary(inst);
    let mut cost = inst.costs().to_vec();
    for (s, row) in cost.chunks_mut(dims.per_state()).enumerate() {
        let offset = summary.c_min_s[s];
        row.iter_mut().for_each(|c| *c -= offset);
    }
    if summary.is_degenerate() {
        return Err(Error::DegenerateCosts);
    }
    let instance = ValidatedInstance(ProblemInstance {
        dims,
        prior: inst.prior().to_vec(),
        cost,
    });
    Ok(NormalizedCosts {
        instance,
        offsets: summary.c_min_s,
    })
}

/// One distribution over `A × B` per state, stored flat in `(s, a, b)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPolicy {
    dims: Dims,
    q: Vec<f64>,
}

impl JointPolicy {
    /// Validates entries and per-state sums; rows within [`SIMPLEX_TOL`] of
    /// one are renormalized.
    pub fn new(dims: Dims, mut q: Vec<f64>) -> Result<Self> {
        if q.len() != dims.len() || dims.is_empty() {
            return Err(Error::ShapeMismatch("policy length differs from |S|·|A|·|B|"));
        }
        if let Some(i) = q.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidEntry(i));
        }
        for (state, row) in q.chunks_mut(dims.per_state()).enumerate() {
            let sum = compensated(row.iter().copied());
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::NotNormalized { state, sum });
            }
            row.iter_mut().for_each(|x| *x /= sum);
        }
        Ok(JointPolicy { dims, q })
    }

    pub fn from_nested(q: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_s = q.len();
        let num_a = q.first().map_or(0, Vec::len);
        let num_b = q.first().and_then(|c| c.first()).map_or(0, Vec::len);
        let dims = Dims::new(num_a, num_b, num_s);
        let mut flat = Vec::with_capacity(dims.len());
        for per_state in q {
            if per_state.len() != num_a || per_state.iter().any(|r| r.len() != num_b) {
                return Err(Error::ShapeMismatch("ragged policy tensor"));
            }
            per_state.iter().for_each(|r| flat.extend_from_slice(r));
        }
        JointPolicy::new(dims, flat)
    }

    pub(crate) fn from_raw(dims: Dims, q: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), dims.len());
        JointPolicy { dims, q }
    }

    /// `q[s,a,b] = 1 / (|A||B|)`.
    pub fn uniform(dims: Dims) -> Self {
        let v = 1.0 / dims.per_state() as f64;
        JointPolicy { dims, q: vec![v; dims.len()] }
    }

    /// Uniform over each state's support set, zero elsewhere.
    pub fn uniform_on(pattern: &SupportPattern) -> Self {
        let dims = pattern.dims();
        let mut q = vec![0.0; dims.len()];
        for s in 0..dims.num_s {
            let size = pattern.state_size(s) as f64;
            let range = s * dims.per_state()..(s + 1) * dims.per_state();
            for i in range {
                if pattern.contains_flat(i) {
                    q[i] = 1.0 / size;
                }
            }
        }
        JointPolicy { dims, q }
    }

    /// All mass of state `s` on `points[s] = (a, b)`.
    pub fn point_mass(dims: Dims, points: &[(usize, usize)]) -> Result<Self> {
        if points.len() != dims.num_s {
            return Err(Error::ShapeMismatch("one point per state is required"));
        }
        let mut q = vec![0.0; dims.len()];
        for (s, &(a, b)) in points.iter().enumerate() {
            if a >= dims.num_a || b >= dims.num_b {
                return Err(Error::SupportOutOfRange { s, a, b });
            }
            q[dims.index(s, a, b)] = 1.0;
        }
        Ok(JointPolicy { dims, q })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.q
    }

    pub fn state(&self, s: usize) -> &[f64] {
        let n = self.dims.per_state();
        &self.q[s * n..(s + 1) * n]
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize, b: usize) -> f64 {
        self.q[self.dims.index(s, a, b)]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        nest(self.dims, &self.q)
    }

    /// Euclidean distance over the whole `(s, a, b)` tensor.
    pub fn l2_distance(&self, other: &JointPolicy) -> f64 {
        l2_distance(&self.q, &other.q)
    }

    /// `λ·self + (1 − λ)·other`.
    pub fn mix(&self, other: &JointPolicy, weight: f64) -> Result<JointPolicy> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch("policies of different shapes"));
        }
        let q = self
            .q
            .iter()
            .zip(&other.q)
            .map(|(x, y)| weight * x + (1.0 - weight) * y)
            .collect();
        JointPolicy::new(self.dims, q)
    }
}

pub(crate) fn l2_distance(x: &[f64], y: &[f64]) -> f64 {
    libm::sqrt(compensated(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b))))
}

/// Per-state support sets `Ξ_s ⊆ A × B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportPattern {
    dims: Dims,
    mask: Vec<bool>,
}

impl SupportPattern {
    pub fn full(dims: Dims) -> Self {
        SupportPattern { dims, mask: vec![true; dims.len()] }
    }

    pub fn from_sets(dims: Dims, sets: &[Vec<(usize, usize)>]) -> Result<Self> {
        if sets.len() != dims.num_s {
            return Err(Error::ShapeMismatch("one support set per state is required"));
        }
        let mut mask = vec![false; dims.len()];
        for (s, set) in sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::EmptySupport(s));
            }
            for &(a, b) in set {
                if a >= dims.num_a || b >= dims.num_b {
                    return Err(Error::SupportOutOfRange { s, a, b });
                }
                mask[dims.index(s, a, b)] = true;
            }
        }
        Ok(SupportPattern { dims, mask })
    }

    pub(crate) fn from_mask(dims: Dims, mask: Vec<bool>) -> Result<Self> {
        debug_assert_eq!(mask.len(), dims.len());
        for s in 0..dims.num_s {
            if !mask[s * dims.per_state()..(s + 1) * dims.per_state()].iter().any(|m| *m) {
                return Err(Error::EmptySupport(s));
            }
        }
        Ok(SupportPattern { dims, mask })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn contains(&self, s: usize, a: usize, b: usize) -> bool {
        self.mask[self.dims.index(s, a, b)]
    }

    #[inline]
    pub fn contains_flat(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn state_size(&self, s: usize) -> usize {
        let n = self.dims.per_state();
        self.mask[s * n..(s + 1) * n].iter().filter(|m| **m).count()
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|m| *m)
    }

    pub fn sets(&self) -> Vec<Vec<(usize, usize)>> {
        let d = self.dims;
        (0..d.num_s)
            .map(|s| {
                (0..d.num_a)
                    .flat_map(|a| (0..d.num_b).map(move |b| (a, b)))
                    .filter(|&(a, b)| self.contains(s, a, b))
                    .collect()
            })
            .collect()
    }

    /// Total policy mass placed outside the pattern.
    pub fn mass_outside(&self, q: &JointPolicy) -> f64 {
        compensated(
            q.as_slice()
                .iter()
                .zip(&self.mask)
                .filter(|(_, m)| !**m)
                .map(|(x, _)| *x),
        )
    }
}

/// A distribution over `B`, typically the prior-averaged marginal `t = T(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalB(pub Vec<f64>);

impl MarginalB {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `t_b = Σ_s p_s Σ_a q[s,a,b]` over a raw flat tensor.
pub(crate) fn b_marginal(dims: Dims, prior: &[f64], q: &[f64], out: &mut [f64]) {
    let mut per_state = vec![0.0; dims.num_s];
    for (b, t) in out.iter_mut().enumerate() {
        for (s, ps) in per_state.iter_mut().enumerate() {
            let col = (0..dims.num_a).map(|a| q[dims.index(s, a, b)]);
            *ps = prior[s] * compensated(col);
        }
        *t = compensated(per_state.iter().copied());
    }
}

pub(crate) fn check_shapes(inst: &ProblemInstance, q: &JointPolicy) -> Result<()> {
    if inst.dims() != q.dims() {
        Err(Error::ShapeMismatch("policy and instance dimensions differ"))
    } else {
        Ok(())
    }
}

/// `Σ_s p_s Σ_{a,b} c[s,a,b] q[s,a,b]`.
pub fn expected_cost(inst: &ProblemInstance, q: &JointPolicy) -> Result<f64> {
    check_shapes(inst, q)?;
    Ok(expected_cost_raw(inst, q.as_slice()))
}

pub(crate) fn expected_cost_raw(inst: &ProblemInstance, q: &[f64]) -> f64 {
    let n = inst.dims().per_state();
    compensated((0..inst.dims().num_s).map(|s| {
        let row = &q[s * n..(s + 1) * n];
        inst.prior()[s] * compensated(row.iter().zip(inst.state_costs(s)).map(|(x, c)| x * c))
    }))
}

/// `t_b = Σ_s p_s Σ_{a:(a,b)∈Ξ_s} q[s,a,b]`.
pub fn marginal_b(inst: &ProblemInstance, q: &JointPolicy, pattern: &SupportPattern) -> Result<MarginalB> {
    check_shapes(inst, q)?;
    if pattern.dims() != inst.dims() {
        return Err(Error::ShapeMismatch("pattern and instance dimensions differ"));
    }
    let mass = pattern.mass_outside(q);
    if mass > 1e-14 {
        return Err(Error::SupportViolation { mass });
    }
    let masked: Vec<f64> = q
        .as_slice()
        .iter()
        .zip(pattern.mask())
        .map(|(x, m)| if *m { *x } else { 0.0 })
        .collect();
    let mut t = vec![0.0; inst.dims().num_b];
    b_marginal(inst.dims(), inst.prior(), &masked, &mut t);
    Ok(MarginalB(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::ghn_instance;

    fn inst(prior: Vec<f64>, cost: Vec<f64>, dims: Dims) -> ProblemInstance {
        ProblemInstance::new(dims, prior, cost).unwrap()
    }

    #[test]
    fn validate_accepts_ghn_prior() {
        let v = validate_instance(ghn_instance()).unwrap();
        assert_eq!(v.prior(), &[0.5, 0.5]);
    }

    #[test]
    fn validate_rejects_boundary_prior() {
        let d = Dims::new(2, 2, 2);
        let err = validate_instance(inst(vec![1.0, 0.0], vec![0.0; 8], d)).unwrap_err();
        assert!(matches!(err, Error::NonPositivePrior { index: 1, .. }));
    }

    #[test]
    fn validate_rejects_single_action() {
        let d = Dims::new(1, 2, 1);
        let err = validate_instance(inst(vec![1.0], vec![0.0; 2], d)).unwrap_err();
        assert_eq!(err, Error::TooFewActions(1));
    }

    #[test]
    fn validate_rejects_unnormalized_prior_and_bad_cost() {
        let d = Dims::new(2, 1, 2);
        let err = validate_instance(inst(vec![0.5, 0.6], vec![0.0; 4], d)).unwrap_err();
        assert!(matches!(err, Error::PriorNotNormalized { .. }));
        let err = validate_instance(inst(vec![0.5, 0.5], vec![0.0, f64::NAN, 0.0, 0.0], d)).unwrap_err();
        assert_eq!(err, Error::NonFiniteCost { s: 0, a: 1, b: 0 });
    }

    #[test]
    fn validate_renormalizes_within_tolerance() {
        let d = Dims::new(2, 1, 3);
        let v = validate_instance(inst(vec![0.1, 0.2, 0.7], vec![0.0; 6], d)).unwrap();
        let sum: f64 = v.prior().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_leaves_ghn_unchanged() {
        let v = validate_instance(ghn_instance()).unwrap();
        let n = normalize_costs(&v).unwrap();
        assert_eq!(n.offsets, vec![0.0, 0.0]);
        assert_eq!(n.instance.costs(), v.costs());
    }

    #[test]
    fn normalize_constant_cost_is_degenerate() {
        let d = Dims::new(2, 2, 3);
        let v = validate_instance(inst(vec![0.2, 0.3, 0.5], vec![7.0; 12], d)).unwrap();
        assert_eq!(normalize_costs(&v).unwrap_err(), Error::DegenerateCosts);
        let summary = cost_summary(&v);
        assert_eq!(summary.c_min_s, vec![7.0; 3]);
        assert!(summary.is_degenerate());
    }

    #[test]
    fn normalize_subtracts_per_state_minimum() {
        let d = Dims::new(2, 2, 1);
        let v = validate_instance(inst(vec![1.0], vec![2.0, 3.0, 3.0, 2.0], d)).unwrap();
        let n = normalize_costs(&v).unwrap();
        assert_eq!(n.instance.costs(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(n.offsets, vec![2.0]);
        assert_eq!(n.value_offset(), 2.0);
        // idempotent
        let again = normalize_costs(&n.instance).unwrap();
        assert_eq!(again.instance, n.instance);
        assert_eq!(again.offsets, vec![0.0]);
    }

    #[test]
    fn summary_examples() {
        let v = validate_instance(ghn_instance()).unwrap();
        let s = cost_summary(&v);
        assert_eq!((s.c_min, s.c_max), (0.0, 1.0));

        let d = Dims::new(2, 2, 2);
        let zero = validate_instance(inst(vec![0.5, 0.5], vec![0.0; 8], d)).unwrap();
        let s = cost_summary(&zero);
        assert_eq!((s.c_min, s.c_max), (0.0, 0.0));

        let cost = vec![0.0, 1.0, 1.0, 0.0, 0.0, 3.0, 3.0, 0.0];
        let v = validate_instance(inst(vec![0.25, 0.75], cost, d)).unwrap();
        let s = cost_summary(&v);
        assert!((s.c_max - 2.5).abs() < 1e-15);
        assert_eq!(s.c_min, 0.0);
    }

    #[test]
    fn expected_cost_examples() {
        let g = ghn_instance();
        let uniform = JointPolicy::uniform(g.dims());
        assert!((expected_cost(&g, &uniform).unwrap() - 0.75).abs() < 1e-15);
        let pm = JointPolicy::point_mass(g.dims(), &[(0, 1), (1, 1)]).unwrap();
        assert_eq!(expected_cost(&g, &pm).unwrap(), 0.5 * 1.0 + 0.5 * 0.0);
        let other = JointPolicy::uniform(Dims::new(3, 2, 2));
        assert!(matches!(expected_cost(&g, &other), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn marginal_examples() {
        let g = ghn_instance();
        let d = g.dims();
        let full = SupportPattern::full(d);
        let t = marginal_b(&g, &JointPolicy::uniform(d), &full).unwrap();
        assert_eq!(t.0, vec![0.5, 0.5]);

        let delta0 = SupportPattern::from_sets(d, &[vec![(0, 0)], vec![(1, 1)]]).unwrap();
        let q = JointPolicy::uniform_on(&delta0);
        let t = marginal_b(&g, &q, &delta0).unwrap();
        assert_eq!(t.0, vec![0.5, 0.5]);

        let q = JointPolicy::point_mass(d, &[(0, 1), (1, 1)]).unwrap();
        assert_eq!(marginal_b(&g, &q, &full).unwrap().0, vec![0.0, 1.0]);

        let err = marginal_b(&g, &JointPolicy::uniform(d), &delta0).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { .. }));
    }

    #[test]
    fn policy_validation() {
        let d = Dims::new(2, 1, 1);
        assert!(matches!(JointPolicy::new(d, vec![0.5, 0.6]), Err(Error::NotNormalized { .. })));
        assert!(matches!(JointPolicy::new(d, vec![1.5, -0.5]), Err(Error::InvalidEntry(1))));
        let q = JointPolicy::new(d, vec![0.5, 0.5 + 1e-13]).unwrap();
        assert!((q.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-16);
    }

    #[test]
    fn pattern_validation() {
        let d = Dims::new(2, 2, 2);
        assert_eq!(SupportPattern::from_sets(d, &[vec![(0, 0)], vec![]]).unwrap_err(), Error::EmptySupport(1));
        assert!(matches!(
            SupportPattern::from_sets(d, &[vec![(0, 2)], vec![(0, 0)]]),
            Err(Error::SupportOutOfRange { .. })
        ));
    }

    #[test]
    fn nested_roundtrip() {
        let g = ghn_instance();
        let back = ProblemInstance::from_nested(g.prior().to_vec(), &g.to_nested()).unwrap();
        assert_eq!(back, g);
        assert_eq!(g.cost(1, 1, 1), 0.0);
        assert_eq!(g.cost(0, 0, 0), 0.0);
    }
}
