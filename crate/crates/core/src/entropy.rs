//! Entropic building blocks: `ψ`, the KL divergence, the constraint
//! functional `g`, its gradient, and the split of `g` into mutual information
//! minus conditional entropy. Natural logarithms throughout.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::instance::{b_marginal, check_shapes, JointPolicy, ProblemInstance, SupportPattern};
use crate::sum::compensated;
use crate::{Error, Result};

/// Entries below this are treated as exact zeros inside `ψ`.
pub const ZERO_FLOOR: f64 = 1e-300;

/// Negative round-off down to this magnitude is clamped to zero by [`g_value`].
pub const NEGATIVE_CLAMP: f64 = 1e-14;

/// A value in `]−∞, +∞]` with an explicit infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// Maps infinity to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("+inf"),
        }
    }
}

/// `ψ(ξ, μ) = ξ ln(ξ/μ)` if `ξ, μ > 0`; `0` if `ξ = 0, μ ≥ 0`; `+∞` otherwise.
pub fn psi(xi: f64, mu: f64) -> ExtendedReal {
    if xi.is_nan() || mu.is_nan() {
        return ExtendedReal::PosInfinity;
    }
    if (0.0..ZERO_FLOOR).contains(&xi) {
        return if mu >= 0.0 {
            ExtendedReal::Finite(0.0)
        } else {
            ExtendedReal::PosInfinity
        };
    }
    if xi > 0.0 && mu > 0.0 && xi.is_finite() && mu.is_finite() {
        ExtendedReal::Finite(xi * libm::log(xi / mu))
    } else {
        ExtendedReal::PosInfinity
    }
}

/// `D(q, u) = Σ_i ψ(q_i, u_i)`; infinite iff `supp q ⊄ supp u`.
pub fn kl_divergence(q: &[f64], u: &[f64]) -> Result<ExtendedReal> {
    if q.len() != u.len() {
        return Err(Error::ShapeMismatch("divergence arguments differ in length"));
    }
    Ok(sum_psi(q.iter().zip(u).map(|(x, y)| psi(*x, *y))))
}

fn sum_psi<I: Iterator<Item = ExtendedReal>>(terms: I) -> ExtendedReal {
    let mut finite = Vec::new();
    for t in terms {
        match t {
            ExtendedReal::Finite(v) => finite.push(v),
            ExtendedReal::PosInfinity => return ExtendedReal::PosInfinity,
        }
    }
    ExtendedReal::Finite(compensated(finite))
}

/// The constraint functional on a policy; the feasible set is `{g ≤ 0}`.
pub fn g_value(inst: &ProblemInstance, q: &JointPolicy) -> ExtendedReal {
    if check_shapes(inst, q).is_err() {
        return ExtendedReal::PosInfinity;
    }
    g_of(inst, q.as_slice())
}

/// The constraint functional on an arbitrary flat `(s, a, b)` vector: `+∞`
/// off the nonnegative orthant (after clamping round-off above
/// `−NEGATIVE_CLAMP`). Rows need not sum to one.
pub fn g_of(inst: &ProblemInstance, q: &[f64]) -> ExtendedReal {
    let dims = inst.dims();
    if q.len() != dims.len() || q.iter().any(|x| !(*x >= -NEGATIVE_CLAMP) || !x.is_finite()) {
        return ExtendedReal::PosInfinity;
    }
    let clamped: Vec<f64> = q.iter().map(|x| x.max(0.0)).collect();
    let mut t = vec![0.0; dims.num_b];
    b_marginal(dims, inst.prior(), &clamped, &mut t);
    let mut per_state = Vec::with_capacity(dims.num_s);
    for s in 0..dims.num_s {
        let terms = (0..dims.num_a)
            .flat_map(|a| (0..dims.num_b).map(move |b| (a, b)))
            .map(|(a, b)| psi(clamped[dims.index(s, a, b)], t[b]));
        match sum_psi(terms) {
            ExtendedReal::Finite(v) => per_state.push(inst.prior()[s] * v),
            ExtendedReal::PosInfinity => return ExtendedReal::PosInfinity,
        }
    }
    ExtendedReal::Finite(compensated(per_state))
}

/// Gradient of `g` restricted to the pattern: `p_s ln(q[s,a,b] / t_b)` with
/// `t = T_Ξ(q)`. Off-pattern entries are reported as `0`.
pub fn g_gradient(inst: &ProblemInstance, q: &[f64], pattern: &SupportPattern) -> Result<Vec<f64>> {
    let dims = inst.dims();
    if q.len() != dims.len() || pattern.dims() != dims {
        return Err(Error::ShapeMismatch("gradient point and instance differ"));
    }
    let mut masked = vec![0.0; dims.len()];
    for (i, x) in q.iter().enumerate() {
        if pattern.contains_flat(i) {
            if !(*x > 0.0) {
                return Err(Error::BoundaryPoint(i));
            }
            masked[i] = *x;
        }
    }
    let mut t = vec![0.0; dims.num_b];
    b_marginal(dims, inst.prior(), &masked, &mut t);
    let mut grad = vec![0.0; dims.len()];
    for s in 0..dims.num_s {
        for a in 0..dims.num_a {
            for (b, &tb) in t.iter().enumerate() {
                let i = dims.index(s, a, b);
                if pattern.contains_flat(i) {
                    grad[i] = inst.prior()[s] * libm::log(masked[i] / tb);
                }
            }
        }
    }
    Ok(grad)
}

/// Mutual information `I(b; s)` and conditional entropy `H(a | b, s)` of the
/// joint law `p_s q[s,a,b]`, with `g = I − H` whenever both are finite.
pub fn info_decomposition(inst: &ProblemInstance, q: &JointPolicy) -> Result<(f64, f64)> {
    check_shapes(inst, q)?;
    let dims = inst.dims();
    let mut t = vec![0.0; dims.num_b];
    b_marginal(dims, inst.prior(), q.as_slice(), &mut t);
    let mut mi_terms = Vec::with_capacity(dims.num_s);
    let mut h_terms = Vec::with_capacity(dims.num_s);
    for s in 0..dims.num_s {
        let p = inst.prior()[s];
        for (b, &tb) in t.iter().enumerate() {
            let col: Vec<f64> = (0..dims.num_a).map(|a| q.get(s, a, b)).collect();
            let q_hat = compensated(col.iter().copied());
            if q_hat <= 0.0 {
                continue;
            }
            if tb > 0.0 {
                mi_terms.push(p * q_hat * libm::log(q_hat / tb));
            }
            for x in col {
                if x > 0.0 {
                    h_terms.push(p * x * libm::log(q_hat / x));
                }
            }
        }
    }
    Ok((compensated(mi_terms), compensated(h_terms)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{extended_instance, ghn_instance};
    use crate::instance::Dims;
    use core::f64::consts::LN_2;
    use proptest::prelude::*;

    fn fin(x: ExtendedReal) -> f64 {
        x.finite().expect("finite")
    }

    #[test]
    fn psi_cases() {
        assert_eq!(psi(0.0, 0.5), ExtendedReal::Finite(0.0));
        assert_eq!(psi(0.0, 0.0), ExtendedReal::Finite(0.0));
        assert_eq!(psi(0.5, 0.5), ExtendedReal::Finite(0.0));
        assert!((fin(psi(1.0, 0.5)) - LN_2).abs() < 1e-15);
        assert_eq!(psi(0.3, 0.0), ExtendedReal::PosInfinity);
        assert_eq!(psi(-0.1, 0.5), ExtendedReal::PosInfinity);
        assert_eq!(psi(0.0, -1.0), ExtendedReal::PosInfinity);
        assert_eq!(psi(1e-301, 0.5), ExtendedReal::Finite(0.0));
    }

    #[test]
    fn kl_cases() {
        let u = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&u, &u).unwrap(), ExtendedReal::Finite(0.0));
        assert!((fin(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap()) - LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), ExtendedReal::PosInfinity);
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn g_examples() {
        let ghn = ghn_instance();
        let uniform = JointPolicy::uniform(ghn.dims());
        assert!((fin(g_value(&ghn, &uniform)) + LN_2).abs() < 1e-15);

        let d0 = JointPolicy::point_mass(ghn.dims(), &[(0, 0), (1, 1)]).unwrap();
        assert!((fin(g_value(&ghn, &d0)) - LN_2).abs() < 1e-15);

        for d in [3, 7] {
            let ext = extended_instance(d);
            let pts: Vec<_> = (0..d).map(|k| (k, k)).collect();
            let q = JointPolicy::point_mass(ext.dims(), &pts).unwrap();
            assert!((fin(g_value(&ext, &q)) - libm::log(d as f64)).abs() < 1e-14);
        }

        let mut neg = uniform.as_slice().to_vec();
        neg[0] = -1e-3;
        assert_eq!(g_of(&ghn, &neg), ExtendedReal::PosInfinity);
    }

    #[test]
    fn gradient_at_uniform() {
        let d = Dims::new(3, 2, 2);
        let inst = ProblemInstance::new(d, vec![0.3, 0.7], vec![0.0; 12]).unwrap();
        let q = JointPolicy::uniform(d);
        let grad = g_gradient(&inst, q.as_slice(), &SupportPattern::full(d)).unwrap();
        for s in 0..2 {
            for a in 0..3 {
                for b in 0..2 {
                    let expect = -inst.prior()[s] * libm::log(3.0);
                    assert!((grad[d.index(s, a, b)] - expect).abs() < 1e-15);
                }
            }
        }
        let mut boundary = q.as_slice().to_vec();
        boundary[4] = 0.0;
        assert_eq!(
            g_gradient(&inst, &boundary, &SupportPattern::full(d)).unwrap_err(),
            Error::BoundaryPoint(4)
        );
    }

    #[test]
    fn gradient_at_state_independent_product() {
        // q[s,a,b] = t_b / |A| gives p_s ln(1/|A|)
        let d = Dims::new(2, 3, 2);
        let inst = ProblemInstance::new(d, vec![0.4, 0.6], vec![0.0; 12]).unwrap();
        let t = [0.2, 0.5, 0.3];
        let q: Vec<f64> = (0..d.len()).map(|i| t[i % 3] / 2.0).collect();
        let grad = g_gradient(&inst, &q, &SupportPattern::full(d)).unwrap();
        for (i, gr) in grad.iter().enumerate() {
            let s = i / 6;
            assert!((gr - inst.prior()[s] * libm::log(0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn decomposition_examples() {
        let ghn = ghn_instance();
        let (mi, h) = info_decomposition(&ghn, &JointPolicy::uniform(ghn.dims())).unwrap();
        assert!(mi.abs() < 1e-15);
        assert!((h - LN_2).abs() < 1e-15);
        let d0 = JointPolicy::point_mass(ghn.dims(), &[(0, 0), (1, 1)]).unwrap();
        let (mi, h) = info_decomposition(&ghn, &d0).unwrap();
        assert!((mi - LN_2).abs() < 1e-15);
        assert_eq!(h, 0.0);
    }

    fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, len).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-12;
            v.into_iter().map(|x| (x + 1e-12 / 8.0) / s).collect()
        })
    }

    proptest! {
        #[test]
        fn pinsker_bound(q in simplex(6), u in simplex(6), zero_q in 0usize..6) {
            let mut q = q;
            q[zero_q] = 0.0;
            let sum: f64 = q.iter().sum();
            q.iter_mut().for_each(|x| *x /= sum);
            let l1: f64 = q.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
            let d = fin(kl_divergence(&q, &u).unwrap());
            prop_assert!(d >= 0.5 * l1 * l1 - 1e-12);
        }

        #[test]
        fn kl_positive_off_diagonal(q in simplex(5), u in simplex(5)) {
            let l1: f64 = q.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
            let d = fin(kl_divergence(&q, &u).unwrap());
            prop_assert!(d >= -1e-15);
            if l1 >= 1e-3 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn decomposition_identity(raw in proptest::collection::vec(0.01f64..1.0, 12), p0 in 0.05f64..0.95) {
            let d = Dims::new(2, 3, 2);
            let inst = ProblemInstance::new(d, vec![p0, 1.0 - p0], vec![0.0; 12]).unwrap();
            let mut q = raw;
            for row in q.chunks_mut(6) {
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= s);
            }
            let q = JointPolicy::new(d, q).unwrap();
            let (mi, h) = info_decomposition(&inst, &q).unwrap();
            let g = fin(g_value(&inst, &q));
            prop_assert!((g - (mi - h)).abs() < 1e-10);
            prop_assert!(mi >= -1e-15);
            prop_assert!(h >= -1e-15 && h <= libm::log(2.0) + 1e-12);
        }

        #[test]
        fn g_convex_along_segments(
            x in proptest::collection::vec(0.01f64..1.0, 8),
            y in proptest::collection::vec(0.01f64..1.0, 8),
            w in 0.0f64..1.0,
        ) {
            let d = Dims::new(2, 2, 2);
            let inst = ProblemInstance::new(d, vec![0.35, 0.65], vec![0.0; 8]).unwrap();
            let norm = |mut v: Vec<f64>| {
                for row in v.chunks_mut(4) {
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|e| *e /= s);
                }
                JointPolicy::new(d, v).unwrap()
            };
            let (qx, qy) = (norm(x), norm(y));
            let mid = qx.mix(&qy, w).unwrap();
            let lhs = fin(g_value(&inst, &mid));
            let rhs = w * fin(g_value(&inst, &qx)) + (1.0 - w) * fin(g_value(&inst, &qy));
            prop_assert!(lhs <= rhs + 1e-10);
        }
    }
}
