//! Benchmark instances: the 2×2×2 coordination game, its `d×d×d` extension
//! and seeded random cost tensors.
//!
//! Random entries are drawn with ChaCha8 seeded from a `u64`
//! (`ChaCha8Rng::seed_from_u64`). Each entry takes `u = (next_u64 >> 11)·2⁻⁵³`
//! and maps it to `low + floor(u·levels)/10^decimals` with
//! `levels = (high − low)·10^decimals + 1`, clipped to `high`. With the
//! defaults this is `floor(u·101)/10` on `[0, 10]`.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attain::solve_delta0;
use crate::bpg::IterLimits;
use crate::instance::{Dims, ProblemInstance};
use crate::{Error, Result};

/// Rejection cap for [`RandomSpec::require_not_attainable`].
pub const MAX_REJECTIONS: usize = 1000;

/// The 2×2×2 game: a single zero per state, at `(a₀,b₀)` and `(a₁,b₁)`.
pub fn ghn_instance() -> ProblemInstance {
    let cost = vec![
        vec![vec![0.0, 1.0], vec![1.0, 1.0]],
        vec![vec![1.0, 1.0], vec![1.0, 0.0]],
    ];
    ProblemInstance::from_nested(vec![0.5, 0.5], &cost).expect("static shape")
}

/// Cost 1 everywhere except `c[k,k,k] = 0`, uniform prior over `d` states.
pub fn extended_instance(d: usize) -> ProblemInstance {
    assert!(d >= 2, "extended instance needs d >= 2");
    let dims = Dims::new(d, d, d);
    let mut cost = vec![1.0; dims.len()];
    for k in 0..d {
        cost[dims.index(k, k, k)] = 0.0;
    }
    ProblemInstance::new(dims, vec![1.0 / d as f64; d], cost).expect("consistent shape")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub dims: Dims,
    pub cost_low: f64,
    pub cost_high: f64,
    pub decimals: u32,
    pub seed: u64,
    /// Redraw until the attainability phase reports `false`.
    pub require_not_attainable: bool,
}

impl RandomSpec {
    pub fn new(dims: Dims, seed: u64) -> Self {
        RandomSpec {
            dims,
            cost_low: 0.0,
            cost_high: 10.0,
            decimals: 1,
            seed,
            require_not_attainable: false,
        }
    }

    pub fn not_attainable(mut self) -> Self {
        self.require_not_attainable = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost_low < self.cost_high) || !self.cost_low.is_finite() || !self.cost_high.is_finite() {
            return Err(Error::InvalidConfig("cost_low must be below cost_high"));
        }
        if self.decimals > 12 {
            return Err(Error::InvalidConfig("decimals must be at most 12"));
        }
        if self.dims.num_a < 2 || self.dims.num_b == 0 || self.dims.num_s == 0 {
            return Err(Error::InvalidConfig("dims need |A| >= 2 and |B|, |S| >= 1"));
        }
        Ok(())
    }
}

struct GridSampler {
    rng: ChaCha8Rng,
    scale: f64,
    low_steps: f64,
    levels: f64,
    high: f64,
}

impl GridSampler {
    fn new(spec: &RandomSpec) -> Self {
        let scale = libm::pow(10.0, spec.decimals as f64);
        GridSampler {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            scale,
            low_steps: libm::round(spec.cost_low * scale),
            levels: libm::round((spec.cost_high - spec.cost_low) * scale) + 1.0,
            high: spec.cost_high,
        }
    }

    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn draw(&mut self) -> f64 {
        let k = libm::floor(self.unit() * self.levels);
        ((self.low_steps + k) / self.scale).min(self.high)
    }
}

/// Uniform prior, costs uniform on the decimal grid. Deterministic in `seed`.
pub fn random_instance(spec: &RandomSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let dims = spec.dims;
    let prior = vec![1.0 / dims.num_s as f64; dims.num_s];
    let mut sampler = GridSampler::new(spec);
    let attempts = if spec.require_not_attainable { MAX_REJECTIONS } else { 1 };
    for _ in 0..attempts {
        let cost: Vec<f64> = (0..dims.len()).map(|_| sampler.draw()).collect();
        let inst = ProblemInstance::new(dims, prior.clone(), cost)?;
        if !spec.require_not_attainable || !solve_delta0(&inst, &IterLimits::default(), None)?.attainable {
            return Ok(inst);
        }
    }
    Err(Error::RejectionExhausted(MAX_REJECTIONS))
}
