//! Multi-scale time tree and Gaussian random walks.
//!
//! Each round `t >= 1` has a parent `parent(t) = t - 2^d` where `2^d` is the
//! largest power of two dividing `t`. Iterating the parent map reaches 0 in
//! at most `log2(T) + 1` steps, and the walk `W_t = W_parent(t) + xi_t`
//! accumulates one Gaussian increment per tree edge. Keying each increment
//! by `(seed, t)` makes every walk value a pure function of the seed.

use crate::rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("round index must be >= 1")]
    ZeroRound,
}

/// Largest power-of-two exponent dividing `t`.
#[inline]
fn pow2_exponent(t: usize) -> u32 {
    t.trailing_zeros()
}

/// Parent time `t - 2^d` with `2^d` the largest power of two dividing `t`.
pub fn parent(t: usize) -> Result<usize, TreeError> {
    if t == 0 {
        return Err(TreeError::ZeroRound);
    }
    Ok(t - (1usize << pow2_exponent(t)))
}

/// All iterated parents of `t`, descending; empty for `t = 0`.
pub fn ancestors(t: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = t;
    while cur > 0 {
        cur -= 1usize << pow2_exponent(cur);
        out.push(cur);
    }
    out
}

/// Exact depth (longest ancestor chain) and width (most tree edges cut by a
/// single time point) of the parent map restricted to `1..=horizon`.
pub fn depth_and_width(horizon: usize) -> (usize, usize) {
    let profile = depth_width_profile(horizon);
    *profile.last().unwrap_or(&(0, 0))
}

/// `(depth(T), width(T))` for every prefix horizon `T = 1..=horizon`.
///
/// The chain length of `t` is one more than its parent's; the cut counts
/// `c[t] = |{s : parent(s) < t <= s}|` gain one entry for each new `s` on
/// the interval `(parent(s), s]`. Both maxima are maintained incrementally,
/// so the whole profile costs `O(T log T)`.
pub fn depth_width_profile(horizon: usize) -> Vec<(usize, usize)> {
    let mut chain_len = vec![0usize; horizon + 1];
    let mut cuts = vec![0usize; horizon + 2];
    let mut depth = 0usize;
    let mut width = 0usize;
    let mut out = Vec::with_capacity(horizon);
    for s in 1..=horizon {
        let p = s - (1usize << pow2_exponent(s));
        chain_len[s] = chain_len[p] + 1;
        depth = depth.max(chain_len[s]);
        for cut in &mut cuts[(p + 1)..=s] {
            *cut += 1;
            width = width.max(*cut);
        }
        out.push((depth, width));
    }
    out
}

/// Memoized multi-scale Gaussian random walk.
///
/// Increments are `sigma * N(0,1)` keyed by `(seed, t)` for the shared walk
/// or `(seed, t, arm)` for per-arm walks, so values do not depend on query
/// or construction order. All values up to the horizon are materialized at
/// construction; reads are lock-free lookups.
#[derive(Debug, Clone)]
pub struct Walk {
    values: Vec<f64>,
    seed: u64,
    sigma: f64,
    stream: u64,
    arm: u64,
}

impl Walk {
    /// Shared-noise walk over `0..=horizon`.
    pub fn shared(seed: u64, sigma: f64, horizon: usize) -> Self {
        Self::build(seed, sigma, horizon, rng::stream::WALK_SHARED, 0)
    }

    /// Per-arm walk with an independent increment stream.
    pub fn per_arm(seed: u64, sigma: f64, horizon: usize, arm: usize) -> Self {
        Self::build(seed, sigma, horizon, rng::stream::WALK_PER_ARM, arm as u64)
    }

    fn build(seed: u64, sigma: f64, horizon: usize, stream: u64, arm: u64) -> Self {
        let mut walk = Self {
            values: Vec::new(),
            seed,
            sigma,
            stream,
            arm,
        };
        let mut values = vec![0.0; horizon + 1];
        for t in 1..=horizon {
            let p = t - (1usize << pow2_exponent(t));
            values[t] = values[p] + walk.increment(t);
        }
        walk.values = values;
        walk
    }

    /// The Gaussian increment attached to the edge above `t`.
    pub fn increment(&self, t: usize) -> f64 {
        self.sigma * rng::standard_normal(self.seed, self.stream, t as u64, self.arm)
    }

    /// `W_t`; zero at the root.
    pub fn value(&self, t: usize) -> f64 {
        self.values[t]
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}
