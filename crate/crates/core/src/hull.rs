//! The capped simplex `{0 <= a_i <= 1, sum a_i = I}` (convex hull of the
//! action set), mirror-descent steps over it, and vertex decomposition.
//!
//! Every solve reduces to a one-dimensional dual problem: each regularizer
//! yields a per-coordinate map `a_i(mu)` that is monotone decreasing in the
//! dual variable `mu` of the sum constraint, so the constraint
//! `sum_i a_i(mu) = I` is found by bracketing bisection with a Newton
//! polish. Coordinates are clamped to `[1e-12, 1]`: the log barrier and the
//! importance weights both divide by `a_i`, so the floor bounds estimator
//! magnitudes.

use crate::model::{CombinatorialArm, ModelError};
use crate::policy::{sample_index, PolicyError};
use rand::RngCore;

/// Interior floor for hull-point coordinates.
pub const COORD_FLOOR: f64 = 1e-12;

/// Tolerance on the sum constraint after a solve.
pub const SUM_TOLERANCE: f64 = 1e-10;

/// A point of the capped simplex with target coordinate sum `combo_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullPoint {
    coords: Vec<f64>,
    combo_size: usize,
}

impl HullPoint {
    pub fn new(coords: Vec<f64>, combo_size: usize) -> Result<Self, PolicyError> {
        let sum: f64 = coords.iter().sum();
        if (sum - combo_size as f64).abs() > 1e-9 {
            return Err(PolicyError::Misconfigured(format!(
                "hull point sums to {sum}, expected {combo_size}"
            )));
        }
        if coords.iter().any(|&v| !(COORD_FLOOR..=1.0).contains(&v)) {
            return Err(PolicyError::Misconfigured(
                "hull point coordinate outside [1e-12, 1]".into(),
            ));
        }
        Ok(Self { coords, combo_size })
    }

    /// The uniform point `I / K`: the symmetric minimizer of the log
    /// barrier (and of both baseline regularizers) over the capped simplex.
    pub fn uniform(num_base_arms: usize, combo_size: usize) -> Self {
        Self {
            coords: vec![combo_size as f64 / num_base_arms as f64; num_base_arms],
            combo_size,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn combo_size(&self) -> usize {
        self.combo_size
    }
}

/// Minimizer of the log-barrier regularizer over the capped simplex.
pub fn barrier_minimizer(num_base_arms: usize, combo_size: usize) -> HullPoint {
    HullPoint::uniform(num_base_arms, combo_size)
}

/// Bregman divergence of the scaled log barrier
/// `F(a) = (1/eta) sum ln(1/a_i)`.
pub fn barrier_bregman(p: &[f64], q: &[f64], eta: f64) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| ((qi / pi).ln() + (pi - qi) / qi) / eta)
        .sum()
}

/// Fills the coordinate buffer for a dual value and returns
/// `(sum, d sum / d mu)`.
type DualEval<'a> = dyn FnMut(f64, &mut [f64]) -> (f64, f64) + 'a;

/// Solves `sum_i map(mu) = target` for a monotone-decreasing coordinate
/// map.
fn solve_monotone_dual(
    eval: &mut DualEval,
    num_coords: usize,
    target: f64,
) -> Result<(f64, Vec<f64>), PolicyError> {
    let mut coords = vec![0.0; num_coords];

    // Bracket the root starting from mu = 0.
    let (sum0, _) = eval(0.0, &mut coords);
    let (mut lo, mut hi);
    if sum0 >= target {
        lo = 0.0;
        hi = 1.0;
        let mut step = 1.0;
        loop {
            let (s, _) = eval(hi, &mut coords);
            if s <= target {
                break;
            }
            lo = hi;
            step *= 2.0;
            hi += step;
            if !hi.is_finite() {
                return Err(PolicyError::SolverFailure(format!(
                    "failed to bracket above: sum({lo}) = {s} > target {target}"
                )));
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        let mut step = 1.0;
        loop {
            let (s, _) = eval(lo, &mut coords);
            if s >= target {
                break;
            }
            hi = lo;
            step *= 2.0;
            lo -= step;
            if !lo.is_finite() {
                return Err(PolicyError::SolverFailure(format!(
                    "failed to bracket below: sum({hi}) = {s} < target {target}"
                )));
            }
        }
    }

    // Bisection: invariant sum(lo) >= target >= sum(hi).
    let mut iterations = 0;
    while hi - lo > 1e-13 && iterations < 300 {
        let mid = 0.5 * (lo + hi);
        let (s, _) = eval(mid, &mut coords);
        if s >= target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    // Newton polish on the smooth pieces, kept inside the bracket.
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..4 {
        let (s, ds) = eval(mu, &mut coords);
        if ds.abs() < 1e-300 {
            break;
        }
        let next = mu - (s - target) / ds;
        if !next.is_finite() || next < lo - 1e-9 || next > hi + 1e-9 {
            break;
        }
        mu = next;
    }

    let (sum, _) = eval(mu, &mut coords);
    if (sum - target).abs() > SUM_TOLERANCE {
        return Err(PolicyError::SolverFailure(format!(
            "dual residual |{sum} - {target}| = {} after bisection",
            (sum - target).abs()
        )));
    }
    Ok((mu, coords))
}

fn finish_point(mut coords: Vec<f64>, combo_size: usize) -> Result<HullPoint, PolicyError> {
    for v in &mut coords {
        *v = v.clamp(COORD_FLOOR, 1.0);
    }
    HullPoint::new(coords, combo_size)
}

/// One mirror-descent step under the scaled log barrier: minimizes
/// `<a, estimate> + D_F(a, reference)` over the capped simplex. The
/// coordinate map is `a_i(mu) = 1 / max(1/ref_i + eta (est_i + mu), 1)`,
/// capped coordinates sitting at 1.
pub fn omd_step(
    reference: &HullPoint,
    estimate: &[f64],
    eta: f64,
) -> Result<HullPoint, PolicyError> {
    let k = reference.len();
    if estimate.len() != k {
        return Err(PolicyError::Model(ModelError::DimensionMismatch {
            expected: k,
            actual: estimate.len(),
        }));
    }
    if estimate.iter().any(|v| !v.is_finite()) {
        return Err(PolicyError::EstimatorNotFinite(
            "mirror-descent step received a non-finite estimate".into(),
        ));
    }
    if !(eta > 0.0) {
        return Err(PolicyError::Misconfigured(format!(
            "learning rate must be positive, got {eta}"
        )));
    }
    let combo_size = reference.combo_size();
    if combo_size == k {
        return HullPoint::new(vec![1.0; k], combo_size);
    }

    let inv_ref: Vec<f64> = reference.coords().iter().map(|&r| 1.0 / r).collect();
    let mut eval = |mu: f64, coords: &mut [f64]| -> (f64, f64) {
        let mut sum = 0.0;
        let mut dsum = 0.0;
        for i in 0..k {
            let denom = inv_ref[i] + eta * (estimate[i] + mu);
            if denom > 1.0 {
                let a = 1.0 / denom;
                coords[i] = a;
                sum += a;
                dsum -= eta * a * a;
            } else {
                coords[i] = 1.0;
                sum += 1.0;
            }
        }
        (sum, dsum)
    };
    let (_, coords) = solve_monotone_dual(&mut eval, k, combo_size as f64)?;
    finish_point(coords, combo_size)
}

/// Bregman projection onto the capped simplex: the mirror step with a zero
/// estimate. Identity for feasible references.
pub fn bregman_project(reference: &HullPoint, eta: f64) -> Result<HullPoint, PolicyError> {
    omd_step(reference, &vec![0.0; reference.len()], eta)
}

/// Follow-the-regularized-leader step for the unnormalized negentropy
/// `F(a) = sum (a_i ln a_i - a_i)`: coordinate map
/// `a_i(mu) = min(exp(-eta (L_i + mu)), 1)`.
pub fn ftrl_negentropy(
    cum_estimate: &[f64],
    eta: f64,
    combo_size: usize,
) -> Result<HullPoint, PolicyError> {
    let k = cum_estimate.len();
    if combo_size == k {
        return HullPoint::new(vec![1.0; k], combo_size);
    }
    let mut eval = |mu: f64, coords: &mut [f64]| -> (f64, f64) {
        let mut sum = 0.0;
        let mut dsum = 0.0;
        for i in 0..k {
            let raw = (-eta * (cum_estimate[i] + mu)).exp();
            if raw < 1.0 {
                coords[i] = raw;
                sum += raw;
                dsum -= eta * raw;
            } else {
                coords[i] = 1.0;
                sum += 1.0;
            }
        }
        (sum, dsum)
    };
    let (_, coords) = solve_monotone_dual(&mut eval, k, combo_size as f64)?;
    finish_point(coords, combo_size)
}

/// Derivative of the hybrid regularizer
/// `F(a) = sum [-sqrt(a_i) + gamma (1 - a_i) ln(1 - a_i)]` in one
/// coordinate.
fn hybrid_grad(a: f64, gamma: f64) -> f64 {
    -0.5 / a.sqrt() + gamma * (-(1.0 - a).ln() - 1.0)
}

fn hybrid_grad_slope(a: f64, gamma: f64) -> f64 {
    0.25 / (a * a.sqrt()) + gamma / (1.0 - a)
}

/// Inverts `hybrid_grad(a) = y` on (0, 1) by safeguarded Newton.
fn hybrid_inverse(y: f64, gamma: f64) -> f64 {
    let (mut lo, mut hi) = (1e-16, 1.0 - 1e-16);
    if hybrid_grad(lo, gamma) >= y {
        return lo;
    }
    if hybrid_grad(hi, gamma) <= y {
        return hi;
    }
    let mut a = 0.5;
    for _ in 0..200 {
        let g = hybrid_grad(a, gamma);
        if g < y {
            lo = a;
        } else {
            hi = a;
        }
        if hi - lo < 1e-15 {
            break;
        }
        let newton = a - (g - y) / hybrid_grad_slope(a, gamma);
        a = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    a
}

/// Follow-the-regularized-leader step for the hybrid regularizer: solves
/// the stationarity system `grad F(a_i) = -eta (L_i + mu)` per coordinate;
/// the `(1 - a) ln(1 - a)` term keeps coordinates strictly below 1.
pub fn ftrl_hybrid(
    cum_estimate: &[f64],
    eta: f64,
    gamma: f64,
    combo_size: usize,
) -> Result<HullPoint, PolicyError> {
    let k = cum_estimate.len();
    if combo_size == k {
        return HullPoint::new(vec![1.0; k], combo_size);
    }
    let mut eval = |mu: f64, coords: &mut [f64]| -> (f64, f64) {
        let mut sum = 0.0;
        let mut dsum = 0.0;
        for i in 0..k {
            let y = -eta * (cum_estimate[i] + mu);
            let a = hybrid_inverse(y, gamma);
            coords[i] = a;
            sum += a;
            dsum -= eta / hybrid_grad_slope(a, gamma);
        }
        (sum, dsum)
    };
    let (_, coords) = solve_monotone_dual(&mut eval, k, combo_size as f64)?;
    finish_point(coords, combo_size)
}

/// A convex combination of at most `K` arms reconstructing a hull point.
#[derive(Debug, Clone)]
pub struct VertexDecomposition {
    vertices: Vec<CombinatorialArm>,
    weights: Vec<f64>,
}

impl VertexDecomposition {
    pub fn vertices(&self) -> &[CombinatorialArm] {
        &self.vertices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_j w_j v_j`, for verification.
    pub fn reconstruct(&self, num_base_arms: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_base_arms];
        for (v, &w) in self.vertices.iter().zip(&self.weights) {
            for i in v.ones() {
                out[i] += w;
            }
        }
        out
    }

    /// Samples one vertex with probability proportional to its weight.
    pub fn sample(&self, rng: &mut dyn RngCore) -> &CombinatorialArm {
        &self.vertices[sample_index(&self.weights, rng)]
    }
}

/// Greedy peeling decomposition: repeatedly strip the largest feasible
/// weight from the arm holding the `I` largest residuals. Each step either
/// zeroes a selected coordinate or raises an unselected one to the
/// remaining-mass bound, so it finishes in at most `K` steps.
pub fn decompose_hull_point(point: &HullPoint) -> Result<VertexDecomposition, PolicyError> {
    let k = point.len();
    let combo_size = point.combo_size();
    let mut residual = point.coords().to_vec();
    let mut mass = 1.0f64;
    let mut vertices = Vec::new();
    let mut weights = Vec::new();
    let mut order: Vec<usize> = (0..k).collect();

    for _ in 0..=k {
        if mass <= 1e-13 {
            break;
        }
        // Top combo_size residuals, ties to the lowest index.
        order.sort_by(|&x, &y| {
            residual[y]
                .partial_cmp(&residual[x])
                .unwrap()
                .then(x.cmp(&y))
        });
        let selected = &order[..combo_size];
        let min_selected = selected
            .iter()
            .map(|&i| residual[i])
            .fold(f64::INFINITY, f64::min);
        let max_unselected = order[combo_size..]
            .iter()
            .map(|&i| residual[i])
            .fold(0.0f64, f64::max);
        let mut weight = min_selected;
        if k > combo_size && max_unselected > 0.0 {
            weight = weight.min(mass - max_unselected);
        }
        weight = weight.min(mass);
        if weight <= 0.0 {
            // Only rounding dust can be left; the mass check below flags
            // anything else as an internal invariant violation.
            break;
        }
        for &i in selected {
            residual[i] = (residual[i] - weight).max(0.0);
        }
        let mut chosen = selected.to_vec();
        chosen.sort_unstable();
        vertices.push(CombinatorialArm::from_indices(k, &chosen, combo_size)?);
        weights.push(weight);
        mass -= weight;
    }

    if mass > 1e-9 {
        return Err(PolicyError::SolverFailure(format!(
            "hull-point decomposition left mass {mass} after {k} steps"
        )));
    }
    Ok(VertexDecomposition { vertices, weights })
}
