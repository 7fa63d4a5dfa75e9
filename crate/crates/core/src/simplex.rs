//! Geometry of the probability simplex.
//!
//! [`SimplexPoint`] is the iterate type shared by every solver. Constructors
//! renormalize by the weight sum and clamp entries in `[-ε, 0)` to zero, so a
//! value of this type always carries nonnegative weights summing to one.
//!
//! The free functions implement the handful of quantities the solvers and the
//! convergence checks are built from: the centering projector
//! `Π_w g = g − (w·g)𝟙`, Euclidean projection onto the simplex, relative
//! entropy, the `w`-weighted gradient variance and a first-order optimality
//! (KKT) report.

use std::ops::Deref;

use crate::error::{check_len, Error, Result};
use crate::linalg::dot;

/// Weights at or below this value form the zero (active) set.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-10;

/// A nonnegative weight vector summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexPoint {
    weights: Vec<f64>,
    zero_tolerance: f64,
}

impl SimplexPoint {
    /// Validates and renormalizes `weights` with the default zero tolerance.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, DEFAULT_ZERO_TOLERANCE)
    }

    pub fn with_tolerance(mut weights: Vec<f64>, zero_tolerance: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if !(zero_tolerance >= 0.0 && zero_tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "zero tolerance must be finite and nonnegative, got {zero_tolerance}"
            )));
        }
        for (index, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite("simplex weights"));
            }
            if *w < 0.0 {
                if *w < -zero_tolerance {
                    return Err(Error::NegativeWeight { index, value: *w });
                }
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            weights,
            zero_tolerance,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// The vertex `e_i` of the `n`-simplex.
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: i + 1,
            });
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Self::new(w)
    }

    /// Same point, different zero tolerance.
    pub fn retolerance(mut self, zero_tolerance: f64) -> Self {
        self.zero_tolerance = zero_tolerance.max(0.0);
        self
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tolerance
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.weights[i] > self.zero_tolerance
    }

    /// Indices with weight above the zero tolerance.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.in_support(i)).collect()
    }

    /// Indices with weight at or below the zero tolerance.
    pub fn active_set(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| !self.in_support(i)).collect()
    }

    /// Rebuilds a point from raw update output, inheriting this point's tolerance.
    pub(crate) fn successor(&self, weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, self.zero_tolerance)
    }
}

impl Deref for SimplexPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.weights
    }
}

/// A gradient `∇f(w)` with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// First-order optimality diagnostics for `min f` over the simplex.
///
/// With the Lagrangian `f − Σ α_i w_i + β(Σ w_i − 1)`, stationarity reads
/// `∇_i f − α_i + β = 0`: the gradient is constant (`−β`) on the support and
/// `α_i = ∇_i f + β ≥ 0` off it.
#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    pub support_multiplier: f64,
    /// `(index, α_i)` for every index in the active set.
    pub active_multipliers: Vec<(usize, f64)>,
    pub stationarity_residual: f64,
    pub dual_feasibility_violation: f64,
}

/// `Π_w g = g − (w·g)𝟙` on raw slices.
///
/// A second pass removes the rounding left in `w·(Π_w g)`, which a large step
/// would otherwise turn into a visible renormalization of the whole iterate.
pub(crate) fn center(w: &[f64], g: &[f64]) -> Vec<f64> {
    let mean = dot(w, g);
    let mut c: Vec<f64> = g.iter().map(|gi| gi - mean).collect();
    let residual = dot(w, &c);
    c.iter_mut().for_each(|ci| *ci -= residual);
    c
}

/// `w·(Π_w g)²` on raw slices.
pub(crate) fn variance(w: &[f64], g: &[f64]) -> f64 {
    let mean = dot(w, g);
    w.iter()
        .zip(g)
        .map(|(wi, gi)| wi * (gi - mean) * (gi - mean))
        .sum()
}

/// Applies the projector `Π_w = I − 𝟙⊗w` to `g`.
pub fn centered_gradient(w: &SimplexPoint, g: &GradientVector) -> Result<GradientVector> {
    check_len(w.len(), g.len())?;
    Ok(GradientVector(center(w, g)))
}

/// Euclidean projection onto the simplex by sorting and thresholding.
pub fn project_to_simplex(v: &[f64]) -> Result<SimplexPoint> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    SimplexPoint::new(v.iter().map(|x| (x - theta).max(0.0)).collect())
}

/// `D(u|w) = Σ_{u_i ≠ 0} u_i log(u_i / w_i)`.
pub fn relative_entropy(u: &SimplexPoint, w: &SimplexPoint) -> Result<f64> {
    check_len(u.len(), w.len())?;
    let mut total = 0.0;
    for (index, (ui, wi)) in u.iter().zip(w.iter()).enumerate() {
        if *ui == 0.0 {
            continue;
        }
        if *wi == 0.0 {
            return Err(Error::InfiniteDivergence { index });
        }
        total += ui * (ui / wi).ln();
    }
    // Rounding can push an exact zero slightly negative.
    Ok(total.max(0.0))
}

/// `Var[g|w] = w·(g − w·g)²`.
pub fn weighted_variance(w: &SimplexPoint, g: &GradientVector) -> Result<f64> {
    check_len(w.len(), g.len())?;
    Ok(variance(w, g))
}

/// Reports how far `(w, ∇f(w))` is from satisfying the simplex KKT conditions.
///
/// The support value of the gradient is taken as its mean over the support.
pub fn kkt_residual(w: &SimplexPoint, g: &GradientVector) -> Result<KktReport> {
    check_len(w.len(), g.len())?;
    Ok(kkt_raw(w, g))
}

pub(crate) fn kkt_raw(w: &SimplexPoint, g: &[f64]) -> KktReport {
    let support = w.support();
    let support_mean = if support.is_empty() {
        // Every weight sits below the tolerance; fall back to the heaviest index.
        let heaviest = crate::linalg::argmax(w.iter().copied().enumerate()).unwrap_or(0);
        g[heaviest]
    } else {
        support.iter().map(|&i| g[i]).sum::<f64>() / support.len() as f64
    };
    let stationarity_residual = support
        .iter()
        .map(|&i| (g[i] - support_mean).abs())
        .fold(0.0, f64::max);
    let beta = -support_mean;
    let active_multipliers: Vec<(usize, f64)> = w
        .active_set()
        .into_iter()
        .map(|i| (i, g[i] + beta))
        .collect();
    let dual_feasibility_violation = active_multipliers
        .iter()
        .map(|&(_, alpha)| -alpha)
        .fold(0.0, f64::max);
    KktReport {
        support_multiplier: beta,
        active_multipliers,
        stationarity_residual,
        dual_feasibility_violation,
    }
}
