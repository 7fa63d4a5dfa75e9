//! Objective functions over the simplex and a finite-difference gradient checker.

mod exam;
mod hull;
mod simple;

pub use exam::{
    exam_value_grad, kde_density, ExamDiagnostics, ExamWeightingProblem, Partition,
    TargetDensity, TruncatedNormalKernel,
};
pub use hull::{hull_value_grad, HullProjectionProblem};
pub use simple::{LinearObjective, QuadraticObjective};

use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// Value and gradient provider for `f(w)`.
///
/// Evaluation takes raw slices so that finite differences and line searches
/// can probe points slightly off the simplex.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, w: &[f64]) -> f64;

    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>);

    /// Unclipped minimizer of `η ↦ f(w − η d)` when it has a closed form.
    fn exact_step(&self, _w: &[f64], _direction: &[f64]) -> Option<f64> {
        None
    }

    /// The point that `w` represents in the problem's own space, if any.
    fn image(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// An upper bound on the Lipschitz constant of `∇f`, if known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, w: &[f64]) -> f64 {
        (**self).value(w)
    }
    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_grad(w)
    }
    fn exact_step(&self, w: &[f64], direction: &[f64]) -> Option<f64> {
        (**self).exact_step(w, direction)
    }
    fn image(&self, w: &[f64]) -> Option<Vec<f64>> {
        (**self).image(w)
    }
    fn lipschitz_bound(&self) -> Option<f64> {
        (**self).lipschitz_bound()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientCheckReport {
    pub max_relative_error: f64,
    pub errors: Vec<f64>,
}

/// Compares the analytic gradient with central differences of step `h`.
///
/// The error for coordinate `i` is `|fd_i − g_i| / max(1, |g_i|)`.
pub fn finite_difference_check<O: Objective + ?Sized>(
    f: &O,
    w: &SimplexPoint,
    h: f64,
) -> Result<GradientCheckReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    if w.iter().any(|&wi| wi <= h) {
        return Err(Error::InvalidParameter(
            "finite differences need every weight above h".into(),
        ));
    }
    let (value, grad) = f.value_grad(w);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("objective"));
    }
    let mut probe = w.to_vec();
    let mut errors = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let base = probe[i];
        probe[i] = base + h;
        let up = f.value(&probe);
        probe[i] = base - h;
        let down = f.value(&probe);
        probe[i] = base;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        let fd = (up - down) / (2.0 * h);
        errors.push((fd - grad[i]).abs() / grad[i].abs().max(1.0));
    }
    let max_relative_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(GradientCheckReport {
        max_relative_error,
        errors,
    })
}
