use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::objectives::Objective;
use crate::simplex::SimplexPoint;
use crate::solvers::StepSizeRule;

pub const MAX_SHRINKS: usize = 60;

/// Exact minimizer of `η ↦ f(w − ηd)` for objectives with a closed form,
/// clipped to `[0, cap]`.
pub fn exact_quadratic_line_search<O: Objective + ?Sized>(
    objective: &O,
    w: &SimplexPoint,
    direction: &[f64],
    cap: f64,
) -> Result<f64> {
    if !(cap > 0.0) {
        return Err(Error::InvalidParameter(format!("step cap must be positive, got {cap}")));
    }
    let eta = objective
        .exact_step(w, direction)
        .ok_or_else(|| Error::Config("objective has no closed-form line search".into()))?;
    if eta.is_nan() {
        return Err(Error::NonFinite("exact line search"));
    }
    Ok(eta.clamp(0.0, cap))
}

/// Armijo backtracking along `w − ηd`: the largest `η ∈ {η0, ρη0, ρ²η0, …}`
/// with `f(w − ηd) ≤ f(w) − cη(∇f·d)`.
pub fn backtracking_line_search<O: Objective + ?Sized>(
    objective: &O,
    w: &SimplexPoint,
    direction: &[f64],
    rule: &StepSizeRule,
) -> Result<f64> {
    let StepSizeRule::Backtracking {
        initial: Some(initial),
        shrink,
        armijo,
    } = *rule
    else {
        return Err(Error::InvalidParameter(
            "backtracking line search needs a backtracking rule with an initial step".into(),
        ));
    };
    rule.validate()?;
    let (f0, g) = objective.value_grad(w);
    backtrack_linear(objective, w, f0, &g, direction, initial, shrink, armijo)
}

#[allow(clippy::too_many_arguments)]
fn backtrack_linear<O: Objective + ?Sized>(
    objective: &O,
    w: &[f64],
    f0: f64,
    g: &[f64],
    direction: &[f64],
    initial: f64,
    shrink: f64,
    armijo: f64,
) -> Result<f64> {
    let slope = dot(g, direction);
    if !(slope > 0.0) {
        return Err(Error::NotDescent { slope });
    }
    let mut eta = initial;
    let mut trial = vec![0.0; w.len()];
    for _ in 0..=MAX_SHRINKS {
        for ((t, wi), di) in trial.iter_mut().zip(w).zip(direction) {
            *t = wi - eta * di;
        }
        let f = objective.value(&trial);
        // The strict test rejects steps that only pass through rounding.
        if f <= f0 - armijo * eta * slope && f < f0 {
            return Ok(eta);
        }
        eta *= shrink;
    }
    Err(Error::LineSearchExhausted { shrinks: MAX_SHRINKS })
}

/// Armijo backtracking along a curved path `η ↦ w(η)`, accepting the first
/// `η` with `f(w(η)) ≤ f(w) + c ∇f·(w(η) − w)` and a negative first-order change.
/// Both searches also insist on `f(w(η)) < f(w)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backtrack_path<O, P>(
    objective: &O,
    w: &SimplexPoint,
    f0: f64,
    g: &[f64],
    initial: f64,
    shrink: f64,
    armijo: f64,
    path: P,
) -> Result<(f64, SimplexPoint)>
where
    O: Objective + ?Sized,
    P: Fn(f64) -> Result<SimplexPoint>,
{
    let mut eta = initial;
    for _ in 0..=MAX_SHRINKS {
        let trial = path(eta)?;
        let change: f64 = g
            .iter()
            .zip(trial.iter().zip(w.iter()))
            .map(|(gi, (a, b))| gi * (a - b))
            .sum();
        let f = objective.value(&trial);
        if change < 0.0 && f <= f0 + armijo * change && f < f0 {
            return Ok((eta, trial));
        }
        eta *= shrink;
    }
    Err(Error::LineSearchExhausted { shrinks: MAX_SHRINKS })
}
