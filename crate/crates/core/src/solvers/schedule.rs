//! Post-hoc checks of the step schedule behind the `log(n)/(Tη)` rate bound
//! for the linear Cauchy-Simplex iteration.

use serde::{Deserialize, Serialize};

use crate::objectives::Objective;
use crate::simplex::{center, SimplexPoint};
use crate::solvers::IterationRecord;

/// `C_γ = γ⁻² log(e^{−γ}/(1 − γ))`, increasing on `[0, 1)` from `1/2` to `∞`.
pub fn c_gamma(gamma: f64) -> f64 {
    if gamma.is_nan() {
        return f64::NAN;
    }
    if gamma >= 1.0 {
        return f64::INFINITY;
    }
    if gamma.abs() < 1e-4 {
        // −γ − log(1 − γ) = γ²/2 + γ³/3 + γ⁴/4 + …
        return 0.5 + gamma / 3.0 + gamma * gamma / 4.0;
    }
    (-gamma - (-gamma).ln_1p()) / (gamma * gamma)
}

/// `log(n) / (T η)`.
pub fn rate_bound(n: usize, iterations: usize, eta: f64) -> f64 {
    (n as f64).ln() / (iterations as f64 * eta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Every step satisfies the stated hypotheses: `η_t` decreasing,
    /// `η_t ≤ min{1/L, η_{t,max}}` and the pointwise `C_γ` inequality.
    Literal,
    /// The inequalities the bound's derivation actually consumes: `γ_t < 1`,
    /// the per-step descent `f_{t+1} ≤ f_t − η_t Var_t / 2`, and a nonpositive
    /// running sum `Σ_t η_t (C_{γ_t} η_t M_t − ½ Var_t Σ_{k≤t} η_k)` with
    /// `M_t = max_i (Π∇f)_i²`. The bound then uses `min_{t<T} η_t`.
    ProofConditions,
    /// As `ProofConditions`, but with a known minimizer `w*` in place of the
    /// worst case: the running sum uses `w*·(Π∇f)²` instead of `M_t`, `γ_t`
    /// is `η_t max_{i ∈ supp w*} (Π∇f)_i` (floored at 0), and every step must
    /// keep `supp w*` inside the support of the next iterate.
    OptimumConditions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepCondition {
    pub eta: f64,
    /// `η_t / η_{t,max}` with the maximum over every index.
    pub gamma: f64,
    pub c_gamma: f64,
    /// `(t + 1) Var_t / (2 M_t)`.
    pub pointwise_rhs: f64,
    pub pointwise_ok: bool,
    pub lipschitz_ok: bool,
    pub decreasing_ok: bool,
    pub descent_ok: bool,
    /// Running sum through this step.
    pub cumulative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleCheck {
    pub mode: ScheduleMode,
    pub steps: Vec<StepCondition>,
    /// `passes[T]` for `T = 0..=steps.len()`; `passes[0]` is always false.
    pub passes: Vec<bool>,
}

impl ScheduleCheck {
    pub fn passes_at(&self, horizon: usize) -> bool {
        self.passes.get(horizon).copied().unwrap_or(false)
    }

    pub fn passing_horizons(&self) -> impl Iterator<Item = usize> + '_ {
        self.passes
            .iter()
            .enumerate()
            .filter(|(_, ok)| **ok)
            .map(|(t, _)| t)
    }

    /// `log(n) / (T min_{t<T} η_t)`.
    pub fn bound_at(&self, n: usize, horizon: usize) -> f64 {
        let eta = self.steps[..horizon]
            .iter()
            .map(|s| s.eta)
            .fold(f64::INFINITY, f64::min);
        rate_bound(n, horizon, eta)
    }
}

/// Evaluates the schedule conditions along a linear Cauchy-Simplex trace.
///
/// `lipschitz` is an upper bound on the gradient's Lipschitz constant; it is
/// only consulted in [`ScheduleMode::Literal`]. `slack` absolutely relaxes the
/// descent test.
pub fn check_schedule(
    records: &[IterationRecord],
    lipschitz: Option<f64>,
    mode: ScheduleMode,
    slack: f64,
) -> ScheduleCheck {
    let taken = records.len().saturating_sub(1);
    let mut steps = Vec::with_capacity(taken);
    let mut passes = vec![false; taken + 1];
    let mut eta_sum = 0.0;
    let mut cumulative = 0.0;
    let mut all_ok = true;
    for t in 0..taken {
        let (r, next) = (&records[t], &records[t + 1]);
        let eta = r.step;
        let gamma = r.unrestricted_max_step.map_or(0.0, |m| eta / m);
        let c = c_gamma(gamma);
        let pointwise_rhs = if r.max_centered_sq > 0.0 {
            (t + 1) as f64 * r.variance / (2.0 * r.max_centered_sq)
        } else {
            f64::INFINITY
        };
        let lipschitz_ok = lipschitz.is_some_and(|l| eta * l <= 1.0);
        let decreasing_ok = t == 0 || eta <= steps.last().map_or(f64::INFINITY, |s: &StepCondition| s.eta);
        let descent_ok = next.objective <= r.objective - 0.5 * eta * r.variance + slack;
        eta_sum += eta;
        let term = if r.max_centered_sq > 0.0 {
            eta * (c * eta * r.max_centered_sq - 0.5 * r.variance * eta_sum)
        } else {
            0.0
        };
        cumulative += term;
        let cond = StepCondition {
            eta,
            gamma,
            c_gamma: c,
            pointwise_rhs,
            pointwise_ok: c <= pointwise_rhs,
            lipschitz_ok,
            decreasing_ok,
            descent_ok,
            cumulative,
        };
        let step_ok = eta > 0.0
            && gamma < 1.0
            && match mode {
                ScheduleMode::Literal => {
                    cond.pointwise_ok && cond.lipschitz_ok && cond.decreasing_ok
                }
                _ => cond.descent_ok,
            };
        all_ok &= step_ok;
        passes[t + 1] = all_ok
            && match mode {
                ScheduleMode::Literal => true,
                _ => cumulative <= 0.0,
            };
        steps.push(cond);
    }
    ScheduleCheck {
        mode,
        steps,
        passes,
    }
}

/// [`ScheduleMode::OptimumConditions`] along a trace kept with its iterates.
/// `records[t].step` must be the step that produced `iterates[t + 1]`.
pub fn check_schedule_with_optimum<O: Objective>(
    objective: &O,
    iterates: &[SimplexPoint],
    records: &[IterationRecord],
    optimum: &SimplexPoint,
    slack: f64,
) -> ScheduleCheck {
    let taken = iterates.len().min(records.len()).saturating_sub(1);
    let mut steps = Vec::with_capacity(taken);
    let mut passes = vec![false; taken + 1];
    let (mut eta_sum, mut cumulative, mut all_ok) = (0.0, 0.0, true);
    for t in 0..taken {
        let (w, next) = (&iterates[t], &iterates[t + 1]);
        let eta = records[t].step;
        let (f, g) = objective.value_grad(w);
        let pg = center(w, &g);
        let var: f64 = w.iter().zip(&pg).map(|(wi, p)| wi * p * p).sum();
        let on_optimum = || optimum.iter().zip(&pg).filter(|(u, _)| **u > 0.0);
        let gamma = on_optimum().map(|(_, p)| eta * p).fold(0.0, f64::max);
        let weighted: f64 = on_optimum().map(|(u, p)| u * p * p).sum();
        let c = c_gamma(gamma);
        eta_sum += eta;
        cumulative += eta * (c * eta * weighted - 0.5 * var * eta_sum);
        let support_ok = optimum.iter().zip(next.iter()).all(|(u, v)| *u == 0.0 || *v > 0.0);
        let descent_ok = objective.value(next) <= f - 0.5 * eta * var + slack;
        all_ok &= eta > 0.0 && gamma < 1.0 && support_ok && descent_ok;
        passes[t + 1] = all_ok && cumulative <= 0.0;
        let pointwise_rhs = if weighted > 0.0 {
            (t + 1) as f64 * var / (2.0 * weighted)
        } else {
            f64::INFINITY
        };
        steps.push(StepCondition {
            eta,
            gamma,
            c_gamma: c,
            pointwise_rhs,
            pointwise_ok: c <= pointwise_rhs,
            lipschitz_ok: objective.lipschitz_bound().is_some_and(|l| eta * l <= 1.0),
            decreasing_ok: steps.last().is_none_or(|s: &StepCondition| eta <= s.eta),
            descent_ok,
            cumulative,
        });
    }
    ScheduleCheck {
        mode: ScheduleMode::OptimumConditions,
        steps,
        passes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn record(objective: f64, step: f64, max: f64, variance: f64, m: f64) -> IterationRecord {
        IterationRecord {
            objective,
            step,
            max_step: Some(max),
            unrestricted_max_step: Some(max),
            variance,
            stationarity: 0.0,
            max_centered_sq: m,
            elapsed: Duration::ZERO,
        }
    }

    #[test]
    fn c_gamma_limits_and_monotonicity() {
        assert!((c_gamma(0.0) - 0.5).abs() < 1e-15);
        assert!((c_gamma(1e-6) - 0.5).abs() < 1e-6);
        // γ = 1/2: 4(−1/2 + log 2).
        assert!((c_gamma(0.5) - 4.0 * (2f64.ln() - 0.5)).abs() < 1e-14);
        assert_eq!(c_gamma(1.0), f64::INFINITY);
        let grid: Vec<f64> = (0..1000).map(|k| c_gamma(k as f64 / 1000.0)).collect();
        assert!(grid.windows(2).all(|p| p[1] >= p[0]));
        // Continuity across the series switch.
        assert!((c_gamma(0.99e-4) - c_gamma(1.01e-4)).abs() < 1e-6);
    }

    #[test]
    fn rate_bound_formula() {
        assert!((rate_bound(4, 10, 0.5) - 4f64.ln() / 5.0).abs() < 1e-15);
    }

    #[test]
    fn literal_mode_never_passes_from_the_first_step() {
        // Var ≤ M, so the right side at t = 0 is at most 1/2 < C_γ.
        let records = vec![
            record(1.0, 0.1, 1.0, 0.5, 0.5),
            record(0.9, 0.0, 1.0, 0.5, 0.5),
        ];
        let check = check_schedule(&records, Some(1.0), ScheduleMode::Literal, 0.0);
        assert!(!check.steps[0].pointwise_ok);
        assert!(check.steps[0].pointwise_rhs <= 0.5);
        assert_eq!(check.passing_horizons().count(), 0);
    }

    #[test]
    fn proof_conditions_accumulate() {
        // Constant η = 0.1, γ = 0.1, Var = M = 1: term_t = 0.01 (C − (t + 1)/2),
        // negative running sum from T = 2 on.
        let records: Vec<_> = (0..6)
            .map(|k| record(10.0 - k as f64, if k < 5 { 0.1 } else { 0.0 }, 1.0, 1.0, 1.0))
            .collect();
        let check = check_schedule(&records, None, ScheduleMode::ProofConditions, 0.0);
        let c = c_gamma(0.1);
        assert!((check.steps[0].cumulative - 0.01 * (c - 0.5)).abs() < 1e-15);
        assert!(!check.passes_at(1));
        assert!(check.passes_at(2));
        assert_eq!(check.passing_horizons().collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        assert!((check.bound_at(3, 4) - 3f64.ln() / 0.4).abs() < 1e-12);
    }

    #[test]
    fn failed_descent_poisons_later_horizons() {
        let mut records: Vec<_> = (0..6)
            .map(|k| record(10.0 - k as f64, if k < 5 { 0.1 } else { 0.0 }, 1.0, 1.0, 1.0))
            .collect();
        records[3].objective = 9.0;
        let check = check_schedule(&records, None, ScheduleMode::ProofConditions, 0.0);
        assert!(check.passes_at(2));
        assert!(!check.passes_at(3));
        assert!(!check.passes_at(5));
    }

    #[test]
    fn optimum_conditions_on_a_two_point_problem() {
        use crate::linalg::Matrix;
        use crate::objectives::HullProjectionProblem;
        use crate::solvers::{Method, Solver, StepSizeRule, TerminationRule};
        // Segment from (0,0) to (1,0), target (0.25, 1): interior optimum (0.75, 0.25).
        let p = HullProjectionProblem::new(
            Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            vec![0.25, 1.0],
        )
        .unwrap();
        let w0 = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let trace = Solver::new(Method::CauchySimplex)
            .step_rule(StepSizeRule::Fixed { eta: 0.5 })
            .termination(TerminationRule::new(30))
            .keep_iterates(true)
            .run(&p, w0)
            .unwrap();
        let optimum = SimplexPoint::new(vec![0.75, 0.25]).unwrap();
        let check = check_schedule_with_optimum(
            &p,
            trace.iterates.as_deref().unwrap(),
            &trace.records,
            &optimum,
            1e-12,
        );
        assert_eq!(check.mode, ScheduleMode::OptimumConditions);
        assert!(check.steps.iter().all(|s| s.gamma < 1.0 && s.descent_ok));
        let horizons: Vec<usize> = check.passing_horizons().collect();
        assert!(!horizons.is_empty());
        for t in horizons {
            let gap = trace.records[t].objective - 1.0;
            assert!(gap <= check.bound_at(2, t) + 1e-12);
        }
        // A minimizer outside the trace's support can never be certified.
        let vertex = SimplexPoint::vertex(2, 0).unwrap();
        let mut iterates = trace.iterates.clone().unwrap();
        iterates[1] = vertex.clone();
        let bad = check_schedule_with_optimum(&p, &iterates, &trace.records, &SimplexPoint::vertex(2, 1).unwrap(), 1e-12);
        assert_eq!(bad.passing_horizons().count(), 0);
    }
}
