//! Iteration schemes over the simplex and the driver that runs them.
//!
//! The single-step updates live in [`steps`] and are usable on their own.
//! [`Solver`] strings them together with a step-size rule and a stopping rule
//! and records a [`SolverTrace`].

mod line_search;
mod schedule;
mod steps;

pub use line_search::{backtracking_line_search, exact_quadratic_line_search, MAX_SHRINKS};
pub use schedule::{
    c_gamma, check_schedule, check_schedule_with_optimum, rate_bound, ScheduleCheck, ScheduleMode, StepCondition};
pub use steps::{
    away_vertex, cs_max_step, cs_step_exponential, cs_step_linear, egd_step, frank_wolfe_vertex,
    fw_step, pfw_step, pgd_step,
};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::distance;
use crate::objectives::Objective;
use crate::simplex::{center, variance, SimplexPoint};

use line_search::backtrack_path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cs")]
    CauchySimplex,
    #[serde(rename = "cs-exp")]
    CauchySimplexExp,
    #[serde(rename = "egd")]
    ExponentiatedGradient,
    #[serde(rename = "pgd")]
    ProjectedGradient,
    #[serde(rename = "fw")]
    FrankWolfe,
    #[serde(rename = "pfw")]
    PairwiseFrankWolfe,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::CauchySimplex,
        Method::CauchySimplexExp,
        Method::ExponentiatedGradient,
        Method::ProjectedGradient,
        Method::FrankWolfe,
        Method::PairwiseFrankWolfe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CauchySimplex => "cs",
            Method::CauchySimplexExp => "cs-exp",
            Method::ExponentiatedGradient => "egd",
            Method::ProjectedGradient => "pgd",
            Method::FrankWolfe => "fw",
            Method::PairwiseFrankWolfe => "pfw",
        }
    }

    /// Whether the update moves along a straight line `w − ηd`, which is what
    /// an exact line search needs.
    pub fn is_linear(self) -> bool {
        matches!(
            self,
            Method::CauchySimplex | Method::FrankWolfe | Method::PairwiseFrankWolfe
        )
    }

    /// Multiplicative schemes cannot leave the support of their iterate.
    fn is_multiplicative(self) -> bool {
        matches!(
            self,
            Method::CauchySimplex | Method::CauchySimplexExp | Method::ExponentiatedGradient
        )
    }

    /// Exact line search for the straight-line schemes, backtracking otherwise.
    pub fn default_rule(self) -> StepSizeRule {
        if self.is_linear() {
            StepSizeRule::ExactQuadratic
        } else {
            StepSizeRule::backtracking()
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown solver `{s}`; valid: {}", valid.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepSizeRule {
    /// Constant step; an error if it ever exceeds the scheme's admissible maximum.
    Fixed { eta: f64 },
    /// Constant step clipped to the admissible maximum.
    ClippedFixed { eta: f64 },
    /// Closed-form line search, clipped to the admissible maximum.
    ExactQuadratic,
    /// Armijo backtracking. Without `initial` the search starts from the
    /// admissible maximum, or for schemes without one, from twice the last
    /// accepted step (1 on the first iteration).
    Backtracking {
        initial: Option<f64>,
        shrink: f64,
        armijo: f64,
    },
}

impl StepSizeRule {
    pub const DEFAULT_SHRINK: f64 = 0.5;
    pub const DEFAULT_ARMIJO: f64 = 1e-4;

    pub fn backtracking() -> Self {
        StepSizeRule::Backtracking {
            initial: None,
            shrink: Self::DEFAULT_SHRINK,
            armijo: Self::DEFAULT_ARMIJO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            StepSizeRule::Fixed { eta } | StepSizeRule::ClippedFixed { eta } => {
                if !(eta > 0.0 && eta.is_finite()) {
                    return bad(format!("step size must be positive and finite, got {eta}"));
                }
            }
            StepSizeRule::ExactQuadratic => {}
            StepSizeRule::Backtracking {
                initial,
                shrink,
                armijo,
            } => {
                if let Some(eta) = initial {
                    if !(eta > 0.0 && eta.is_finite()) {
                        return bad(format!("initial step must be positive and finite, got {eta}"));
                    }
                }
                if !(shrink > 0.0 && shrink < 1.0) {
                    return bad(format!("shrink factor must lie in (0, 1), got {shrink}"));
                }
                if !(armijo > 0.0 && armijo < 1.0) {
                    return bad(format!("Armijo constant must lie in (0, 1), got {armijo}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetCheck {
    pub point: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminationRule {
    pub max_iterations: usize,
    pub gradient_variance_tolerance: f64,
    /// Stop once the objective's image of the iterate is within `radius` of `point`.
    pub target_check: Option<TargetCheck>,
}

impl TerminationRule {
    pub fn new(max_iterations: usize) -> Self {
        Self {
            max_iterations,
            gradient_variance_tolerance: 0.0,
            target_check: None,
        }
    }

    pub fn variance_tolerance(mut self, tol: f64) -> Self {
        self.gradient_variance_tolerance = tol;
        self
    }

    pub fn target(mut self, point: Vec<f64>, radius: f64) -> Self {
        self.target_check = Some(TargetCheck { point, radius });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.gradient_variance_tolerance >= 0.0) {
            return Err(Error::InvalidParameter(
                "gradient variance tolerance must be nonnegative".into(),
            ));
        }
        if let Some(t) = &self.target_check {
            if !(t.radius >= 0.0) {
                return Err(Error::InvalidParameter("target radius must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

impl Default for TerminationRule {
    fn default() -> Self {
        Self::new(10_000)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    MaxIterations,
    VarianceTolerance,
    TargetRadius,
    /// No admissible step moves the iterate: unbounded max rate on a constant
    /// gradient, a zero line-search step, or a pairwise step with `s = v`.
    Stationary,
    /// Backtracking ran out of shrinks, typically because the objective is
    /// flat to rounding at the current iterate.
    LineSearchStalled,
    NumericalFailure(String),
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::MaxIterations => "max-iters",
            Termination::VarianceTolerance => "variance-tolerance",
            Termination::TargetRadius => "target-radius",
            Termination::Stationary => "stationary",
            Termination::LineSearchStalled => "line-search-stalled",
            Termination::NumericalFailure(_) => "numerical-failure",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::NumericalFailure(msg) => write!(f, "numerical-failure: {msg}"),
            other => f.pad(other.name()),
        }
    }
}

/// Quantities recorded at iterate `w^t`, before the step that leaves it.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub objective: f64,
    /// Step taken from this iterate; 0 on the last record.
    pub step: f64,
    /// Admissible maximum used to cap the step (support-restricted for CS).
    pub max_step: Option<f64>,
    /// `1 / max_i (∇_i f − w·∇f)` over every index.
    pub unrestricted_max_step: Option<f64>,
    pub variance: f64,
    pub stationarity: f64,
    /// `max_i (∇_i f − w·∇f)²` over every index.
    pub max_centered_sq: f64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub iterate: SimplexPoint,
    pub iteration: usize,
    pub last_step: f64,
}

#[derive(Clone, Debug)]
pub struct SolverTrace {
    pub method: Method,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub state: SolverState,
    /// Every iterate `w^0, w^1, …` when requested via [`Solver::keep_iterates`].
    pub iterates: Option<Vec<SimplexPoint>>,
}

impl SolverTrace {
    pub fn solution(&self) -> &SimplexPoint {
        &self.state.iterate
    }

    pub fn iterations(&self) -> usize {
        self.state.iteration
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn elapsed(&self) -> Duration {
        self.records.last().map_or(Duration::ZERO, |r| r.elapsed)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }
}

#[derive(Clone, Debug)]
pub struct Solver {
    method: Method,
    rule: StepSizeRule,
    stop: TerminationRule,
    keep_iterates: bool,
}

impl Solver {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            rule: method.default_rule(),
            stop: TerminationRule::default(),
            keep_iterates: false,
        }
    }

    pub fn step_rule(mut self, rule: StepSizeRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn termination(mut self, stop: TerminationRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn keep_iterates(mut self, keep: bool) -> Self {
        self.keep_iterates = keep;
        self
    }

    pub fn run<O: Objective + ?Sized>(&self, objective: &O, w0: SimplexPoint) -> Result<SolverTrace> {
        self.rule.validate()?;
        self.stop.validate()?;
        check_len(objective.dim(), w0.len())?;
        if self.rule == StepSizeRule::ExactQuadratic && !self.method.is_linear() {
            return Err(Error::Config(format!(
                "exact line search needs a straight-line scheme; `{}` follows a curved path",
                self.method
            )));
        }
        if let Some(t) = &self.stop.target_check {
            let image = objective.image(&w0).ok_or_else(|| {
                Error::Config("target stopping rule needs an objective with an image".into())
            })?;
            check_len(image.len(), t.point.len())?;
        }

        let start = Instant::now();
        let mut iterates = self.keep_iterates.then(|| vec![w0.clone()]);
        let mut records = Vec::new();
        let mut w = w0;
        let mut t = 0;
        let mut last_step = 0.0;
        let termination = loop {
            let (f, g) = objective.value_grad(&w);
            if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
                break Termination::NumericalFailure(format!(
                    "non-finite objective or gradient at iteration {t}"
                ));
            }
            let centered = center(&w, &g);
            let kkt = crate::simplex::kkt_raw(&w, &g);
            let var = variance(&w, &g);
            let restricted = steps::max_step_raw(&w, &g, true);
            records.push(IterationRecord {
                objective: f,
                step: 0.0,
                max_step: None,
                unrestricted_max_step: steps::max_step_raw(&w, &g, false),
                variance: var,
                stationarity: kkt.stationarity_residual,
                max_centered_sq: centered.iter().map(|c| c * c).fold(0.0, f64::max),
                elapsed: start.elapsed(),
            });

            if let Some(tc) = &self.stop.target_check {
                if let Some(image) = objective.image(&w) {
                    if distance(&image, &tc.point) <= tc.radius {
                        break Termination::TargetRadius;
                    }
                }
            }
            let tol = self.stop.gradient_variance_tolerance;
            let off_support_ok = self.method.is_multiplicative()
                || kkt.dual_feasibility_violation * kkt.dual_feasibility_violation <= tol;
            if var <= tol && off_support_ok {
                break Termination::VarianceTolerance;
            }
            if t >= self.stop.max_iterations {
                break Termination::MaxIterations;
            }

            let outcome = self.step(objective, &w, f, &g, restricted, last_step);
            let (eta, cap, next) = match outcome {
                Ok(StepOutcome::Moved { eta, cap, next }) => (eta, cap, next),
                Ok(StepOutcome::Stop(reason)) => break reason,
                Err(e @ (Error::Config(_) | Error::InvalidParameter(_))) => return Err(e),
                Err(e) => break Termination::NumericalFailure(e.to_string()),
            };
            let record = records.last_mut().expect("record pushed above");
            record.step = eta;
            record.max_step = cap;
            w = next;
            last_step = eta;
            t += 1;
            if let Some(list) = iterates.as_mut() {
                list.push(w.clone());
            }
        };

        Ok(SolverTrace {
            method: self.method,
            records,
            termination,
            state: SolverState {
                iterate: w,
                iteration: t,
                last_step,
            },
            iterates,
        })
    }

    fn step<O: Objective + ?Sized>(
        &self,
        objective: &O,
        w: &SimplexPoint,
        f: f64,
        g: &[f64],
        restricted: Option<f64>,
        last_step: f64,
    ) -> Result<StepOutcome> {
        use Method::*;

        // Admissible maximum and, for straight-line schemes, the direction d
        // with w' = w − ηd.
        let (cap, direction) = match self.method {
            CauchySimplex => {
                let Some(cap) = restricted else {
                    return Ok(StepOutcome::Stop(Termination::Stationary));
                };
                let d = center(w, g)
                    .iter()
                    .enumerate()
                    .map(|(i, c)| if w.in_support(i) { w[i] * c } else { 0.0 })
                    .collect();
                (Some(cap), Some(d))
            }
            CauchySimplexExp | ExponentiatedGradient | ProjectedGradient => (None, None),
            FrankWolfe => {
                let s = frank_wolfe_vertex(g);
                let mut d = w.to_vec();
                d[s] -= 1.0;
                (Some(1.0), Some(d))
            }
            PairwiseFrankWolfe => {
                let s = frank_wolfe_vertex(g);
                let v = away_vertex(w, g);
                if s == v {
                    return Ok(StepOutcome::Stop(Termination::Stationary));
                }
                let mut d = vec![0.0; w.len()];
                d[v] = 1.0;
                d[s] = -1.0;
                (Some(w[v]), Some(d))
            }
        };

        let apply = |eta: f64| -> Result<SimplexPoint> {
            match self.method {
                CauchySimplex => steps::cs_linear_raw(w, g, eta),
                CauchySimplexExp => steps::cs_exponential_raw(w, g, eta),
                ExponentiatedGradient => steps::egd_raw(w, g, eta),
                ProjectedGradient => steps::pgd_raw(w, g, eta),
                FrankWolfe => steps::fw_raw(w, g, eta),
                PairwiseFrankWolfe => steps::pfw_raw(w, g, eta),
            }
        };

        let (eta, next) = match self.rule {
            StepSizeRule::Fixed { eta } => (eta, apply(eta)?),
            StepSizeRule::ClippedFixed { eta } => {
                let eta = cap.map_or(eta, |c| eta.min(c));
                (eta, apply(eta)?)
            }
            StepSizeRule::ExactQuadratic => {
                let d = direction.expect("checked in run");
                let eta = exact_quadratic_line_search(objective, w, &d, cap.expect("linear scheme"))?;
                let next = apply(eta)?;
                // Near the optimum both the slope and the curvature are rounding
                // noise and their ratio is meaningless; an uphill step means
                // there is nothing left to resolve.
                if objective.value(&next) > f + 4.0 * f64::EPSILON * (1.0 + f.abs()) {
                    return Ok(StepOutcome::Stop(Termination::Stationary));
                }
                (eta, next)
            }
            StepSizeRule::Backtracking {
                initial,
                shrink,
                armijo,
            } => {
                let natural = match self.method {
                    CauchySimplexExp => restricted,
                    _ => cap,
                };
                let start = match (initial, natural) {
                    (Some(eta), Some(c)) => eta.min(c),
                    (Some(eta), None) => eta,
                    (None, Some(c)) => c,
                    (None, None) if last_step > 0.0 => 2.0 * last_step,
                    (None, None) => 1.0,
                };
                // Searching along the realized update, not the line w − ηd,
                // keeps accepted steps monotone even when the zero set is
                // dropped and the weights renormalized.
                match backtrack_path(objective, w, f, g, start, shrink, armijo, apply) {
                    Ok(found) => found,
                    Err(Error::LineSearchExhausted { .. }) => {
                        return Ok(StepOutcome::Stop(Termination::LineSearchStalled))
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        if eta == 0.0 {
            return Ok(StepOutcome::Stop(Termination::Stationary));
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("iterate"));
        }
        Ok(StepOutcome::Moved { eta, cap, next })
    }
}

enum StepOutcome {
    Moved {
        eta: f64,
        cap: Option<f64>,
        next: SimplexPoint,
    },
    Stop(Termination),
}

/// Runs `method` from `w0` with the given step and stopping rules.
pub fn run_solver<O: Objective + ?Sized>(
    objective: &O,
    method: Method,
    rule: StepSizeRule,
    stop: TerminationRule,
    w0: SimplexPoint,
) -> Result<SolverTrace> {
    Solver::new(method).step_rule(rule).termination(stop).run(objective, w0)
}
