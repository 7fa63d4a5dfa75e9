//! Invariant and diagnostic checks over seeded random cases.
//!
//! Each check measures one slack quantity per case and counts the cases where
//! it exceeds the tolerance. `worst` is the largest measured quantity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bench::synth::{benchmark_query, rng, sample_hypercube_hull, uniform_simplex_weights};
use crate::error::Result;
use crate::linalg::{norm_sq, Matrix};
use crate::objectives::{
    finite_difference_check, HullProjectionProblem, Objective, Partition, QuadraticObjective,
    TargetDensity, TruncatedNormalKernel, ExamWeightingProblem,
};
use crate::oracle::exact_hull_projection;
use crate::simplex::{
    centered_gradient, kkt_residual, relative_entropy, weighted_variance, GradientVector,
    SimplexPoint,
};
use crate::solvers::{
    away_vertex, c_gamma, check_schedule, check_schedule_with_optimum, cs_max_step, cs_step_exponential, cs_step_linear, egd_step, fw_step,
    pfw_step, pgd_step, Method, ScheduleMode, Solver, StepSizeRule, TerminationRule,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_owned(),
            cases: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
            tolerance,
        }
    }

    fn record(&mut self, quantity: f64) {
        self.cases += 1;
        // NaN counts as a violation.
        if !(quantity <= self.tolerance) {
            self.violations += 1;
        }
        if quantity > self.worst || quantity.is_nan() {
            self.worst = quantity;
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.violations == 0
    }
}

/// Strictly positive weights, kept away from zero by mixing with uniform.
fn interior_point<R: Rng>(r: &mut R, n: usize) -> SimplexPoint {
    let w = uniform_simplex_weights(r, n);
    let mixed = w.iter().map(|v| 0.9 * v + 0.1 / n as f64).collect();
    SimplexPoint::new(mixed).expect("mixture of distributions")
}

fn gradient<R: Rng>(r: &mut R, n: usize, scale: f64) -> GradientVector {
    GradientVector::new((0..n).map(|_| scale * (2.0 * r.random::<f64>() - 1.0)).collect())
        .expect("finite")
}

/// Every update scheme keeps its output on the simplex for admissible steps,
/// including from points with zeroed entries. Quantity: worst of the most
/// negative weight and `|Σw − 1|`.
pub fn check_feasibility(cases: usize, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("simplex feasibility", 1e-12);
    let mut r = rng(seed, 10);
    for case in 0..cases {
        let n = r.random_range(2..20);
        let mut w = uniform_simplex_weights(&mut r, n);
        if case % 2 == 1 {
            let zero = r.random_range(0..n);
            w[zero] = 0.0;
        }
        let w = SimplexPoint::new(w)?;
        let g = gradient(&mut r, n, 10.0);
        let u: f64 = r.random_range(0.0..1.0);
        let next = match case % 6 {
            0 => match cs_max_step(&w, &g, true) {
                Some(max) => cs_step_linear(&w, &g, u * max)?,
                None => w.clone(),
            },
            1 => cs_step_exponential(&w, &g, 10.0 * u)?,
            2 => egd_step(&w, &g, 10.0 * u)?,
            3 => pgd_step(&w, &g, 10.0 * u)?,
            4 => fw_step(&w, &g, u)?,
            _ => pfw_step(&w, &g, u * w[away_vertex(&w, &g)])?,
        };
        let min = next.iter().copied().fold(f64::INFINITY, f64::min);
        let sum: f64 = next.iter().sum();
        out.record((-min).max((sum - 1.0).abs()));
    }
    Ok(out)
}

fn random_quadratic<R: Rng>(r: &mut R, n: usize) -> Result<QuadraticObjective> {
    let m = r.random_range(1..=n + 2);
    let data = (0..m * n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
    let b = (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
    QuadraticObjective::from_factor(&Matrix::from_vec(m, n, data)?, b)
}

/// Linear CS steps with `η ≤ min{1/L, η_max}` on convex quadratics satisfy
/// `f(w') ≤ f(w) − (η/2) Var[∇f|w]`. Quantity: `f(w') − f(w) + (η/2) Var`.
pub fn check_descent(cases: usize, seed: u64, tolerance: f64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("linear progress bound", tolerance);
    let mut r = rng(seed, 11);
    for _ in 0..cases {
        let n = r.random_range(2..12);
        let f = random_quadratic(&mut r, n)?;
        let w = interior_point(&mut r, n);
        let (f0, g) = f.value_grad(&w);
        let g = GradientVector::new(g)?;
        let lipschitz = f.lipschitz_bound().expect("quadratics know their bound");
        let cap = cs_max_step(&w, &g, false).map_or(1.0 / lipschitz, |m| m.min(1.0 / lipschitz));
        let eta = r.random_range(0.0..=1.0) * cap;
        let next = cs_step_linear(&w, &g, eta)?;
        let var = weighted_variance(&w, &g)?;
        out.record(f.value(&next) - f0 + 0.5 * eta * var);
    }
    Ok(out)
}

/// `D(u|w') − D(u|w) ≤ η u·Πg + C_γ η² u·(Πg)²` for one linear step with
/// `η = γ η_max`, `γ ∈ (0, 1)`. Quantity: left side minus right side.
pub fn check_relative_entropy_step(cases: usize, seed: u64, tolerance: f64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("relative entropy step", tolerance);
    let mut r = rng(seed, 12);
    for _ in 0..cases {
        let n = r.random_range(2..15);
        let w = interior_point(&mut r, n);
        let u = SimplexPoint::new(uniform_simplex_weights(&mut r, n))?;
        let g = gradient(&mut r, n, 5.0);
        let Some(max) = cs_max_step(&w, &g, false) else {
            continue;
        };
        let gamma = r.random_range(0.01..0.99);
        let eta = gamma * max;
        let next = cs_step_linear(&w, &g, eta)?;
        let pg = centered_gradient(&w, &g)?;
        let first: f64 = u.iter().zip(pg.iter()).map(|(ui, p)| ui * p).sum();
        let second: f64 = u.iter().zip(pg.iter()).map(|(ui, p)| ui * p * p).sum();
        let lhs = relative_entropy(&u, &next)? - relative_entropy(&u, &w)?;
        let rhs = eta * first + c_gamma(gamma) * eta * eta * second;
        out.record(lhs - rhs);
    }
    Ok(out)
}

pub const SLOPE_STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Least-squares slope of `log ‖linear − exponential‖` against `log η` for
/// one `(w, g)` pair, over [`SLOPE_STEPS`].
pub fn scheme_gap_slope(w: &SimplexPoint, g: &GradientVector) -> Result<f64> {
    let mut pts = Vec::with_capacity(SLOPE_STEPS.len());
    for eta in SLOPE_STEPS {
        let lin = cs_step_linear(w, g, eta)?;
        let exp = cs_step_exponential(w, g, eta)?;
        pts.push((eta.ln(), crate::linalg::distance(&lin, &exp).ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Norms of the `η²` and `η³` coefficients of `linear − exponential`:
/// `w_i(c_i² − V)/2` and `w_i(3c_iV + M₃ − c_i³)/6`, with `c = Π_w g`,
/// `V = Σw c²` and `M₃ = Σw c³`.
pub fn scheme_gap_coefficients(w: &SimplexPoint, g: &GradientVector) -> Result<(f64, f64)> {
    let c = centered_gradient(w, g)?;
    let v: f64 = w.iter().zip(c.iter()).map(|(wi, ci)| wi * ci * ci).sum();
    let m3: f64 = w.iter().zip(c.iter()).map(|(wi, ci)| wi * ci * ci * ci).sum();
    let second: Vec<f64> = w.iter().zip(c.iter()).map(|(wi, ci)| wi * (ci * ci - v) / 2.0).collect();
    let third: Vec<f64> = w
        .iter()
        .zip(c.iter())
        .map(|(wi, ci)| wi * (3.0 * ci * v + m3 - ci * ci * ci) / 6.0)
        .collect();
    Ok((norm_sq(&second).sqrt(), norm_sq(&third).sqrt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeAgreement {
    pub slope: CheckOutcome,
    /// Pairs redrawn because the `η²` term does not dominate at the largest step.
    pub redrawn: usize,
}

/// Quantity: `|slope − 2|` per random pair, with gradients scaled so every
/// step in [`SLOPE_STEPS`] is admissible. A pair whose `η³` term exceeds a
/// tenth of the `η²` term at `η = 0.1` is redrawn: there the `η²` coefficient
/// nearly vanishes (n = 2 near the center is exact cancellation) and the fit
/// measures the next order instead.
pub fn check_scheme_agreement(pairs: usize, seed: u64, tolerance: f64) -> Result<SchemeAgreement> {
    let mut out = SchemeAgreement {
        slope: CheckOutcome::new("scheme agreement slope", tolerance),
        redrawn: 0,
    };
    let mut r = rng(seed, 13);
    let largest = SLOPE_STEPS[0];
    while out.slope.cases < pairs {
        let n = r.random_range(2..20);
        let w = interior_point(&mut r, n);
        let g = gradient(&mut r, n, 0.5);
        let (second, third) = scheme_gap_coefficients(&w, &g)?;
        if largest * third > 0.1 * second {
            out.redrawn += 1;
            if out.redrawn > 100 * pairs {
                return Err(crate::error::Error::InvalidParameter(
                    "scheme agreement sampler keeps drawing degenerate pairs".into(),
                ));
            }
            continue;
        }
        out.slope.record((scheme_gap_slope(&w, &g)? - 2.0).abs());
    }
    Ok(out)
}

fn random_hull<R: Rng>(r: &mut R) -> Result<HullProjectionProblem> {
    let n = r.random_range(2..30);
    let d = r.random_range(1..8);
    let x = (0..n * d).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
    let y = (0..d).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
    HullProjectionProblem::new(Matrix::from_vec(n, d, x)?, y)
}

/// Max relative gradient error of the hull objective against central
/// differences with step `h`.
pub fn check_hull_gradient(instances: usize, seed: u64, h: f64, tolerance: f64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("hull gradient", tolerance);
    let mut r = rng(seed, 14);
    for _ in 0..instances {
        let p = random_hull(&mut r)?;
        let w = interior_point(&mut r, p.dim());
        out.record(finite_difference_check(&p, &w, h)?.max_relative_error);
    }
    Ok(out)
}

pub fn random_exam_problem<R: Rng>(r: &mut R) -> Result<ExamWeightingProblem> {
    let questions = r.random_range(3..20);
    let students = r.random_range(10..60);
    let p: f64 = r.random_range(0.3..0.9);
    let data = (0..questions * students)
        .map(|_| if r.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect();
    let bandwidth = r.random_range(0.03..0.15);
    let partition = Partition::uniform(0.0, 1.0, r.random_range(50..400))?;
    ExamWeightingProblem::new(
        Matrix::from_vec(questions, students, data)?,
        TruncatedNormalKernel::unit_interval(bandwidth),
        TargetDensity::TruncatedNormal { mean: 0.5, std: 0.1 },
        partition,
    )
}

pub fn check_exam_gradient(instances: usize, seed: u64, h: f64, tolerance: f64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("exam gradient", tolerance);
    let mut r = rng(seed, 15);
    for _ in 0..instances {
        let p = random_exam_problem(&mut r)?;
        let w = interior_point(&mut r, p.dim());
        out.record(finite_difference_check(&p, &w, h)?.max_relative_error);
    }
    Ok(out)
}

/// Small hypercube hull instances the exact oracle can solve: `6·per_surface`
/// points in three dimensions.
pub fn small_hull_instance(per_surface: usize, seed: u64, q: u64) -> Result<HullProjectionProblem> {
    let x = sample_hypercube_hull(3, per_surface, seed)?;
    benchmark_query(&x, seed, q)?.problem()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KktOutcome {
    pub stationarity: CheckOutcome,
    pub dual_feasibility: CheckOutcome,
    /// `|f(ŵ) − f*|` against the oracle.
    pub objective_gap: CheckOutcome,
}

/// Runs CS with exact line search to a variance tolerance, then compares the
/// KKT report and objective with the exact oracle.
pub fn check_kkt_against_oracle(
    instances: usize,
    per_surface: usize,
    seed: u64,
    tolerances: [f64; 3],
) -> Result<KktOutcome> {
    let mut out = KktOutcome {
        stationarity: CheckOutcome::new("kkt stationarity", tolerances[0]),
        dual_feasibility: CheckOutcome::new("kkt dual feasibility", tolerances[1]),
        objective_gap: CheckOutcome::new("oracle objective gap", tolerances[2]),
    };
    for q in 0..instances as u64 {
        let p = small_hull_instance(per_surface, seed, q)?;
        let exact = exact_hull_projection(&p)?;
        let trace = Solver::new(Method::CauchySimplex)
            .termination(TerminationRule::new(100_000).variance_tolerance(1e-20))
            .run(&p, SimplexPoint::uniform(p.dim())?)?;
        let w = trace.solution();
        let (f, g) = p.value_grad(w);
        let kkt = kkt_residual(w, &GradientVector::new(g)?)?;
        out.stationarity.record(kkt.stationarity_residual);
        out.dual_feasibility.record(kkt.dual_feasibility_violation);
        out.objective_gap.record((f - exact.value).abs());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateBoundOutcome {
    /// `f(w^T) − f* − log n/(T min η)` at horizons the optimum-informed
    /// checker certifies.
    pub bound: CheckOutcome,
    pub horizons_total: usize,
    pub literal_passes: usize,
    pub proof_passes: usize,
    /// The same gap at every horizon, certified or not.
    pub unconditional: CheckOutcome,
}

impl RateBoundOutcome {
    pub fn horizons_certified(&self) -> usize {
        self.bound.cases
    }
}

/// Exact-line-search CS from the uniform point on small hull instances, with
/// `f*` and `w*` from the exact oracle.
pub fn check_rate_bound(
    instances: usize,
    per_surface: usize,
    max_iterations: usize,
    seed: u64,
    slack: f64,
) -> Result<RateBoundOutcome> {
    let mut out = RateBoundOutcome {
        bound: CheckOutcome::new("rate bound", slack),
        horizons_total: 0,
        literal_passes: 0,
        proof_passes: 0,
        unconditional: CheckOutcome::new("rate bound, every horizon", slack),
    };
    for q in 0..instances as u64 {
        let p = small_hull_instance(per_surface, seed, q)?;
        let n = p.dim();
        let exact = exact_hull_projection(&p)?;
        let trace = Solver::new(Method::CauchySimplex)
            .step_rule(StepSizeRule::ExactQuadratic)
            .termination(TerminationRule::new(max_iterations))
            .keep_iterates(true)
            .run(&p, SimplexPoint::uniform(n)?)?;
        let iterates = trace.iterates.as_deref().unwrap_or_default();
        let l = p.lipschitz_bound();
        let records = &trace.records;
        out.literal_passes += check_schedule(records, l, ScheduleMode::Literal, slack)
            .passing_horizons()
            .count();
        out.proof_passes += check_schedule(records, l, ScheduleMode::ProofConditions, slack)
            .passing_horizons()
            .count();
        let check = check_schedule_with_optimum(&p, iterates, records, &exact.weights, slack);
        for t in 1..check.passes.len() {
            out.horizons_total += 1;
            let excess = records[t].objective - exact.value - check.bound_at(n, t);
            out.unconditional.record(excess);
            if check.passes_at(t) {
                out.bound.record(excess);
            }
        }
    }
    Ok(out)
}

/// Runs the full suite at the given case count.
pub fn run_all(cases: usize, instances: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let kkt = check_kkt_against_oracle(instances, 5, seed, [1e-6, 1e-8, 1e-9])?;
    let rate = check_rate_bound(instances, 8, 200, seed, 1e-9)?;
    Ok(vec![
        check_feasibility(cases, seed)?,
        check_descent(cases, seed, 1e-9)?,
        check_relative_entropy_step(cases, seed, 1e-9)?,
        check_scheme_agreement(cases.min(100), seed, 0.1)?.slope,
        check_hull_gradient(instances, seed, 1e-5, 1e-8)?,
        check_exam_gradient(instances, seed, 1e-6, 1e-5)?,
        kkt.stationarity,
        kkt.dual_feasibility,
        kkt.objective_gap,
        rate.bound,
    ])
}
