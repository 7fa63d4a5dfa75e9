//! Which horizons of an exact-line-search run the rate bound certifies, under
//! each schedule checker.

use simplex_opt::bench::check::small_hull_instance;
use simplex_opt::objectives::Objective;
use simplex_opt::oracle::exact_hull_projection;
use simplex_opt::solvers::{
    check_schedule, check_schedule_with_optimum, Method, ScheduleMode, Solver, StepSizeRule,
    TerminationRule,
};
use simplex_opt::SimplexPoint;

fn main() -> simplex_opt::Result<()> {
    let p = small_hull_instance(8, 0, 3)?;
    let n = p.dim();
    let exact = exact_hull_projection(&p)?;
    let trace = Solver::new(Method::CauchySimplex)
        .step_rule(StepSizeRule::ExactQuadratic)
        .termination(TerminationRule::new(60))
        .keep_iterates(true)
        .run(&p, SimplexPoint::uniform(n)?)?;
    let records = &trace.records;
    let l = p.lipschitz_bound();
    for mode in [ScheduleMode::Literal, ScheduleMode::ProofConditions] {
        let c = check_schedule(records, l, mode, 1e-9);
        println!("{mode:?}: {} horizons certified", c.passing_horizons().count());
    }
    let iterates = trace.iterates.as_deref().expect("kept");
    let c = check_schedule_with_optimum(&p, iterates, records, &exact.weights, 1e-9);
    println!("OptimumConditions: {} of {} horizons certified", c.passing_horizons().count(), records.len() - 1);
    for t in c.passing_horizons().take(8) {
        println!(
            "  T = {t:>2}: f(w^T) − f* = {:.3e} ≤ {:.3e}",
            records[t].objective - exact.value,
            c.bound_at(n, t)
        );
    }
    Ok(())
}
