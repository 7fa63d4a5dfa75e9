//! Every update scheme on one convex quadratic, under its default step rule
//! and under a fixed step.

use simplex_opt::linalg::Matrix;
use simplex_opt::objectives::QuadraticObjective;
use simplex_opt::solvers::{Method, Solver, StepSizeRule, TerminationRule};
use simplex_opt::SimplexPoint;

fn main() -> simplex_opt::Result<()> {
    let factor = Matrix::from_rows(&[
        vec![1.0, 0.2, 0.0, 0.5],
        vec![0.0, 1.0, 0.3, 0.0],
        vec![0.4, 0.0, 1.0, 0.1],
    ])?;
    let f = QuadraticObjective::from_factor(&factor, vec![0.3, -0.2, 0.1, 0.4])?;
    let stop = TerminationRule::new(5_000).variance_tolerance(1e-14);

    println!("{:<7} {:<22} {:>6} {:>14}", "method", "rule", "iters", "objective");
    for method in Method::ALL {
        for rule in [method.default_rule(), StepSizeRule::Fixed { eta: 0.05 }] {
            let trace = Solver::new(method)
                .step_rule(rule)
                .termination(stop.clone())
                .run(&f, SimplexPoint::uniform(4)?)?;
            let rule = match rule {
                StepSizeRule::Fixed { eta } => format!("fixed {eta}"),
                StepSizeRule::ExactQuadratic => "exact".to_owned(),
                StepSizeRule::Backtracking { .. } => "backtracking".to_owned(),
                StepSizeRule::ClippedFixed { eta } => format!("clipped {eta}"),
            };
            println!(
                "{:<7} {:<22} {:>6} {:>14.10}  ({})",
                method,
                rule,
                trace.iterations(),
                trace.final_objective(),
                trace.termination
            );
        }
    }
    Ok(())
}
