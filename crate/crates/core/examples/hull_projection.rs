//! Nearest point in a convex hull: a hypercube benchmark query solved by three
//! schemes, then a small instance checked against the exact oracle.

use simplex_opt::bench::synth::{benchmark_query, sample_hypercube_hull};
use simplex_opt::linalg::distance;
use simplex_opt::objectives::Objective;
use simplex_opt::oracle::exact_hull_projection;
use simplex_opt::solvers::{Method, Solver, TerminationRule};
use simplex_opt::SimplexPoint;

fn main() -> simplex_opt::Result<()> {
    let points = sample_hypercube_hull(6, 20, 1)?;
    let inst = benchmark_query(&points, 1, 0)?;
    let problem = inst.problem()?;
    println!("{} points in R^6, query on surface {}", points.rows(), inst.surface.id());

    for method in [Method::CauchySimplex, Method::ExponentiatedGradient, Method::PairwiseFrankWolfe] {
        let trace = Solver::new(method)
            .termination(TerminationRule::new(10_000).target(inst.y_true.clone(), 1e-5))
            .run(&problem, SimplexPoint::uniform(problem.dim())?)?;
        let y = problem.image(trace.solution()).expect("hulls map weights to points");
        println!(
            "{method:>4}: {:>5} iterations, ‖ŷ − y_true‖ = {:.2e}, {} points used",
            trace.iterations(),
            distance(&y, &inst.y_true),
            trace.solution().support().len()
        );
    }

    let small = benchmark_query(&sample_hypercube_hull(3, 5, 2)?, 2, 0)?;
    let exact = exact_hull_projection(&small.problem()?)?;
    println!(
        "oracle on 30 points: distance² {:.12}, error to y_true {:.1e}, face {:?}",
        exact.value,
        distance(&exact.point, &small.y_true),
        exact.face
    );
    Ok(())
}
