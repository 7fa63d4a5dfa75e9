//! Reweighting exam questions so the weighted scores follow a target density.

use simplex_opt::bench::synth::{synthesize_exam_scores, ExamParameters};
use simplex_opt::objectives::{
    ExamWeightingProblem, Objective, Partition, TargetDensity, TruncatedNormalKernel,
};
use simplex_opt::solvers::{Method, Solver, StepSizeRule, TerminationRule};
use simplex_opt::SimplexPoint;

fn main() -> simplex_opt::Result<()> {
    let params = ExamParameters::reference();
    let scores = synthesize_exam_scores(&params, 3)?;
    let problem = ExamWeightingProblem::new(
        scores,
        TruncatedNormalKernel::unit_interval(0.05),
        TargetDensity::TruncatedNormal { mean: 0.5, std: 0.1 },
        Partition::uniform(0.0, 1.0, 200)?,
    )?;
    let w0 = SimplexPoint::uniform(problem.questions())?;
    let (mean, std) = problem.score_mean_std(&w0);
    println!("uniform weights: mean {mean:.4}, std {std:.4}, D = {:.5}", problem.value(&w0));

    let trace = Solver::new(Method::CauchySimplex)
        .step_rule(StepSizeRule::backtracking())
        .termination(TerminationRule::new(40))
        .run(&problem, w0)?;
    for (t, f) in trace.objectives().enumerate().step_by(10) {
        println!("iteration {t:>3}: D = {f:.6}");
    }
    let w = trace.solution();
    let (mean, std) = problem.score_mean_std(w);
    println!("after {} iterations: mean {mean:.4}, std {std:.4}", trace.iterations());
    let easy: f64 = w[..60].iter().sum();
    println!("weight on the 60 easy questions: {easy:.3}");
    println!("diagnostics: {:?}", problem.diagnostics(w));
    Ok(())
}
