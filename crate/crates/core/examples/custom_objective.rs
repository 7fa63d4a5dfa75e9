//! Plugging a user-defined objective into the solvers: maximum-likelihood
//! mixture weights, `f(w) = −Σ_j log(Σ_i w_i p_ij)`.

use simplex_opt::objectives::{finite_difference_check, Objective};
use simplex_opt::solvers::{Method, Solver, StepSizeRule, TerminationRule};
use simplex_opt::SimplexPoint;

struct MixtureLikelihood {
    /// `p[j][i]`: likelihood of sample `j` under component `i`.
    p: Vec<Vec<f64>>,
}

impl Objective for MixtureLikelihood {
    fn dim(&self) -> usize {
        self.p[0].len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.value_grad(w).0
    }

    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; w.len()];
        let mut f = 0.0;
        for row in &self.p {
            let mix: f64 = row.iter().zip(w).map(|(p, w)| p * w).sum();
            f -= mix.ln();
            for (gi, p) in g.iter_mut().zip(row) {
                *gi -= p / mix;
            }
        }
        (f, g)
    }
}

fn main() -> simplex_opt::Result<()> {
    // Samples from a 70/30 mixture of two of three unit Gaussians.
    let centers = [-2.0, 0.0, 2.0];
    let samples: Vec<f64> = (0..200)
        .map(|k| {
            let u = (k as f64 + 0.5) / 200.0;
            if k % 10 < 7 { -2.0 + 2.0 * (u - 0.5) } else { 2.0 + 2.0 * (u - 0.5) }
        })
        .collect();
    let p = samples
        .iter()
        .map(|x| centers.iter().map(|c| (-(x - c) * (x - c) / 2.0).exp()).collect())
        .collect();
    let f = MixtureLikelihood { p };

    let w0 = SimplexPoint::uniform(3)?;
    let check = finite_difference_check(&f, &w0, 1e-6)?;
    println!("gradient check: max relative error {:.2e}", check.max_relative_error);

    // No closed-form line search here, so backtrack from η_max.
    let trace = Solver::new(Method::CauchySimplex)
        .step_rule(StepSizeRule::backtracking())
        .termination(TerminationRule::new(2_000).variance_tolerance(1e-12))
        .run(&f, w0)?;
    println!(
        "{} iterations ({}), weights {:?}",
        trace.iterations(),
        trace.termination,
        trace.solution().weights()
    );
    Ok(())
}
