//! Points on the simplex, centered gradients, projection and KKT diagnostics.

use simplex_opt::simplex::{
    centered_gradient, kkt_residual, project_to_simplex, relative_entropy, weighted_variance,
};
use simplex_opt::solvers::{cs_max_step, cs_step_exponential, cs_step_linear};
use simplex_opt::{GradientVector, SimplexPoint};

fn main() -> simplex_opt::Result<()> {
    let w = SimplexPoint::new(vec![2.0, 1.0, 1.0])?; // renormalized to (0.5, 0.25, 0.25)
    let g = GradientVector::new(vec![1.0, 3.0, -1.0])?;

    println!("w          = {:?}", w.weights());
    println!("Π_w g      = {:?}", centered_gradient(&w, &g)?.values());
    println!("Var[g | w] = {}", weighted_variance(&w, &g)?);

    let max = cs_max_step(&w, &g, true).expect("g is not constant on the support");
    println!("η_max      = {max}");
    for eta in [0.25 * max, 0.5 * max, max] {
        let lin = cs_step_linear(&w, &g, eta)?;
        let exp = cs_step_exponential(&w, &g, eta)?;
        println!("η = {eta:.4}: linear {:?}  exponential {:?}", lin.weights(), exp.weights());
    }

    // The full step zeroes the index with the largest centered gradient.
    let edge = cs_step_linear(&w, &g, max)?;
    println!("support after η_max: {:?}", edge.support());

    let u = SimplexPoint::uniform(3)?;
    println!("D(u | w) = {}", relative_entropy(&u, &w)?);

    let p = project_to_simplex(&[0.9, 0.4, -0.3])?;
    println!("Euclidean projection of (0.9, 0.4, -0.3) = {:?}", p.weights());

    let report = kkt_residual(&SimplexPoint::vertex(3, 2)?, &g)?;
    println!(
        "KKT at e_2: stationarity {}, dual violation {}",
        report.stationarity_residual, report.dual_feasibility_violation
    );
    Ok(())
}
