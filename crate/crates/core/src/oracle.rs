//! Exact nearest point in a small convex hull, by enumerating candidate faces.
//!
//! The projection of `y` onto `conv{x_i}` lies in the relative interior of
//! the hull of some affinely independent subset of at most `d + 1` points, and
//! there it is the unconstrained minimizer over that subset's affine hull. So
//! solving the equality-constrained least squares problem on every such subset
//! and keeping the best feasible answer is exact.

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_dense, Matrix};
use crate::objectives::{HullProjectionProblem, Objective};
use crate::simplex::SimplexPoint;

/// Refuse instances needing more candidate subsets than this.
pub const MAX_SUBSETS: usize = 20_000_000;

#[derive(Clone, Debug)]
pub struct ExactProjection {
    pub weights: SimplexPoint,
    pub value: f64,
    pub point: Vec<f64>,
    /// Indices of the face the projection lies on.
    pub face: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

pub fn exact_hull_projection(p: &HullProjectionProblem) -> Result<ExactProjection> {
    let x = p.points();
    let (n, d) = (x.rows(), x.cols());
    let largest = (d + 1).min(n);
    let total = (1..=largest).fold(0usize, |acc, k| acc.saturating_add(binomial(n, k)));
    if total > MAX_SUBSETS {
        return Err(Error::OracleScale {
            max: MAX_SUBSETS,
            found: total,
        });
    }
    let gram: Vec<f64> = (0..n * n)
        .map(|k| dot(x.row(k / n), x.row(k % n)))
        .collect();
    let xy: Vec<f64> = x.iter_rows().map(|r| dot(r, p.target())).collect();
    let scale = gram.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut subset = Vec::with_capacity(largest);
    for k in 1..=largest {
        subset.clear();
        subset.extend(0..k);
        loop {
            if let Some(w) = solve_face(&gram, &xy, n, &subset, scale) {
                let mut full = vec![0.0; n];
                for (&i, wi) in subset.iter().zip(&w) {
                    full[i] = wi.max(0.0);
                }
                let value = p.value(&full);
                if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
                    best = Some((value, subset.clone(), full));
                }
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    let (_, face, full) = best.ok_or_else(|| Error::Numerical("no feasible face found".into()))?;
    let weights = SimplexPoint::new(full)?;
    let value = p.value(&weights);
    let point = x.combine_rows(&weights);
    Ok(ExactProjection {
        weights,
        value,
        point,
        face,
    })
}

/// Solves `[2G_S 𝟙; 𝟙ᵀ 0][w; λ] = [2X_S y; 1]`, returning `w` when the face is
/// nondegenerate and the solution is (numerically) nonnegative.
fn solve_face(gram: &[f64], xy: &[f64], n: usize, subset: &[usize], scale: f64) -> Option<Vec<f64>> {
    let k = subset.len();
    let mut a = Matrix::zeros(k + 1, k + 1);
    let mut b = vec![0.0; k + 1];
    for (r, &i) in subset.iter().enumerate() {
        for (c, &j) in subset.iter().enumerate() {
            a.set(r, c, 2.0 * gram[i * n + j]);
        }
        a.set(r, k, 1.0);
        a.set(k, r, 1.0);
        b[r] = 2.0 * xy[i];
    }
    b[k] = 1.0;
    let sol = solve_dense(a, b, 1e-12 * scale.max(1.0))?;
    let w = &sol[..k];
    if w.iter().all(|v| *v >= -1e-12) {
        Some(w.to_vec())
    } else {
        None
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
