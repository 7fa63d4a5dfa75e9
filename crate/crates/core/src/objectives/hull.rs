use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm_sq, Matrix};
use crate::objectives::Objective;
use crate::simplex::{GradientVector, SimplexPoint};

/// Nearest point in the convex hull of the rows of `points` to `target`:
/// `min ‖wX − y‖²` over the simplex.
#[derive(Clone, Debug)]
pub struct HullProjectionProblem {
    points: Matrix,
    target: Vec<f64>,
}

impl HullProjectionProblem {
    pub fn new(points: Matrix, target: Vec<f64>) -> Result<Self> {
        if points.rows() == 0 {
            return Err(Error::Empty);
        }
        check_len(points.cols(), target.len())?;
        points.require_finite("hull points")?;
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hull target"));
        }
        Ok(Self { points, target })
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    fn residual(&self, w: &[f64]) -> Vec<f64> {
        let mut r = self.points.combine_rows(w);
        r.iter_mut().zip(&self.target).for_each(|(ri, yi)| *ri -= yi);
        r
    }
}

impl Objective for HullProjectionProblem {
    fn dim(&self) -> usize {
        self.points.rows()
    }

    fn value(&self, w: &[f64]) -> f64 {
        norm_sq(&self.residual(w))
    }

    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let r = self.residual(w);
        let grad = self.points.iter_rows().map(|x| 2.0 * dot(x, &r)).collect();
        (norm_sq(&r), grad)
    }

    fn exact_step(&self, w: &[f64], direction: &[f64]) -> Option<f64> {
        let r = self.residual(w);
        let dx = self.points.combine_rows(direction);
        let curvature = norm_sq(&dx);
        if curvature == 0.0 {
            return Some(0.0);
        }
        // dx·r = Σ d_i h_i with h_i = x_i·r. Centering h at w·h removes the
        // common offset that otherwise swamps the slope near a degenerate
        // face; the last term restores it and vanishes for feasible d.
        let h: Vec<f64> = self.points.mul_vec(&r);
        let mean = dot(w, &h);
        let slope: f64 = direction.iter().zip(&h).map(|(d, hi)| d * (hi - mean)).sum::<f64>()
            + mean * direction.iter().sum::<f64>();
        Some(slope / curvature)
    }

    fn image(&self, w: &[f64]) -> Option<Vec<f64>> {
        Some(self.points.combine_rows(w))
    }

    /// The Hessian is `2XXᵀ`; `2‖X‖_F²` bounds its spectral norm.
    fn lipschitz_bound(&self) -> Option<f64> {
        Some(2.0 * norm_sq(self.points.as_slice()))
    }
}

/// `(‖wX − y‖², ∇)` with `∂f/∂w_i = 2 x_i·(wX − y)`.
pub fn hull_value_grad(
    p: &HullProjectionProblem,
    w: &SimplexPoint,
) -> Result<(f64, GradientVector)> {
    check_len(p.dim(), w.len())?;
    let (value, grad) = p.value_grad(w);
    Ok((value, GradientVector::new(grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_example() {
        let p = HullProjectionProblem::new(Matrix::identity(2), vec![0.0, 1.0]).unwrap();
        let w = SimplexPoint::uniform(2).unwrap();
        let (v, g) = hull_value_grad(&p, &w).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(g.values(), &[1.0, -1.0]);
    }

    #[test]
    fn exact_fit_at_vertex() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]]).unwrap();
        let p = HullProjectionProblem::new(x, vec![1.0, 2.0]).unwrap();
        let (v, g) = hull_value_grad(&p, &SimplexPoint::vertex(3, 0).unwrap()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|gi| *gi == 0.0));
    }

    #[test]
    fn duplicate_rows_collapse_to_a_point() {
        let row = vec![0.3, -0.2, 0.9];
        let x = Matrix::from_rows(&vec![row.clone(); 4]).unwrap();
        let p = HullProjectionProblem::new(x, row).unwrap();
        let (v, _) = hull_value_grad(&p, &SimplexPoint::uniform(4).unwrap()).unwrap();
        assert!(v < 1e-30);
    }

    #[test]
    fn dimension_errors() {
        assert!(HullProjectionProblem::new(Matrix::identity(2), vec![0.0]).is_err());
        let p = HullProjectionProblem::new(Matrix::identity(2), vec![0.0, 1.0]).unwrap();
        assert!(hull_value_grad(&p, &SimplexPoint::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn exact_step_along_cauchy_simplex_direction() {
        let p = HullProjectionProblem::new(Matrix::identity(2), vec![0.0, 1.0]).unwrap();
        let w = [0.5, 0.5];
        // g = (1, −1), w·g = 0, d = w∘Πg = (0.5, −0.5); f(w − ηd) = 0.5(1 − η)².
        let eta = p.exact_step(&w, &[0.5, -0.5]).unwrap();
        assert!((eta - 1.0).abs() < 1e-15);
        assert_eq!(p.exact_step(&w, &[0.0, 0.0]), Some(0.0));
    }
}
