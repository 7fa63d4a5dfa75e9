use crate::linalg::{dot, Matrix};
use crate::objectives::Objective;

/// `f(w) = c·w`.
#[derive(Clone, Debug)]
pub struct LinearObjective {
    coefficients: Vec<f64>,
}

impl LinearObjective {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }
}

impl Objective for LinearObjective {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        dot(&self.coefficients, w)
    }

    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        (self.value(w), self.coefficients.clone())
    }

    fn exact_step(&self, _w: &[f64], direction: &[f64]) -> Option<f64> {
        // Unbounded along any non-flat direction; callers clip.
        let slope = dot(&self.coefficients, direction);
        Some(if slope > 0.0 { f64::INFINITY } else { 0.0 })
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `f(w) = ½ wᵀAw + b·w` with `A` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    hessian: Matrix,
    linear: Vec<f64>,
}

impl QuadraticObjective {
    /// `hessian` must be square with the same size as `linear`; it is
    /// symmetrized as `(A + Aᵀ)/2`.
    pub fn new(hessian: Matrix, linear: Vec<f64>) -> crate::Result<Self> {
        crate::error::check_len(hessian.rows(), hessian.cols())?;
        crate::error::check_len(hessian.rows(), linear.len())?;
        let n = linear.len();
        let mut sym = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                sym.set(i, j, 0.5 * (hessian.get(i, j) + hessian.get(j, i)));
            }
        }
        Ok(Self {
            hessian: sym,
            linear,
        })
    }

    /// `A = BᵀB`, positive semidefinite by construction.
    pub fn from_factor(factor: &Matrix, linear: Vec<f64>) -> crate::Result<Self> {
        let n = factor.cols();
        let mut a = Matrix::zeros(n, n);
        for row in factor.iter_rows() {
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, a.get(i, j) + row[i] * row[j]);
                }
            }
        }
        Self::new(a, linear)
    }

    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        0.5 * dot(w, &self.hessian.mul_vec(w)) + dot(&self.linear, w)
    }

    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let aw = self.hessian.mul_vec(w);
        let value = 0.5 * dot(w, &aw) + dot(&self.linear, w);
        let grad = aw.iter().zip(&self.linear).map(|(a, b)| a + b).collect();
        (value, grad)
    }

    fn exact_step(&self, w: &[f64], direction: &[f64]) -> Option<f64> {
        let (_, grad) = self.value_grad(w);
        let curvature = dot(direction, &self.hessian.mul_vec(direction));
        let slope = dot(&grad, direction);
        if curvature <= 0.0 {
            return Some(if slope > 0.0 { f64::INFINITY } else { 0.0 });
        }
        Some(slope / curvature)
    }

    /// Frobenius norm, an upper bound on the spectral norm of `A`.
    fn lipschitz_bound(&self) -> Option<f64> {
        Some(self.hessian.as_slice().iter().map(|a| a * a).sum::<f64>().sqrt())
    }
}
