//! Question weighting: fit the kernel density estimate of weighted exam scores
//! to a target density by minimizing a Riemann sum of their relative entropy.

use statrs::function::erf::erfc;

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::objectives::Objective;
use crate::simplex::{GradientVector, SimplexPoint};

const TARGET_FLOOR: f64 = 1e-300;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Normal kernel of width `bandwidth`, truncated to `[lower, upper]` and
/// renormalized so every bump integrates to one over that interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedNormalKernel {
    pub bandwidth: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedNormalKernel {
    pub fn unit_interval(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            lower: 0.0,
            upper: 1.0,
        }
    }

    fn mass(&self, center: f64) -> f64 {
        let e = self.bandwidth;
        std_normal_cdf((self.upper - center) / e) - std_normal_cdf((self.lower - center) / e)
    }

    /// Kernel bump centred at `center`, evaluated at `z`.
    pub fn density(&self, z: f64, center: f64) -> f64 {
        if z < self.lower || z > self.upper {
            return 0.0;
        }
        let e = self.bandwidth;
        std_normal_pdf((z - center) / e) / (e * self.mass(center))
    }

    /// `(K(z, c), ∂K/∂c)`.
    fn density_and_center_derivative(&self, z: f64, center: f64) -> (f64, f64) {
        if z < self.lower || z > self.upper {
            return (0.0, 0.0);
        }
        let e = self.bandwidth;
        let mass = self.mass(center);
        let k = std_normal_pdf((z - center) / e) / (e * mass);
        let mass_slope = (std_normal_pdf((self.lower - center) / e)
            - std_normal_pdf((self.upper - center) / e))
            / e;
        (k, k * ((z - center) / (e * e) - mass_slope / mass))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetDensity {
    /// Normal with the given mean and standard deviation, truncated to `[0, 1]`.
    TruncatedNormal { mean: f64, std: f64 },
    /// Density values given directly at each partition point.
    Tabulated(Vec<f64>),
}

impl TargetDensity {
    fn evaluate_on(&self, partition: &Partition) -> Result<Vec<f64>> {
        match self {
            TargetDensity::TruncatedNormal { mean, std } => {
                if !(*std > 0.0) {
                    return Err(Error::InvalidParameter("target std must be positive".into()));
                }
                let mass = std_normal_cdf((1.0 - mean) / std) - std_normal_cdf(-mean / std);
                Ok(partition
                    .points()
                    .iter()
                    .map(|&x| {
                        if (0.0..=1.0).contains(&x) {
                            std_normal_pdf((x - mean) / std) / (std * mass)
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
            TargetDensity::Tabulated(values) => {
                check_len(partition.points().len(), values.len())?;
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidParameter(
                        "tabulated target density must be finite and nonnegative".into(),
                    ));
                }
                Ok(values.clone())
            }
        }
    }
}

/// Strictly increasing grid `x_0 < … < x_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition(Vec<f64>);

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("partition needs at least two points".into()));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "partition must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self(points))
    }

    /// `{a + (b − a)k/M}` for `k = 0..=M`.
    pub fn uniform(a: f64, b: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidParameter("partition needs at least one interval".into()));
        }
        let m = intervals as f64;
        Self::new((0..=intervals).map(|k| a + (b - a) * k as f64 / m).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExamDiagnostics {
    /// Partition points where the density estimate vanished.
    pub zero_density_points: usize,
    /// Partition points where the target was raised to the floor.
    pub floored_target_points: usize,
    /// `Σ_k ρ(x_k) Δ_k`.
    pub quadrature_mass: f64,
}

/// `min_w Σ_{k=1}^{M} ρ(x_k) log(ρ(x_k)/f(x_k)) (x_k − x_{k−1})`.
#[derive(Clone, Debug)]
pub struct ExamWeightingProblem {
    scores: Matrix,
    kernel: TruncatedNormalKernel,
    partition: Partition,
    target_values: Vec<f64>,
    floored_target_points: usize,
}

impl ExamWeightingProblem {
    /// `scores` is questions × students with 0/1 entries.
    pub fn new(
        scores: Matrix,
        kernel: TruncatedNormalKernel,
        target: TargetDensity,
        partition: Partition,
    ) -> Result<Self> {
        if scores.rows() == 0 || scores.cols() == 0 {
            return Err(Error::Empty);
        }
        if scores.as_slice().iter().any(|&s| s != 0.0 && s != 1.0) {
            return Err(Error::InvalidParameter("scores must be 0 or 1".into()));
        }
        if !(kernel.bandwidth > 0.0) || !(kernel.upper > kernel.lower) {
            return Err(Error::InvalidParameter(
                "kernel bandwidth must be positive and its interval nonempty".into(),
            ));
        }
        let mut target_values = target.evaluate_on(&partition)?;
        let mut floored_target_points = 0;
        for v in target_values.iter_mut().skip(1) {
            if *v < TARGET_FLOOR {
                *v = TARGET_FLOOR;
                floored_target_points += 1;
            }
        }
        Ok(Self {
            scores,
            kernel,
            partition,
            target_values,
            floored_target_points,
        })
    }

    pub fn questions(&self) -> usize {
        self.scores.rows()
    }

    pub fn students(&self) -> usize {
        self.scores.cols()
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn kernel(&self) -> &TruncatedNormalKernel {
        &self.kernel
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Target density at the partition points (after flooring).
    pub fn target_values(&self) -> &[f64] {
        &self.target_values
    }

    /// `X_j = Σ_i w_i 𝒳_{i,j}` for every student.
    pub fn weighted_scores(&self, w: &[f64]) -> Vec<f64> {
        self.scores.combine_rows(w)
    }

    /// Mean and population standard deviation of the weighted scores.
    pub fn score_mean_std(&self, w: &[f64]) -> (f64, f64) {
        let x = self.weighted_scores(w);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    fn density_at(&self, scores: &[f64], z: f64) -> f64 {
        scores.iter().map(|&c| self.kernel.density(z, c)).sum::<f64>() / scores.len() as f64
    }

    pub fn diagnostics(&self, w: &[f64]) -> ExamDiagnostics {
        let x = self.weighted_scores(w);
        let pts = self.partition.points();
        let mut out = ExamDiagnostics {
            floored_target_points: self.floored_target_points,
            ..Default::default()
        };
        for k in 1..pts.len() {
            let rho = self.density_at(&x, pts[k]);
            if rho == 0.0 {
                out.zero_density_points += 1;
            }
            out.quadrature_mass += rho * (pts[k] - pts[k - 1]);
        }
        out
    }
}

impl Objective for ExamWeightingProblem {
    fn dim(&self) -> usize {
        self.questions()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let x = self.weighted_scores(w);
        let pts = self.partition.points();
        (1..pts.len())
            .map(|k| {
                let rho = self.density_at(&x, pts[k]);
                if rho > 0.0 {
                    rho * (rho / self.target_values[k]).ln() * (pts[k] - pts[k - 1])
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let x = self.weighted_scores(w);
        let d = x.len();
        let pts = self.partition.points();
        let inv_d = 1.0 / d as f64;
        let mut value = 0.0;
        // ∂D̂/∂X_j accumulated over partition points.
        let mut score_grad = vec![0.0; d];
        let mut slopes = vec![0.0; d];
        for k in 1..pts.len() {
            let z = pts[k];
            let delta = z - pts[k - 1];
            let mut rho = 0.0;
            for (j, &c) in x.iter().enumerate() {
                let (kz, dk) = self.kernel.density_and_center_derivative(z, c);
                rho += kz;
                slopes[j] = dk;
            }
            rho *= inv_d;
            if rho <= 0.0 {
                continue;
            }
            let log_ratio = (rho / self.target_values[k]).ln();
            value += rho * log_ratio * delta;
            let outer = delta * (log_ratio + 1.0) * inv_d;
            for (g, s) in score_grad.iter_mut().zip(&slopes) {
                *g += outer * s;
            }
        }
        let grad = self.scores.mul_vec(&score_grad);
        (value, grad)
    }
}

/// `ρ_ε(z) = (1/d) Σ_j μ_ε(z − X_j)`.
pub fn kde_density(p: &ExamWeightingProblem, w: &SimplexPoint, z: f64) -> Result<f64> {
    check_len(p.questions(), w.len())?;
    Ok(p.density_at(&p.weighted_scores(w), z))
}

pub fn exam_value_grad(
    p: &ExamWeightingProblem,
    w: &SimplexPoint,
) -> Result<(f64, GradientVector)> {
    check_len(p.questions(), w.len())?;
    let (value, grad) = p.value_grad(w);
    if !value.is_finite() {
        return Err(Error::NonFinite("exam objective"));
    }
    Ok((value, GradientVector::new(grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::finite_difference_check;

    /// Gaussian bump normalized by composite Simpson quadrature over [0, 1],
    /// deliberately avoiding the erf-based normalization.
    fn quadrature_kernel(z: f64, center: f64, eps: f64) -> f64 {
        let raw = |t: f64| (-0.5 * ((t - center) / eps).powi(2)).exp();
        let n = 20_000;
        let h = 1.0 / n as f64;
        let mut s = raw(0.0) + raw(1.0);
        for i in 1..n {
            s += raw(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        raw(z) / (s * h / 3.0)
    }

    fn problem(scores: &[Vec<f64>], eps: f64, target: TargetDensity, m: usize) -> ExamWeightingProblem {
        ExamWeightingProblem::new(
            Matrix::from_rows(scores).unwrap(),
            TruncatedNormalKernel::unit_interval(eps),
            target,
            Partition::uniform(0.0, 1.0, m).unwrap(),
        )
        .unwrap()
    }

    fn reference_target() -> TargetDensity {
        TargetDensity::TruncatedNormal { mean: 0.5, std: 0.1 }
    }

    #[test]
    fn single_student_single_question() {
        let p = problem(&[vec![1.0]], 0.05, reference_target(), 50);
        let w = SimplexPoint::uniform(1).unwrap();
        for z in [0.9, 0.97, 1.0] {
            let rho = kde_density(&p, &w, z).unwrap();
            assert!((rho - p.kernel().density(z, 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_students_match_single_student() {
        let one = problem(&[vec![1.0], vec![0.0]], 0.05, reference_target(), 50);
        let two = problem(&[vec![1.0, 1.0], vec![0.0, 0.0]], 0.05, reference_target(), 50);
        let w = SimplexPoint::new(vec![0.3, 0.7]).unwrap();
        for z in [0.1, 0.3, 0.35, 0.8] {
            let a = kde_density(&one, &w, z).unwrap();
            let b = kde_density(&two, &w, z).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn two_student_density_against_quadrature_kernel() {
        // Student 1 answers only question 1, student 2 only question 2.
        let p = problem(&[vec![1.0, 0.0], vec![0.0, 1.0]], 0.05, reference_target(), 50);
        let w = SimplexPoint::new(vec![0.2, 0.8]).unwrap();
        assert_eq!(p.weighted_scores(&w), vec![0.2, 0.8]);
        let rho = kde_density(&p, &w, 0.2).unwrap();
        let expected = 0.5 * quadrature_kernel(0.2, 0.2, 0.05) + 0.5 * quadrature_kernel(0.2, 0.8, 0.05);
        assert!((rho - expected).abs() < 1e-9 * expected, "{rho} vs {expected}");
    }

    #[test]
    fn density_integrates_to_one() {
        let scores = vec![
            vec![1.0, 0.0, 1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0, 0.0],
        ];
        for eps in [0.02, 0.05, 0.1] {
            let p = problem(&scores, eps, reference_target(), 400);
            let w = SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap();
            let mass = p.diagnostics(&w).quadrature_mass;
            assert!((mass - 1.0).abs() <= 0.02, "eps {eps}: mass {mass}");
        }
    }

    #[test]
    fn identical_discretized_densities_give_zero() {
        let scores = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
        let base = problem(&scores, 0.05, reference_target(), 100);
        let w = SimplexPoint::new(vec![0.4, 0.6]).unwrap();
        let tab: Vec<f64> = base
            .partition()
            .points()
            .iter()
            .map(|&z| kde_density(&base, &w, z).unwrap())
            .collect();
        let p = problem(&scores, 0.05, TargetDensity::Tabulated(tab), 100);
        assert!(p.value(&w).abs() < 1e-14);
    }

    /// Term-by-term Riemann sum built on the quadrature kernel.
    fn brute_force_value(scores: &[Vec<f64>], w: &[f64], eps: f64, m: usize) -> f64 {
        let d = scores[0].len();
        let x: Vec<f64> = (0..d)
            .map(|j| scores.iter().zip(w).map(|(row, wi)| row[j] * wi).sum())
            .collect();
        let target_mass = {
            let n = 20_000;
            let h = 1.0 / n as f64;
            let g = |t: f64| (-0.5 * ((t - 0.5) / 0.1f64).powi(2)).exp();
            let mut s = g(0.0) + g(1.0);
            for i in 1..n {
                s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let mut total = 0.0;
        for k in 1..=m {
            let z = k as f64 / m as f64;
            let rho: f64 = x.iter().map(|&c| quadrature_kernel(z, c, eps)).sum::<f64>() / d as f64;
            let f = (-0.5 * ((z - 0.5) / 0.1f64).powi(2)).exp() / target_mass;
            total += rho * (rho / f).ln() / m as f64;
        }
        total
    }

    #[test]
    fn toy_instance_value_and_gradient_against_brute_force() {
        let scores = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let (eps, m) = (0.05, 40);
        let p = problem(&scores, eps, reference_target(), m);
        let w = SimplexPoint::new(vec![0.35, 0.65]).unwrap();
        let (value, grad) = exam_value_grad(&p, &w).unwrap();
        let brute = brute_force_value(&scores, &w, eps, m);
        assert!((value - brute).abs() < 1e-8 * brute.abs().max(1.0), "{value} vs {brute}");
        let h = 1e-6;
        for i in 0..2 {
            let mut up = w.to_vec();
            let mut down = w.to_vec();
            up[i] += h;
            down[i] -= h;
            let fd = (brute_force_value(&scores, &up, eps, m) - brute_force_value(&scores, &down, eps, m))
                / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0), "{i}: {fd} vs {}", grad[i]);
        }
        let report = finite_difference_check(&p, &w, 1e-6).unwrap();
        assert!(report.max_relative_error <= 1e-5);
    }

    #[test]
    fn value_not_below_quadrature_slack() {
        let scores = vec![vec![1.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0, 0.0]];
        let p = problem(&scores, 0.05, reference_target(), 400);
        let w = SimplexPoint::new(vec![0.2, 0.5, 0.3]).unwrap();
        let value = p.value(&w);
        let x = p.weighted_scores(&w);
        let pts = p.partition().points();
        let max_log = (1..pts.len())
            .map(|k| (p.density_at(&x, pts[k]) / p.target_values()[k]).ln().abs())
            .fold(0.0, f64::max);
        let slack = (1.0 - p.diagnostics(&w).quadrature_mass).abs() * max_log;
        assert!(value >= -slack, "{value} < -{slack}");
    }

    #[test]
    fn validation() {
        let bad = ExamWeightingProblem::new(
            Matrix::from_rows(&[vec![0.5]]).unwrap(),
            TruncatedNormalKernel::unit_interval(0.05),
            reference_target(),
            Partition::uniform(0.0, 1.0, 10).unwrap(),
        );
        assert!(bad.is_err());
        assert!(Partition::new(vec![0.0, 0.5, 0.5]).is_err());
        let zero_bw = ExamWeightingProblem::new(
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            TruncatedNormalKernel::unit_interval(0.0),
            reference_target(),
            Partition::uniform(0.0, 1.0, 10).unwrap(),
        );
        assert!(zero_bw.is_err());
    }

    #[test]
    fn target_outside_support_is_floored_and_flagged() {
        let p = ExamWeightingProblem::new(
            Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
            TruncatedNormalKernel::unit_interval(0.05),
            reference_target(),
            Partition::uniform(0.0, 1.5, 30).unwrap(),
        )
        .unwrap();
        assert!(p.diagnostics(&[1.0]).floored_target_points > 0);
        assert!(p.value(&[1.0]).is_finite());
    }
}
