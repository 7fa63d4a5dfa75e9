//! Single-step update rules. Each takes the current point and its gradient and
//! returns the next point on the simplex.

use crate::error::{check_len, Error, Result};
use crate::linalg::{argmax, argmin, dot};
use crate::simplex::{center, project_to_simplex, GradientVector, SimplexPoint};

/// Relative slack allowed when comparing a step against its admissible maximum.
const STEP_SLACK: f64 = 1e-12;

fn check_step(eta: f64) -> Result<()> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and nonnegative, got {eta}"
        )));
    }
    Ok(())
}

/// Largest step keeping every weight nonnegative under the linear
/// Cauchy-Simplex update: `1 / max_i (∇_i f − w·∇f)`.
///
/// The maximum runs over the support when `restrict_to_support` is set, since
/// zeroed indices stay zero. `None` means the step is unbounded.
pub fn cs_max_step(w: &SimplexPoint, g: &GradientVector, restrict_to_support: bool) -> Option<f64> {
    max_step_raw(w, g, restrict_to_support)
}

pub(crate) fn max_step_raw(w: &SimplexPoint, g: &[f64], restrict_to_support: bool) -> Option<f64> {
    let mean = dot(w, g);
    let worst = g
        .iter()
        .enumerate()
        .filter(|&(i, _)| !restrict_to_support || w.in_support(i))
        .map(|(_, gi)| gi - mean)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > 0.0 {
        Some(1.0 / worst)
    } else {
        None
    }
}

/// `w'_i = w_i (1 − η(∇_i f − w·∇f))`, then the zero set is reset to zero and
/// the result renormalized.
pub fn cs_step_linear(w: &SimplexPoint, g: &GradientVector, eta: f64) -> Result<SimplexPoint> {
    check_len(w.len(), g.len())?;
    cs_linear_raw(w, g, eta)
}

pub(crate) fn cs_linear_raw(w: &SimplexPoint, g: &[f64], eta: f64) -> Result<SimplexPoint> {
    check_step(eta)?;
    if let Some(max) = max_step_raw(w, g, true) {
        if eta > max * (1.0 + STEP_SLACK) {
            return Err(Error::StepTooLarge { step: eta, max });
        }
    }
    let centered = center(w, g);
    let next = w
        .iter()
        .zip(&centered)
        .enumerate()
        .map(|(i, (wi, ci))| {
            if w.in_support(i) {
                (wi * (1.0 - eta * ci)).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    w.successor(next)
}

/// `w'_i ∝ w_i exp(−η(∇_i f − w·∇f))`.
pub fn cs_step_exponential(w: &SimplexPoint, g: &GradientVector, eta: f64) -> Result<SimplexPoint> {
    check_len(w.len(), g.len())?;
    cs_exponential_raw(w, g, eta)
}

pub(crate) fn cs_exponential_raw(w: &SimplexPoint, g: &[f64], eta: f64) -> Result<SimplexPoint> {
    check_step(eta)?;
    let centered = center(w, g);
    let exponents: Vec<f64> = centered.iter().map(|c| -eta * c).collect();
    let next = multiplicative(w, &exponents, true);
    w.successor(next)
}

/// `w'_i ∝ w_i exp(−η ∇_i f)`.
pub fn egd_step(w: &SimplexPoint, g: &GradientVector, eta: f64) -> Result<SimplexPoint> {
    check_len(w.len(), g.len())?;
    egd_raw(w, g, eta)
}

pub(crate) fn egd_raw(w: &SimplexPoint, g: &[f64], eta: f64) -> Result<SimplexPoint> {
    check_step(eta)?;
    let exponents: Vec<f64> = g.iter().map(|gi| -eta * gi).collect();
    w.successor(multiplicative(w, &exponents, false))
}

/// `w_i exp(e_i − max_j e_j)` over indices with positive weight.
fn multiplicative(w: &SimplexPoint, exponents: &[f64], drop_zero_set: bool) -> Vec<f64> {
    let keep = |i: usize| w[i] > 0.0 && (!drop_zero_set || w.in_support(i));
    let shift = exponents
        .iter()
        .enumerate()
        .filter(|&(i, _)| keep(i))
        .map(|(_, e)| *e)
        .fold(f64::NEG_INFINITY, f64::max);
    exponents
        .iter()
        .enumerate()
        .map(|(i, e)| if keep(i) { w[i] * (e - shift).exp() } else { 0.0 })
        .collect()
}

/// `proj(w − η(∇f − mean(∇f)))` with Euclidean projection onto the simplex.
pub fn pgd_step(w: &SimplexPoint, g: &GradientVector, eta: f64) -> Result<SimplexPoint> {
    check_len(w.len(), g.len())?;
    pgd_raw(w, g, eta)
}

pub(crate) fn pgd_raw(w: &SimplexPoint, g: &[f64], eta: f64) -> Result<SimplexPoint> {
    check_step(eta)?;
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let raw: Vec<f64> = w.iter().zip(g).map(|(wi, gi)| wi - eta * (gi - mean)).collect();
    Ok(project_to_simplex(&raw)?.retolerance(w.zero_tolerance()))
}

/// The Frank-Wolfe vertex `argmin_i ∇_i f`.
pub fn frank_wolfe_vertex(g: &[f64]) -> usize {
    argmin(g.iter().copied().enumerate()).unwrap_or(0)
}

/// The away vertex `argmax_{i ∈ S} ∇_i f` over the support.
pub fn away_vertex(w: &SimplexPoint, g: &[f64]) -> usize {
    argmax(
        g.iter()
            .copied()
            .enumerate()
            .filter(|&(i, _)| w.in_support(i)),
    )
    .or_else(|| argmax(w.iter().copied().enumerate()))
    .unwrap_or(0)
}

/// `w' = (1 − γ) w + γ e_s` with `s = argmin ∇f`.
pub fn fw_step(w: &SimplexPoint, g: &GradientVector, gamma: f64) -> Result<SimplexPoint> {
    check_len(w.len(), g.len())?;
    fw_raw(w, g, gamma)
}

pub(crate) fn fw_raw(w: &SimplexPoint, g: &[f64], gamma: f64) -> Result<SimplexPoint> {
    check_step(gamma)?;
    if gamma > 1.0 + STEP_SLACK {
        return Err(Error::StepTooLarge {
            step: gamma,
            max: 1.0,
        });
    }
    let gamma = gamma.min(1.0);
    let s = frank_wolfe_vertex(g);
    let mut next: Vec<f64> = w.iter().map(|wi| (1.0 - gamma) * wi).collect();
    next[s] += gamma;
    w.successor(next)
}

/// Moves mass `γ` from the away vertex to the Frank-Wolfe vertex.
pub fn pfw_step(w: &SimplexPoint, g: &GradientVector, gamma: f64) -> Result<SimplexPoint> {
    check_len(w.len(), g.len())?;
    pfw_raw(w, g, gamma)
}

pub(crate) fn pfw_raw(w: &SimplexPoint, g: &[f64], gamma: f64) -> Result<SimplexPoint> {
    check_step(gamma)?;
    let s = frank_wolfe_vertex(g);
    let v = away_vertex(w, g);
    let max = w[v];
    if gamma > max * (1.0 + STEP_SLACK) {
        return Err(Error::StepTooLarge { step: gamma, max });
    }
    if s == v {
        return Ok(w.clone());
    }
    let mut next = w.to_vec();
    if gamma >= max {
        next[s] += max;
        next[v] = 0.0;
    } else {
        next[s] += gamma;
        next[v] -= gamma;
    }
    w.successor(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(w: &[f64]) -> SimplexPoint {
        SimplexPoint::new(w.to_vec()).unwrap()
    }

    fn grad(g: &[f64]) -> GradientVector {
        GradientVector::new(g.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn max_step_examples() {
        let w = pt(&[0.5, 0.5]);
        assert_eq!(cs_max_step(&w, &grad(&[1.0, 0.0]), true), Some(2.0));
        assert_eq!(cs_max_step(&w, &grad(&[3.0, 3.0]), false), None);
        let w3 = pt(&[0.5, 0.5, 0.0]);
        let g3 = grad(&[1.0, 0.0, 5.0]);
        assert!((cs_max_step(&w3, &g3, false).unwrap() - 1.0 / 4.5).abs() < 1e-15);
        assert_eq!(cs_max_step(&w3, &g3, true), Some(2.0));
    }

    #[test]
    fn linear_step_examples() {
        let w = pt(&[0.5, 0.5]);
        let g = grad(&[1.0, 0.0]);
        assert_close(&cs_step_linear(&w, &g, 1.0).unwrap(), &[0.25, 0.75], 1e-15);
        let edge = cs_step_linear(&w, &g, 2.0).unwrap();
        assert_eq!(edge.weights(), &[0.0, 1.0]);
        assert_eq!(edge.support(), vec![1]);
        assert!(matches!(
            cs_step_linear(&w, &g, 2.5),
            Err(Error::StepTooLarge { .. })
        ));
        let flat = grad(&[0.7, 0.7]);
        assert_close(&cs_step_linear(&w, &flat, 10.0).unwrap(), &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn linear_step_keeps_zeros() {
        let w = pt(&[0.5, 0.5, 0.0]);
        let next = cs_step_linear(&w, &grad(&[1.0, 0.0, -50.0]), 1.0).unwrap();
        assert_eq!(next[2], 0.0);
    }

    #[test]
    fn exponential_step_examples() {
        let w = pt(&[0.5, 0.5]);
        let g = grad(&[1.0, 0.0]);
        let e = cs_step_exponential(&w, &g, 0.1).unwrap();
        // 0.5 e^{∓0.05}, normalized.
        let (a, b) = (0.5 * (-0.05f64).exp(), 0.5 * 0.05f64.exp());
        assert_close(&e, &[a / (a + b), b / (a + b)], 1e-15);
        assert_close(&e, &[0.475021, 0.524979], 1e-6);
        let l = cs_step_linear(&w, &g, 0.1).unwrap();
        let diff = (e[0] - l[0]).abs();
        assert!((diff - 2.08e-5).abs() < 1e-7, "{diff}");
        let flat = cs_step_exponential(&w, &grad(&[2.0, 2.0]), 3.0).unwrap();
        assert_close(&flat, &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn egd_examples() {
        let w = pt(&[0.5, 0.5]);
        assert_close(&egd_step(&w, &grad(&[1.0, 0.0]), 3f64.ln()).unwrap(), &[0.25, 0.75], 1e-15);
        assert_close(&egd_step(&w, &grad(&[4.0, 4.0]), 1.0).unwrap(), &[0.5, 0.5], 1e-15);
        let u = SimplexPoint::uniform(3).unwrap();
        assert_close(&egd_step(&u, &grad(&[0.0; 3]), 1.0).unwrap(), &u, 1e-15);
        // Huge exponents do not overflow.
        let big = egd_step(&w, &grad(&[-1e6, 0.0]), 1.0).unwrap();
        assert_close(&big, &[1.0, 0.0], 1e-15);
    }

    #[test]
    fn pgd_examples() {
        let w = pt(&[0.5, 0.5]);
        assert_close(&pgd_step(&w, &grad(&[1.0, 0.0]), 0.1).unwrap(), &[0.45, 0.55], 1e-15);
        assert_close(&pgd_step(&w, &grad(&[3.0, 3.0]), 5.0).unwrap(), &[0.5, 0.5], 1e-15);
        let w = pt(&[0.1, 0.9]);
        assert_close(&pgd_step(&w, &grad(&[1.0, 0.0]), 0.4).unwrap(), &[0.0, 1.0], 1e-15);
    }

    #[test]
    fn frank_wolfe_examples() {
        let w = pt(&[0.5, 0.5]);
        let g = grad(&[1.0, 0.0]);
        assert_close(&fw_step(&w, &g, 0.0).unwrap(), &w, 0.0);
        assert_eq!(fw_step(&w, &g, 1.0).unwrap().weights(), &[0.0, 1.0]);
        assert_close(&fw_step(&w, &g, 0.5).unwrap(), &[0.25, 0.75], 1e-15);
        assert!(fw_step(&w, &g, 1.5).is_err());
    }

    #[test]
    fn pairwise_examples() {
        let w = pt(&[0.5, 0.5]);
        let g = grad(&[1.0, 0.0]);
        assert_eq!(pfw_step(&w, &g, 0.5).unwrap().weights(), &[0.0, 1.0]);
        assert_close(&pfw_step(&w, &g, 0.25).unwrap(), &[0.25, 0.75], 1e-15);
        assert_eq!(pfw_step(&w, &grad(&[2.0, 2.0]), 0.3).unwrap(), w);
        assert!(matches!(pfw_step(&w, &g, 0.6), Err(Error::StepTooLarge { .. })));
    }

    fn fuzz_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (2usize..10).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
                0.0f64..1.0,
            )
        })
    }

    proptest! {
        #[test]
        fn every_scheme_stays_feasible((raw, g, frac) in fuzz_case()) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-3);
            let w = SimplexPoint::new(raw).unwrap();
            let g = GradientVector::new(g).unwrap();
            let cap = cs_max_step(&w, &g, true).unwrap_or(1.0);
            let v = away_vertex(&w, &g);
            let outs = [
                cs_step_linear(&w, &g, frac * cap).unwrap(),
                cs_step_exponential(&w, &g, 3.0 * frac).unwrap(),
                egd_step(&w, &g, 3.0 * frac).unwrap(),
                pgd_step(&w, &g, frac).unwrap(),
                fw_step(&w, &g, frac).unwrap(),
                pfw_step(&w, &g, frac * w[v]).unwrap(),
            ];
            for out in &outs {
                prop_assert!(out.iter().all(|x| *x >= 0.0));
                prop_assert!((out.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            // Zeros survive the linear scheme.
            for i in 0..w.len() {
                if w[i] == 0.0 {
                    prop_assert_eq!(outs[0][i], 0.0);
                }
            }
        }
    }
}
