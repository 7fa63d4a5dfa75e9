//! Seeded synthetic instances: hypercube hulls with known projections, exam
//! score matrices and loss sequences. Markets live in [`crate::bench::market`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::objectives::HullProjectionProblem;
use crate::online::LossSequence;

/// The generator behind every seeded draw. `stream` separates independent
/// draws under one seed (queries, trials).
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A face of `[0,1]^d`: coordinate `axis` pinned to `side` ∈ {0, 1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Surface {
    pub axis: usize,
    pub side: u8,
}

impl Surface {
    pub fn id(self) -> usize {
        2 * self.axis + self.side as usize
    }

    pub fn from_id(id: usize) -> Self {
        Self {
            axis: id / 2,
            side: (id % 2) as u8,
        }
    }

    fn value(self) -> f64 {
        f64::from(self.side)
    }

    /// Outward unit normal `±e_axis`.
    pub fn normal(self, d: usize) -> Vec<f64> {
        let mut n = vec![0.0; d];
        n[self.axis] = if self.side == 1 { 1.0 } else { -1.0 };
        n
    }
}

/// `per_surface` uniform points on each of the `2d` faces of `[0,1]^d`,
/// grouped by surface id.
pub fn sample_hypercube_hull(d: usize, per_surface: usize, seed: u64) -> Result<Matrix> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
    }
    if per_surface == 0 {
        return Err(Error::InvalidParameter("need at least one point per surface".into()));
    }
    let mut rng = rng(seed, 0);
    let mut x = Matrix::zeros(2 * d * per_surface, d);
    for id in 0..2 * d {
        let surface = Surface::from_id(id);
        for k in 0..per_surface {
            let row = x.row_mut(id * per_surface + k);
            for v in row.iter_mut() {
                *v = rng.random::<f64>();
            }
            row[surface.axis] = surface.value();
        }
    }
    Ok(x)
}

#[derive(Clone, Debug)]
pub struct HullInstance {
    pub points: Matrix,
    pub query: Vec<f64>,
    pub y_true: Vec<f64>,
    pub surface: Surface,
}

impl HullInstance {
    pub fn problem(&self) -> Result<HullProjectionProblem> {
        HullProjectionProblem::new(self.points.clone(), self.query.clone())
    }
}

/// Uniform draw from the simplex via normalized exponential spacings.
pub fn uniform_simplex_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `y_true` is a uniformly random convex combination of the sampled points on
/// `surface`, and the query sits one unit along that surface's outward normal.
pub fn make_query_point(points: &Matrix, surface: Surface, seed: u64) -> Result<HullInstance> {
    let d = points.cols();
    if surface.axis >= d {
        return Err(Error::InvalidParameter(format!(
            "surface axis {} out of range for dimension {d}",
            surface.axis
        )));
    }
    let on_surface: Vec<&[f64]> = points
        .iter_rows()
        .filter(|r| r[surface.axis] == surface.value())
        .collect();
    if on_surface.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no sampled points on surface {}",
            surface.id()
        )));
    }
    let mut rng = rng(seed, 1);
    let lambda = uniform_simplex_weights(&mut rng, on_surface.len());
    let mut y_true = vec![0.0; d];
    for (l, row) in lambda.iter().zip(&on_surface) {
        for (y, x) in y_true.iter_mut().zip(row.iter()) {
            *y += l * x;
        }
    }
    // Exact on the face, whatever the rounding in the sum.
    y_true[surface.axis] = surface.value();
    let query = y_true
        .iter()
        .zip(surface.normal(d))
        .map(|(y, n)| y + n)
        .collect();
    Ok(HullInstance {
        points: points.clone(),
        query,
        y_true,
        surface,
    })
}

/// The `q`-th query of a benchmark: a random surface, then a random point on it.
pub fn benchmark_query(points: &Matrix, seed: u64, q: u64) -> Result<HullInstance> {
    let mut pick = rng(seed, 2 + 2 * q);
    let surface = Surface::from_id(pick.random_range(0..2 * points.cols()));
    make_query_point(points, surface, seed ^ q.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Question difficulty `q` and student ability `s`; student `j` answers
/// question `i` correctly with probability `q_i s_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExamParameters {
    pub difficulty: Vec<f64>,
    pub ability: Vec<f64>,
}

impl ExamParameters {
    /// 75 questions (60 easy at 7/8, 15 hard at 1/5) and 200 students (120 at
    /// 7/10, 80 at 1/2).
    pub fn reference() -> Self {
        let mut difficulty = vec![7.0 / 8.0; 60];
        difficulty.extend(std::iter::repeat_n(0.2, 15));
        let mut ability = vec![0.7; 120];
        ability.extend(std::iter::repeat_n(0.5, 80));
        Self {
            difficulty,
            ability,
        }
    }

    /// Reference proportions scaled to `questions × students`.
    pub fn scaled(questions: usize, students: usize) -> Self {
        let easy = (questions * 4).div_ceil(5);
        let strong = (students * 3).div_ceil(5);
        let difficulty = (0..questions).map(|i| if i < easy { 7.0 / 8.0 } else { 0.2 }).collect();
        let ability = (0..students).map(|j| if j < strong { 0.7 } else { 0.5 }).collect();
        Self {
            difficulty,
            ability,
        }
    }

    /// Mean and population standard deviation of the uniform-weight score
    /// `X_j = (1/n) Σ_i 𝒳_ij`, in expectation over the draws.
    pub fn expected_uniform_score_moments(&self) -> (f64, f64) {
        let n = self.difficulty.len() as f64;
        let d = self.ability.len() as f64;
        let q_mean = self.difficulty.iter().sum::<f64>() / n;
        let q_sq = self.difficulty.iter().map(|q| q * q).sum::<f64>();
        let mean = q_mean * self.ability.iter().sum::<f64>() / d;
        // E[X_j] = s_j q̄ and Var[X_j] = Σ_i q_i s_j (1 − q_i s_j) / n².
        let second: f64 = self
            .ability
            .iter()
            .map(|s| {
                let m = s * q_mean;
                let var = (s * q_mean * n - s * s * q_sq) / (n * n);
                var + m * m
            })
            .sum::<f64>()
            / d;
        (mean, (second - mean * mean).sqrt())
    }
}

/// Independent `Bernoulli(q_i s_j)` draws, questions as rows.
pub fn synthesize_exam_scores(params: &ExamParameters, seed: u64) -> Result<Matrix> {
    let check = |v: &[f64], what: &str| -> Result<()> {
        if v.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(bad) = v.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidParameter(format!("{what} must lie in (0, 1], got {bad}")));
        }
        Ok(())
    };
    check(&params.difficulty, "question difficulty")?;
    check(&params.ability, "student ability")?;
    let mut rng = rng(seed, 3);
    let (n, d) = (params.difficulty.len(), params.ability.len());
    let mut scores = Matrix::zeros(n, d);
    for (i, q) in params.difficulty.iter().enumerate() {
        for (j, s) in params.ability.iter().enumerate() {
            if rng.random::<f64>() < q * s {
                scores.set(i, j, 1.0);
            }
        }
    }
    Ok(scores)
}

/// I.i.d. uniform losses on `[0, 1]`, rounds as rows.
pub fn uniform_losses(rounds: usize, experts: usize, seed: u64) -> Result<LossSequence> {
    let mut rng = rng(seed, 5);
    let data = (0..rounds * experts).map(|_| rng.random::<f64>()).collect();
    LossSequence::new(Matrix::from_vec(rounds, experts, data)?)
}
