use crate::error::{check_len, Error, Result};
use crate::linalg::{argmin, dot, Matrix};
use crate::online::{Comparator, RegretReport};
use crate::simplex::SimplexPoint;

/// Losses `l^t_i ∈ [0, 1]`, one row per round and one column per expert.
#[derive(Clone, Debug, PartialEq)]
pub struct LossSequence {
    losses: Matrix,
}

impl LossSequence {
    pub fn new(losses: Matrix) -> Result<Self> {
        if losses.rows() == 0 || losses.cols() == 0 {
            return Err(Error::Empty);
        }
        check_losses(losses.as_slice())?;
        Ok(Self { losses })
    }

    pub fn rounds(&self) -> usize {
        self.losses.rows()
    }

    pub fn experts(&self) -> usize {
        self.losses.cols()
    }

    pub fn round(&self, t: usize) -> &[f64] {
        self.losses.row(t)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.losses
    }

    /// Total loss of each expert.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.experts()];
        for row in self.losses.iter_rows() {
            total.iter_mut().zip(row).for_each(|(s, l)| *s += l);
        }
        total
    }
}

fn check_losses(losses: &[f64]) -> Result<()> {
    match losses
        .iter()
        .enumerate()
        .find(|(_, l)| !(0.0..=1.0).contains(*l))
    {
        Some((index, &value)) => Err(Error::LossOutOfRange { index, value }),
        None => Ok(()),
    }
}

/// `w' = w(1 − η(l − w·l))`. For `η < 1` and losses in `[0, 1]` every weight
/// stays strictly positive.
pub fn hedge_cs_update(w: &SimplexPoint, loss: &[f64], eta: f64) -> Result<SimplexPoint> {
    check_len(w.len(), loss.len())?;
    check_losses(loss)?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "expert learning rate must lie in (0, 1), got {eta}"
        )));
    }
    let mean = dot(w, loss);
    let next = w
        .iter()
        .zip(loss)
        .map(|(wi, li)| wi * (1.0 - eta * (li - mean)))
        .collect();
    w.successor(next)
}

/// `√(2 log N) / (√(2 log N) + √T)`.
pub fn expert_learning_rate(experts: usize, rounds: usize) -> Result<f64> {
    if experts < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 experts, got {experts}")));
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter("need at least one round".into()));
    }
    let a = (2.0 * (experts as f64).ln()).sqrt();
    Ok(a / (a + (rounds as f64).sqrt()))
}

/// `√(2T log N) + log N`.
pub fn expert_regret_bound(experts: usize, rounds: usize) -> f64 {
    let log_n = (experts as f64).ln();
    (2.0 * rounds as f64 * log_n).sqrt() + log_n
}

/// `log N / η + Tη / (2(1 − η))`, the bound for an arbitrary fixed rate; it
/// reduces to [`expert_regret_bound`] at [`expert_learning_rate`].
pub fn expert_regret_bound_at(experts: usize, rounds: usize, eta: f64) -> f64 {
    (experts as f64).ln() / eta + rounds as f64 * eta / (2.0 * (1.0 - eta))
}

fn regret_report(strategy_loss: f64, cumulative: &[f64], bound: f64) -> RegretReport {
    let best = argmin(cumulative.iter().copied().enumerate()).unwrap_or(0);
    RegretReport {
        regret: strategy_loss - cumulative[best],
        bound,
        comparator: Comparator::BestExpert(best),
        strategy_value: strategy_loss,
        comparator_value: cumulative[best],
    }
}

/// Plays the Cauchy-Simplex update from uniform weights through every round.
///
/// Returns `w^1, …, w^{T+1}` and the regret against the best single expert,
/// with the bound evaluated at the given `η`.
pub fn run_expert_game(losses: &LossSequence, eta: f64) -> Result<(Vec<SimplexPoint>, RegretReport)> {
    let n = losses.experts();
    let mut w = SimplexPoint::with_tolerance(vec![1.0; n], 0.0)?;
    let mut trace = Vec::with_capacity(losses.rounds() + 1);
    let mut strategy = 0.0;
    for t in 0..losses.rounds() {
        let l = losses.round(t);
        strategy += dot(&w, l);
        let next = hedge_cs_update(&w, l, eta)?;
        trace.push(std::mem::replace(&mut w, next));
    }
    trace.push(w);
    let bound = expert_regret_bound_at(n, losses.rounds(), eta);
    Ok((trace, regret_report(strategy, &losses.cumulative(), bound)))
}

/// Plays against an adversary that chooses each round's losses after seeing
/// the current weights. Returns the realized sequence alongside the game.
pub fn play_adaptive<A>(
    experts: usize,
    rounds: usize,
    eta: f64,
    mut adversary: A,
) -> Result<(LossSequence, Vec<SimplexPoint>, RegretReport)>
where
    A: FnMut(usize, &SimplexPoint) -> Vec<f64>,
{
    let mut w = SimplexPoint::with_tolerance(vec![1.0; experts], 0.0)?;
    let mut data = Vec::with_capacity(rounds * experts);
    for t in 0..rounds {
        let l = adversary(t, &w);
        check_len(experts, l.len())?;
        w = hedge_cs_update(&w, &l, eta)?;
        data.extend(l);
    }
    let losses = LossSequence::new(Matrix::from_vec(rounds, experts, data)?)?;
    let (trace, report) = run_expert_game(&losses, eta)?;
    Ok((losses, trace, report))
}

/// Loss 1 on the currently heaviest expert (lowest index on ties), 0 elsewhere.
pub fn punish_heaviest(_t: usize, w: &SimplexPoint) -> Vec<f64> {
    let heaviest = crate::linalg::argmax(w.iter().copied().enumerate()).unwrap_or(0);
    let mut l = vec![0.0; w.len()];
    l[heaviest] = 1.0;
    l
}

/// Loss 1 on every expert except the lightest, which gets 0.
pub fn reward_lightest(_t: usize, w: &SimplexPoint) -> Vec<f64> {
    let lightest = argmin(w.iter().copied().enumerate()).unwrap_or(0);
    let mut l = vec![1.0; w.len()];
    l[lightest] = 0.0;
    l
}
