//! Prediction with expert advice: regret of the multiplicative update against
//! random and adaptive adversaries, next to the worst-case bound.

use simplex_opt::bench::synth::uniform_losses;
use simplex_opt::online::{
    expert_learning_rate, expert_regret_bound, play_adaptive, punish_heaviest, run_expert_game,
};

fn main() -> simplex_opt::Result<()> {
    let rounds = 1000;
    for experts in [2, 10, 100] {
        let eta = expert_learning_rate(experts, rounds)?;
        let bound = expert_regret_bound(experts, rounds);
        let (_, iid) = run_expert_game(&uniform_losses(rounds, experts, 7)?, eta)?;
        let (_, trace, adaptive) = play_adaptive(experts, rounds, eta, punish_heaviest)?;
        let last = trace.last().expect("trace holds w^1..w^{T+1}");
        println!(
            "N = {experts:>3}: η = {eta:.4}, bound {bound:.2}; iid regret {:.2}, adaptive regret {:.2} (max weight at end {:.3})",
            iid.regret,
            adaptive.regret,
            last.iter().copied().fold(0.0, f64::max)
        );
    }
    Ok(())
}
