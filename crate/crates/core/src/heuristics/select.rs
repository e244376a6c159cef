use std::sync::Arc;

use rand::Rng;

use crate::game::{Agent, GameRng, GameState, MoveCandidate};

use super::{DecisionContext, HeuristicCode, HeuristicProfile, MAX_WEIGHT};

/// Sum of the weights of the non-PASS heuristics `mv` satisfies.
pub fn score_move(profile: &HeuristicProfile, ctx: &DecisionContext<'_>, mv: &MoveCandidate) -> f64 {
    let weights = profile.phase_weights(ctx.phase);
    ctx.phase
        .codes()
        .iter()
        .zip(weights)
        .filter(|(c, w)| **c != HeuristicCode::PASS && **w > 0.0)
        .filter(|(c, _)| ctx.holds(**c, mv))
        .map(|(_, w)| *w)
        .sum()
}

/// Picks one candidate for the player to move.
///
/// Where passing is allowed, the PASS weight is first read as a percentage
/// chance of passing outright. Otherwise a non-pass move is drawn with
/// probability proportional to its score, uniformly if every score is zero.
pub fn select_move(
    profile: &HeuristicProfile,
    state: &GameState,
    candidates: &[MoveCandidate],
    rng: &mut GameRng,
) -> MoveCandidate {
    let ctx = DecisionContext::new(state);
    let can_pass = candidates.iter().any(MoveCandidate::is_pass);
    if can_pass && ctx.phase.has(HeuristicCode::PASS) {
        let p = profile.weight(ctx.phase, HeuristicCode::PASS) / MAX_WEIGHT;
        if rng.random_bool(p.clamp(0.0, 1.0)) {
            return MoveCandidate::Pass;
        }
    }
    let options: Vec<&MoveCandidate> = candidates.iter().filter(|m| !m.is_pass()).collect();
    if options.is_empty() {
        return MoveCandidate::Pass;
    }
    let scores: Vec<f64> = options.iter().map(|m| score_move(profile, &ctx, m)).collect();
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return *options[rng.random_range(0..options.len())];
    }
    let mut x = rng.random::<f64>() * total;
    for (m, s) in options.iter().zip(&scores) {
        if x < *s {
            return **m;
        }
        x -= s;
    }
    // float round-off can leave x just past the last positive score
    let last = scores.iter().rposition(|s| *s > 0.0).unwrap_or(0);
    *options[last]
}

/// Plays by [`select_move`] with a fixed profile.
#[derive(Clone, Debug)]
pub struct HeuristicAgent {
    pub profile: Arc<HeuristicProfile>,
}

impl HeuristicAgent {
    pub fn new(profile: HeuristicProfile) -> Self {
        Self {
            profile: Arc::new(profile),
        }
    }
}

impl Agent for HeuristicAgent {
    fn profile_id(&self) -> &str {
        &self.profile.persona_id
    }

    fn choose(
        &self,
        state: &GameState,
        candidates: &[MoveCandidate],
        rng: &mut GameRng,
    ) -> MoveCandidate {
        select_move(&self.profile, state, candidates, rng)
    }
}
