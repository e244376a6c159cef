use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    CombatOutcome, GameConfig, GameState, MoveCandidate, Phase, PlayerId, SetupError, Status,
};
use crate::map::MapGraph;

pub type GameRng = ChaCha8Rng;

/// Something that picks one of the enumerated legal moves.
pub trait Agent: Send + Sync {
    fn profile_id(&self) -> &str;

    fn choose(
        &self,
        state: &GameState,
        candidates: &[MoveCandidate],
        rng: &mut GameRng,
    ) -> MoveCandidate;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seat {
    pub player: PlayerId,
    pub profile_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatchOutcome {
    Won { winner: PlayerId },
    Draw,
    /// An agent answered with a move outside the legal set.
    Forfeit { offender: PlayerId, rule: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedMove {
    pub turn: u32,
    pub player: PlayerId,
    pub phase: Phase,
    #[serde(rename = "move")]
    pub mv: MoveCandidate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combat: Option<CombatOutcome>,
}

/// Board at the end of a turn. Turn 0 is the end of initialization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub turn: u32,
    pub player: PlayerId,
    pub owners: Vec<Option<PlayerId>>,
    pub units: Vec<u32>,
}

impl Snapshot {
    fn of(state: &GameState, turn: u32, player: PlayerId) -> Self {
        Self {
            turn,
            player,
            owners: state.owners().to_vec(),
            units: state.unit_counts().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub game_id: String,
    pub seed: u64,
    pub map: String,
    pub config: GameConfig,
    pub seats: Vec<Seat>,
    pub outcome: MatchOutcome,
    pub draw: bool,
    pub turn_count: u32,
    /// Regions held by each seat at the end.
    pub final_regions: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moves: Vec<LoggedMove>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<Snapshot>,
}

impl MatchRecord {
    pub fn winner(&self) -> Option<&Seat> {
        match &self.outcome {
            MatchOutcome::Won { winner } => self.seats.get(winner.index()),
            MatchOutcome::Forfeit { offender, .. } if self.seats.len() == 2 => {
                self.seats.get(1 - offender.index())
            }
            _ => None,
        }
    }
}

/// Plays one match to completion. The result depends only on the agents'
/// decision rules, the map, the config and the seed.
pub fn play_game(
    agents: &[&dyn Agent],
    map: Arc<MapGraph>,
    config: &GameConfig,
    seed: u64,
    game_id: impl Into<String>,
) -> Result<MatchRecord, SetupError> {
    let mut state = GameState::new(map.clone(), agents.len(), config.clone())?;
    let mut rng = GameRng::seed_from_u64(seed);
    let mut moves = Vec::new();
    let mut snapshots = Vec::new();
    let mut forfeit = None;

    while state.status() == Status::Ongoing {
        let candidates = state.legal_moves();
        if candidates.is_empty() {
            state.auto_advance();
            continue;
        }
        let me = state.current_player();
        let mv = if candidates.len() == 1 {
            candidates[0]
        } else {
            agents[me.index()].choose(&state, &candidates, &mut rng)
        };
        if !candidates.contains(&mv) {
            let rule = match state.check_move(&mv) {
                Err(e) => e.to_string(),
                Ok(()) => "move outside the enumerated candidate set".to_string(),
            };
            forfeit = Some((me, rule));
            break;
        }
        let (turn, phase) = (state.turn(), state.phase());
        let combat = match state.apply_move(&mv, &mut rng) {
            Ok(c) => c,
            Err(e) => {
                forfeit = Some((me, e.to_string()));
                break;
            }
        };
        if config.record_moves {
            moves.push(LoggedMove {
                turn,
                player: me,
                phase,
                mv,
                combat,
            });
        }
        if config.record_snapshots
            && (state.turn() != turn || matches!(state.status(), Status::Won(_)))
        {
            snapshots.push(Snapshot::of(&state, turn, me));
        }
    }

    let outcome = match (forfeit, state.status()) {
        (Some((offender, rule)), _) => MatchOutcome::Forfeit { offender, rule },
        (None, Status::Won(winner)) => MatchOutcome::Won { winner },
        (None, Status::Draw) => MatchOutcome::Draw,
        (None, Status::Ongoing) => unreachable!("loop exits only when the game ends"),
    };
    Ok(MatchRecord {
        game_id: game_id.into(),
        seed,
        map: map.name().to_string(),
        config: config.clone(),
        seats: agents
            .iter()
            .enumerate()
            .map(|(i, a)| Seat {
                player: PlayerId(i as u8),
                profile_id: a.profile_id().to_string(),
            })
            .collect(),
        draw: outcome == MatchOutcome::Draw,
        outcome,
        turn_count: state.turn(),
        final_regions: state.players().map(|p| state.region_count_of(p)).collect(),
        moves,
        snapshots,
    })
}
