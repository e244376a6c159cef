//! Random-pairing rounds of two-player games rated with TrueSkill.

mod trueskill;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use trueskill::{update_draw, update_two_player, v_win, w_win, Rating, RatingConfig};

use crate::game::{play_game, Agent, GameConfig, MatchOutcome, MatchRecord, PlayerId, SetupError};
use crate::heuristics::{HeuristicAgent, HeuristicProfile};
use crate::io::{read_jsonl, write_jsonl, IoError};
use crate::map::MapGraph;

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("need an even number of players, got {0}")]
    OddPlayers(usize),
    #[error("need at least two players")]
    TooFewPlayers,
    #[error("duplicate profile `{0}`")]
    DuplicateProfile(String),
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("rating config: {0}")]
    BadRating(String),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("leaderboard line {line}: {message}")]
    Leaderboard { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TournamentConfig {
    pub rounds: u32,
    pub game: GameConfig,
    pub rating: RatingConfig,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        Self {
            rounds: 49,
            game: GameConfig::default(),
            rating: RatingConfig::default(),
        }
    }
}

/// Shuffles the players and pairs neighbours, which is uniform over perfect
/// matchings. Returns index pairs; the first index moves first.
pub fn schedule_round(players: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, TournamentError> {
    if players % 2 == 1 {
        return Err(TournamentError::OddPlayers(players));
    }
    let mut order: Vec<usize> = (0..players).collect();
    order.shuffle(rng);
    Ok(order.chunks(2).map(|c| (c[0], c[1])).collect())
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one game, fixed by the run seed and the game's slot.
pub fn game_seed(run_seed: u64, round: u32, pair: usize) -> u64 {
    splitmix(splitmix(splitmix(run_seed) ^ round as u64) ^ pair as u64)
}

/// Seed of the `run`-th independent repetition of a tournament.
pub fn run_seed(base: u64, run: u32) -> u64 {
    if run == 0 {
        base
    } else {
        splitmix(base ^ splitmix(run as u64))
    }
}

/// One rated game with the ratings either side of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub run_seed: u64,
    pub round: u32,
    pub pair: usize,
    pub game_id: String,
    pub seed: u64,
    /// Persona ids by seat; seat 0 moves first.
    pub seats: [String; 2],
    pub outcome: MatchOutcome,
    pub turn_count: u32,
    pub pre: [Rating; 2],
    pub post: [Rating; 2],
}

impl MatchEntry {
    /// Seat index of the winner, if the game was decisive.
    pub fn winner_seat(&self) -> Option<usize> {
        match &self.outcome {
            MatchOutcome::Won { winner } => Some(winner.index()),
            MatchOutcome::Forfeit { offender, .. } => Some(1 - offender.index()),
            MatchOutcome::Draw => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Standing {
    pub persona_id: String,
    pub rating: Rating,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    /// Sorted by mu, highest first; ties by persona id.
    pub standings: Vec<Standing>,
}

impl Leaderboard {
    fn from_standings(mut standings: Vec<Standing>) -> Self {
        standings.sort_by(|a, b| {
            b.rating
                .mu
                .total_cmp(&a.rating.mu)
                .then_with(|| a.persona_id.cmp(&b.persona_id))
        });
        Self { standings }
    }

    pub fn get(&self, id: &str) -> Option<&Standing> {
        self.standings.iter().find(|s| s.persona_id == id)
    }

    pub fn mu_by_id(&self) -> HashMap<String, f64> {
        self.standings
            .iter()
            .map(|s| (s.persona_id.clone(), s.rating.mu))
            .collect()
    }

    /// Tab-separated with a header row. Floats are written in shortest
    /// round-trip form so a parsed board equals the original.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("persona_id\tmu\tsigma\twins\tlosses\tdraws\n");
        for s in &self.standings {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                s.persona_id, s.rating.mu, s.rating.sigma, s.wins, s.losses, s.draws
            );
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, TournamentError> {
        let mut standings = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| TournamentError::Leaderboard { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(bad(format!("expected 6 columns, got {}", cols.len())));
            }
            let num = |j: usize| cols[j].parse::<f64>().map_err(|e| bad(format!("{}: {e}", cols[j])));
            let int = |j: usize| cols[j].parse::<u32>().map_err(|e| bad(format!("{}: {e}", cols[j])));
            standings.push(Standing {
                persona_id: cols[0].to_string(),
                rating: Rating::new(num(1)?, num(2)?),
                wins: int(3)?,
                losses: int(4)?,
                draws: int(5)?,
            });
        }
        Ok(Self::from_standings(standings))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TournamentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::from_tsv(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TournamentError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| IoError::io(path, e))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentRun {
    pub run_seed: u64,
    pub config: TournamentConfig,
    pub map: String,
    pub entries: Vec<MatchEntry>,
    pub leaderboard: Leaderboard,
}

impl TournamentRun {
    pub fn save_log(&self, path: impl AsRef<Path>) -> Result<(), TournamentError> {
        Ok(write_jsonl(path, &self.entries)?)
    }
}

pub fn load_log(path: impl AsRef<Path>) -> Result<Vec<MatchEntry>, TournamentError> {
    Ok(read_jsonl(path)?)
}

struct Tally {
    ratings: Vec<Rating>,
    wins: Vec<u32>,
    losses: Vec<u32>,
    draws: Vec<u32>,
}

impl Tally {
    fn new(n: usize, cfg: &RatingConfig) -> Self {
        Self {
            ratings: vec![cfg.prior(); n],
            wins: vec![0; n],
            losses: vec![0; n],
            draws: vec![0; n],
        }
    }

    /// Applies one result and returns the post-game ratings by seat.
    fn apply(&mut self, a: usize, b: usize, winner_seat: Option<usize>, cfg: &RatingConfig) -> [Rating; 2] {
        let (ra, rb) = (self.ratings[a], self.ratings[b]);
        let (na, nb) = match winner_seat {
            Some(0) => {
                self.wins[a] += 1;
                self.losses[b] += 1;
                update_two_player(ra, rb, cfg)
            }
            Some(_) => {
                self.wins[b] += 1;
                self.losses[a] += 1;
                let (w, l) = update_two_player(rb, ra, cfg);
                (l, w)
            }
            None => {
                self.draws[a] += 1;
                self.draws[b] += 1;
                update_draw(ra, rb, cfg)
            }
        };
        self.ratings[a] = na;
        self.ratings[b] = nb;
        [na, nb]
    }

    fn leaderboard(self, ids: &[String]) -> Leaderboard {
        let standings = ids
            .iter()
            .enumerate()
            .map(|(i, id)| Standing {
                persona_id: id.clone(),
                rating: self.ratings[i],
                wins: self.wins[i],
                losses: self.losses[i],
                draws: self.draws[i],
            })
            .collect();
        Leaderboard::from_standings(standings)
    }
}

fn check_profiles(profiles: &[HeuristicProfile]) -> Result<(), TournamentError> {
    if profiles.len() < 2 {
        return Err(TournamentError::TooFewPlayers);
    }
    if profiles.len() % 2 == 1 {
        return Err(TournamentError::OddPlayers(profiles.len()));
    }
    let mut seen = HashSet::new();
    for p in profiles {
        if !seen.insert(p.persona_id.as_str()) {
            return Err(TournamentError::DuplicateProfile(p.persona_id.clone()));
        }
    }
    Ok(())
}

/// Plays `config.rounds` rounds. Games of a round run in parallel; ratings
/// are then updated one game at a time in pairing order.
pub fn run_tournament(
    profiles: &[HeuristicProfile],
    map: Arc<MapGraph>,
    config: &TournamentConfig,
    seed: u64,
) -> Result<TournamentRun, TournamentError> {
    check_profiles(profiles)?;
    config.rating.validate().map_err(TournamentError::BadRating)?;
    let agents: Vec<HeuristicAgent> = profiles.iter().cloned().map(HeuristicAgent::new).collect();
    let ids: Vec<String> = profiles.iter().map(|p| p.persona_id.clone()).collect();
    let mut game = config.game.clone();
    game.record_moves = false;
    game.record_snapshots = false;

    let mut sched = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new(profiles.len(), &config.rating);
    let mut entries = Vec::with_capacity(config.rounds as usize * profiles.len() / 2);

    for round in 0..config.rounds {
        let pairs = schedule_round(profiles.len(), &mut sched)?;
        let records: Vec<MatchRecord> = pairs
            .par_iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let seats: [&dyn Agent; 2] = [&agents[a], &agents[b]];
                play_game(
                    &seats,
                    map.clone(),
                    &game,
                    game_seed(seed, round, k),
                    format!("r{round}-g{k}"),
                )
            })
            .collect::<Result<_, _>>()?;
        for (k, (&(a, b), rec)) in pairs.iter().zip(records).enumerate() {
            let pre = [tally.ratings[a], tally.ratings[b]];
            let mut entry = MatchEntry {
                run_seed: seed,
                round,
                pair: k,
                game_id: rec.game_id,
                seed: rec.seed,
                seats: [ids[a].clone(), ids[b].clone()],
                outcome: rec.outcome,
                turn_count: rec.turn_count,
                pre,
                post: pre,
            };
            entry.post = tally.apply(a, b, entry.winner_seat(), &config.rating);
            entries.push(entry);
        }
        log::debug!("round {} of {} done", round + 1, config.rounds);
    }

    Ok(TournamentRun {
        run_seed: seed,
        config: config.clone(),
        map: map.name().to_string(),
        entries,
        leaderboard: tally.leaderboard(&ids),
    })
}

/// Recomputes the leaderboard from logged outcomes alone.
pub fn replay_ratings(
    entries: &[MatchEntry],
    cfg: &RatingConfig,
) -> Result<Leaderboard, TournamentError> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for e in entries {
        for id in &e.seats {
            if !index.contains_key(id) {
                index.insert(id.clone(), ids.len());
                ids.push(id.clone());
            }
        }
    }
    let mut tally = Tally::new(ids.len(), cfg);
    for e in entries {
        tally.apply(index[&e.seats[0]], index[&e.seats[1]], e.winner_seat(), cfg);
    }
    Ok(tally.leaderboard(&ids))
}

/// Plays one logged game again with full move and snapshot recording.
pub fn replay_match(
    entry: &MatchEntry,
    profiles: &[HeuristicProfile],
    map: Arc<MapGraph>,
    game: &GameConfig,
) -> Result<MatchRecord, TournamentError> {
    let find = |id: &str| {
        profiles
            .iter()
            .find(|p| p.persona_id == id)
            .cloned()
            .map(HeuristicAgent::new)
            .ok_or_else(|| TournamentError::UnknownProfile(id.to_string()))
    };
    let (a, b) = (find(&entry.seats[0])?, find(&entry.seats[1])?);
    let config = GameConfig {
        record_moves: true,
        record_snapshots: true,
        ..game.clone()
    };
    Ok(play_game(&[&a, &b], map, &config, entry.seed, entry.game_id.clone())?)
}

/// Seat of `id` in a two-player record, if present.
pub fn seat_of(entry: &MatchEntry, id: &str) -> Option<PlayerId> {
    entry
        .seats
        .iter()
        .position(|s| s == id)
        .map(|i| PlayerId(i as u8))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_is_a_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs = schedule_round(50, &mut rng).unwrap();
        assert_eq!(pairs.len(), 25);
        let mut seen: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        seen.sort();
        assert_eq!(seen, (0..50).collect::<Vec<_>>());
        assert_eq!(schedule_round(2, &mut rng).unwrap().len(), 1);
        assert!(matches!(
            schedule_round(3, &mut rng),
            Err(TournamentError::OddPlayers(3))
        ));
        let again = schedule_round(50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(pairs, again);
    }

    #[test]
    fn seeds_differ_by_slot() {
        let s: HashSet<u64> = (0..5)
            .flat_map(|r| (0..25).map(move |k| game_seed(1, r, k)))
            .collect();
        assert_eq!(s.len(), 125);
        assert_eq!(run_seed(9, 0), 9);
        assert_ne!(run_seed(9, 1), 9);
    }

    #[test]
    fn leaderboard_tsv_round_trips() {
        let board = Leaderboard::from_standings(vec![
            Standing {
                persona_id: "a".into(),
                rating: Rating::new(24.123456789, 1.0 / 3.0),
                wins: 1,
                losses: 2,
                draws: 0,
            },
            Standing {
                persona_id: "b".into(),
                rating: Rating::new(26.5, 2.0),
                wins: 2,
                losses: 1,
                draws: 1,
            },
        ]);
        assert_eq!(board.standings[0].persona_id, "b");
        assert_eq!(Leaderboard::from_tsv(&board.to_tsv()).unwrap(), board);
        assert!(Leaderboard::from_tsv("h\nx\t1\n").is_err());
    }
}
