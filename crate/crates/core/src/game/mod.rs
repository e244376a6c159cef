//! Game rules: state, legal-move enumeration and move application.

mod combat;
mod play;

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{MapGraph, RegionId, ZoneId};

pub use combat::{dice_round, resolve_combat, CombatOutcome};
pub use play::{
    play_game, Agent, GameRng, LoggedMove, MatchOutcome, MatchRecord, Seat, Snapshot,
};

pub const MAX_PLAYERS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub u8);

impl PlayerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Reinforce,
    Attack,
    Redeploy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ongoing,
    Won(PlayerId),
    Draw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveCandidate {
    Place {
        region: RegionId,
    },
    Attack {
        from: RegionId,
        to: RegionId,
        committed: u32,
    },
    Redeploy {
        from: RegionId,
        to: RegionId,
        count: u32,
    },
    Pass,
}

impl MoveCandidate {
    pub fn is_pass(&self) -> bool {
        matches!(self, MoveCandidate::Pass)
    }
}

/// How many units an attack sends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitPolicy {
    /// Everything except the one unit that must stay behind.
    #[default]
    AllButOne,
    /// At most this many, still leaving one behind.
    AtMost(u32),
}

impl CommitPolicy {
    pub fn committed(self, units: u32) -> u32 {
        let available = units.saturating_sub(1);
        match self {
            CommitPolicy::AllButOne => available,
            CommitPolicy::AtMost(n) => available.min(n.max(1)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub turn_limit: u32,
    pub initial_units: u32,
    pub commit_policy: CommitPolicy,
    /// Redeployments allowed per turn before the turn ends on its own.
    pub max_redeploys_per_turn: u32,
    pub record_moves: bool,
    pub record_snapshots: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            turn_limit: 250,
            initial_units: 40,
            commit_policy: CommitPolicy::AllButOne,
            max_redeploys_per_turn: 1,
            record_moves: false,
            record_snapshots: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("game is over")]
    GameOver,
    #[error("move {mv:?} is not allowed in phase {phase:?}")]
    WrongPhase { mv: MoveCandidate, phase: Phase },
    #[error("cannot place on {0}: region is owned by another player")]
    PlaceOnEnemy(RegionId),
    #[error("cannot place on owned region {0} while unoccupied regions remain")]
    PlaceWhileUnoccupied(RegionId),
    #[error("cannot place on unoccupied region {0} after initialization")]
    PlaceOnUnoccupied(RegionId),
    #[error("no units left in the pool")]
    EmptyPool,
    #[error("source region {0} is not owned by the mover")]
    NotOwned(RegionId),
    #[error("source region {0} needs at least two units")]
    TooFewUnits(RegionId),
    #[error("target {to} is not adjacent to {from}")]
    NotAdjacent { from: RegionId, to: RegionId },
    #[error("target {0} is not an enemy region")]
    NotEnemy(RegionId),
    #[error("must commit between 1 and units-1, got {committed} of {units}")]
    BadCommit { committed: u32, units: u32 },
    #[error("target {to} is not reachable from {from} through owned regions")]
    Unreachable { from: RegionId, to: RegionId },
    #[error("source and target must differ")]
    SameRegion,
    #[error("pass is not allowed in phase {0:?}")]
    PassNotAllowed(Phase),
    #[error("attack needs at least one unit")]
    NoAttackers,
    #[error("combat needs at least one defender")]
    NoDefenders,
    #[error("player {0} has been eliminated")]
    Eliminated(PlayerId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetupError {
    #[error("need between 2 and {MAX_PLAYERS} players, got {0}")]
    PlayerCount(usize),
    #[error("map has {regions} regions but only {players} players; each player needs a region")]
    TooFewRegions { regions: usize, players: usize },
    #[error("initial_units {units} cannot cover {regions} regions with {players} players")]
    TooFewUnits {
        units: u32,
        regions: usize,
        players: usize,
    },
    #[error("max_redeploys_per_turn must be at least 1")]
    NoRedeploys,
}

/// Mutable match state.
#[derive(Clone, Debug)]
pub struct GameState {
    map: Arc<MapGraph>,
    config: GameConfig,
    owner: Vec<Option<PlayerId>>,
    units: Vec<u32>,
    phase: Phase,
    current: PlayerId,
    turn: u32,
    pools: Vec<u32>,
    status: Status,
    region_counts: Vec<u32>,
    unit_totals: Vec<u32>,
    unoccupied: usize,
    redeploys_this_turn: u32,
}

impl GameState {
    pub fn new(map: Arc<MapGraph>, players: usize, config: GameConfig) -> Result<Self, SetupError> {
        if !(2..=MAX_PLAYERS).contains(&players) {
            return Err(SetupError::PlayerCount(players));
        }
        let regions = map.region_count();
        if regions < players {
            return Err(SetupError::TooFewRegions { regions, players });
        }
        if (config.initial_units as usize) < regions.div_ceil(players) {
            return Err(SetupError::TooFewUnits {
                units: config.initial_units,
                regions,
                players,
            });
        }
        if config.max_redeploys_per_turn == 0 {
            return Err(SetupError::NoRedeploys);
        }
        Ok(Self {
            owner: vec![None; regions],
            units: vec![0; regions],
            phase: Phase::Init,
            current: PlayerId(0),
            turn: 0,
            pools: vec![config.initial_units; players],
            status: Status::Ongoing,
            region_counts: vec![0; players],
            unit_totals: vec![0; players],
            unoccupied: regions,
            redeploys_this_turn: 0,
            map,
            config,
        })
    }

    /// Builds a post-initialization position directly, for tests and analysis.
    /// Every region must be owned with at least one unit.
    pub fn from_position(
        map: Arc<MapGraph>,
        players: usize,
        config: GameConfig,
        owners: &[PlayerId],
        units: &[u32],
        phase: Phase,
        current: PlayerId,
    ) -> Result<Self, SetupError> {
        assert_eq!(owners.len(), map.region_count());
        assert_eq!(units.len(), map.region_count());
        assert!(units.iter().all(|&u| u >= 1));
        assert!(owners.iter().all(|p| p.index() < players));
        let mut config = config;
        config.initial_units = config.initial_units.max(map.region_count() as u32);
        let mut s = Self::new(map, players, config)?;
        for (i, (&p, &u)) in owners.iter().zip(units).enumerate() {
            s.owner[i] = Some(p);
            s.units[i] = u;
            s.region_counts[p.index()] += 1;
            s.unit_totals[p.index()] += u;
        }
        s.unoccupied = 0;
        s.pools.iter_mut().for_each(|p| *p = 0);
        s.phase = phase;
        s.current = current;
        s.turn = 1;
        if phase == Phase::Reinforce {
            if let Ok(n) = s.reinforcement_count(current) {
                s.pools[current.index()] = n;
            }
        }
        if let Some(w) = s.sole_owner() {
            s.status = Status::Won(w);
        }
        Ok(s)
    }

    pub fn map(&self) -> &MapGraph {
        &self.map
    }

    pub fn map_arc(&self) -> &Arc<MapGraph> {
        &self.map
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn owner(&self, r: RegionId) -> Option<PlayerId> {
        self.owner[r.0]
    }

    pub fn owners(&self) -> &[Option<PlayerId>] {
        &self.owner
    }

    pub fn units(&self, r: RegionId) -> u32 {
        self.units[r.0]
    }

    pub fn unit_counts(&self) -> &[u32] {
        &self.units
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn current_player(&self) -> PlayerId {
        self.current
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }

    pub fn pool(&self, p: PlayerId) -> u32 {
        self.pools[p.index()]
    }

    pub fn pools(&self) -> &[u32] {
        &self.pools
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn num_players(&self) -> usize {
        self.pools.len()
    }

    pub fn players(&self) -> impl Iterator<Item = PlayerId> {
        (0..self.num_players() as u8).map(PlayerId)
    }

    pub fn region_count_of(&self, p: PlayerId) -> u32 {
        self.region_counts[p.index()]
    }

    pub fn unit_total_of(&self, p: PlayerId) -> u32 {
        self.unit_totals[p.index()]
    }

    pub fn unoccupied_regions(&self) -> usize {
        self.unoccupied
    }

    pub fn redeploys_this_turn(&self) -> u32 {
        self.redeploys_this_turn
    }

    /// A player with no regions after initialization is out of the game.
    pub fn is_eliminated(&self, p: PlayerId) -> bool {
        self.phase != Phase::Init && self.region_counts[p.index()] == 0
    }

    /// The player owning every region of `zone`, if any.
    pub fn zone_owner(&self, zone: ZoneId) -> Option<PlayerId> {
        let members = &self.map.zone(zone).members;
        let first = self.owner[members[0].0]?;
        members
            .iter()
            .all(|r| self.owner[r.0] == Some(first))
            .then_some(first)
    }

    /// Sum of bonuses over the zones `p` owns completely.
    pub fn zone_bonus_of(&self, p: PlayerId) -> u32 {
        self.map
            .zones()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.zone_owner(ZoneId(*i)) == Some(p))
            .map(|(_, z)| z.bonus)
            .sum()
    }

    pub fn total_units_on_board(&self) -> u64 {
        self.units.iter().map(|&u| u as u64).sum()
    }

    fn sole_owner(&self) -> Option<PlayerId> {
        let first = self.owner[0]?;
        (self.region_counts[first.index()] as usize == self.map.region_count()).then_some(first)
    }

    /// `max(3, owned / 3)` plus the bonus of every fully owned zone.
    pub fn reinforcement_count(&self, p: PlayerId) -> Result<u32, RuleError> {
        let owned = self.region_counts[p.index()];
        if owned == 0 {
            return Err(RuleError::Eliminated(p));
        }
        Ok((owned / 3).max(3) + self.zone_bonus_of(p))
    }

    /// Connected components of `p`'s territory. Entry `i` is the component
    /// label of region `i`, or `usize::MAX` if `p` doesn't own it.
    pub fn owned_components(&self, p: PlayerId) -> Vec<usize> {
        let n = self.map.region_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if self.owner[start] != Some(p) || label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(RegionId(start));
            while let Some(r) = queue.pop_front() {
                for nb in self.map.neighbors(r) {
                    if self.owner[nb.0] == Some(p) && label[nb.0] == usize::MAX {
                        label[nb.0] = next;
                        queue.push_back(nb);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn legal_moves(&self) -> Vec<MoveCandidate> {
        let mut out = Vec::new();
        if self.status != Status::Ongoing {
            return out;
        }
        let me = self.current;
        match self.phase {
            Phase::Init | Phase::Reinforce => {
                if self.pools[me.index()] == 0 {
                    return out;
                }
                let want_unoccupied = self.phase == Phase::Init && self.unoccupied > 0;
                for r in self.map.regions() {
                    let ok = if want_unoccupied {
                        self.owner[r.0].is_none()
                    } else {
                        self.owner[r.0] == Some(me)
                    };
                    if ok {
                        out.push(MoveCandidate::Place { region: r });
                    }
                }
            }
            Phase::Attack => {
                for from in self.map.regions() {
                    if self.owner[from.0] != Some(me) || self.units[from.0] < 2 {
                        continue;
                    }
                    let committed = self.config.commit_policy.committed(self.units[from.0]);
                    for to in self.map.neighbors(from) {
                        if matches!(self.owner[to.0], Some(o) if o != me) {
                            out.push(MoveCandidate::Attack { from, to, committed });
                        }
                    }
                }
                out.push(MoveCandidate::Pass);
            }
            Phase::Redeploy => {
                let comp = self.owned_components(me);
                for from in self.map.regions() {
                    if self.owner[from.0] != Some(me) || self.units[from.0] < 2 {
                        continue;
                    }
                    let count = self.units[from.0] - 1;
                    for to in self.map.regions() {
                        if to != from && comp[to.0] == comp[from.0] {
                            out.push(MoveCandidate::Redeploy { from, to, count });
                        }
                    }
                }
                out.push(MoveCandidate::Pass);
            }
        }
        out
    }

    /// Validates `mv` against the rules of the current phase.
    pub fn check_move(&self, mv: &MoveCandidate) -> Result<(), RuleError> {
        if self.status != Status::Ongoing {
            return Err(RuleError::GameOver);
        }
        let me = self.current;
        let wrong_phase = || RuleError::WrongPhase {
            mv: *mv,
            phase: self.phase,
        };
        match (*mv, self.phase) {
            (MoveCandidate::Place { region }, Phase::Init | Phase::Reinforce) => {
                if self.pools[me.index()] == 0 {
                    return Err(RuleError::EmptyPool);
                }
                match self.owner[region.0] {
                    Some(o) if o != me => Err(RuleError::PlaceOnEnemy(region)),
                    Some(_) if self.phase == Phase::Init && self.unoccupied > 0 => {
                        Err(RuleError::PlaceWhileUnoccupied(region))
                    }
                    None if self.phase == Phase::Reinforce => {
                        Err(RuleError::PlaceOnUnoccupied(region))
                    }
                    _ => Ok(()),
                }
            }
            (MoveCandidate::Attack { from, to, committed }, Phase::Attack) => {
                if self.owner[from.0] != Some(me) {
                    return Err(RuleError::NotOwned(from));
                }
                let units = self.units[from.0];
                if units < 2 {
                    return Err(RuleError::TooFewUnits(from));
                }
                if !self.map.adjacent(from, to) {
                    return Err(RuleError::NotAdjacent { from, to });
                }
                if !matches!(self.owner[to.0], Some(o) if o != me) {
                    return Err(RuleError::NotEnemy(to));
                }
                if committed == 0 || committed >= units {
                    return Err(RuleError::BadCommit { committed, units });
                }
                Ok(())
            }
            (MoveCandidate::Redeploy { from, to, count }, Phase::Redeploy) => {
                if from == to {
                    return Err(RuleError::SameRegion);
                }
                if self.owner[from.0] != Some(me) {
                    return Err(RuleError::NotOwned(from));
                }
                if self.owner[to.0] != Some(me) {
                    return Err(RuleError::NotOwned(to));
                }
                let units = self.units[from.0];
                if units < 2 {
                    return Err(RuleError::TooFewUnits(from));
                }
                if count == 0 || count >= units {
                    return Err(RuleError::BadCommit {
                        committed: count,
                        units,
                    });
                }
                if !self.owned_path_exists(me, from, to) {
                    return Err(RuleError::Unreachable { from, to });
                }
                Ok(())
            }
            (MoveCandidate::Pass, Phase::Attack | Phase::Redeploy) => Ok(()),
            (MoveCandidate::Pass, phase) => Err(RuleError::PassNotAllowed(phase)),
            _ => Err(wrong_phase()),
        }
    }

    fn owned_path_exists(&self, p: PlayerId, from: RegionId, to: RegionId) -> bool {
        let mut seen = vec![false; self.map.region_count()];
        let mut queue = VecDeque::from([from]);
        seen[from.0] = true;
        while let Some(r) = queue.pop_front() {
            if r == to {
                return true;
            }
            for nb in self.map.neighbors(r) {
                if !seen[nb.0] && self.owner[nb.0] == Some(p) {
                    seen[nb.0] = true;
                    queue.push_back(nb);
                }
            }
        }
        false
    }

    /// Applies a legal move. Dice for attacks are drawn from `rng`.
    pub fn apply_move<R: Rng + ?Sized>(
        &mut self,
        mv: &MoveCandidate,
        rng: &mut R,
    ) -> Result<Option<CombatOutcome>, RuleError> {
        self.check_move(mv)?;
        let me = self.current;
        let mut combat = None;
        match *mv {
            MoveCandidate::Place { region } => {
                if self.owner[region.0].is_none() {
                    self.owner[region.0] = Some(me);
                    self.region_counts[me.index()] += 1;
                    self.unoccupied -= 1;
                }
                self.units[region.0] += 1;
                self.unit_totals[me.index()] += 1;
                self.pools[me.index()] -= 1;
                if self.phase == Phase::Init {
                    self.advance_init();
                } else if self.pools[me.index()] == 0 {
                    self.phase = Phase::Attack;
                }
            }
            MoveCandidate::Attack { from, to, committed } => {
                let defender = self.owner[to.0].expect("checked enemy");
                let out = resolve_combat(committed, self.units[to.0], || rng.random_range(1..=6))?;
                self.units[from.0] -= committed;
                self.unit_totals[me.index()] -= out.attacker_losses;
                self.units[to.0] -= out.defender_losses;
                self.unit_totals[defender.index()] -= out.defender_losses;
                if out.conquered {
                    self.owner[to.0] = Some(me);
                    self.units[to.0] = out.moved_in;
                    self.region_counts[defender.index()] -= 1;
                    self.region_counts[me.index()] += 1;
                    if self.region_counts[me.index()] as usize == self.map.region_count() {
                        self.status = Status::Won(me);
                    }
                }
                combat = Some(out);
            }
            MoveCandidate::Redeploy { from, to, count } => {
                self.units[from.0] -= count;
                self.units[to.0] += count;
                self.redeploys_this_turn += 1;
                if self.redeploys_this_turn >= self.config.max_redeploys_per_turn {
                    self.end_turn();
                }
            }
            MoveCandidate::Pass => match self.phase {
                Phase::Attack => self.phase = Phase::Redeploy,
                Phase::Redeploy => self.end_turn(),
                _ => unreachable!("checked"),
            },
        }
        Ok(combat)
    }

    /// Moves past a phase with no legal move.
    pub fn auto_advance(&mut self) {
        if self.status != Status::Ongoing {
            return;
        }
        match self.phase {
            Phase::Init => self.advance_init(),
            Phase::Reinforce => self.phase = Phase::Attack,
            Phase::Attack => self.phase = Phase::Redeploy,
            Phase::Redeploy => self.end_turn(),
        }
    }

    fn advance_init(&mut self) {
        let n = self.num_players();
        for step in 1..=n {
            let p = (self.current.index() + step) % n;
            if self.pools[p] > 0 {
                self.current = PlayerId(p as u8);
                return;
            }
        }
        // every pool is empty: regular play begins with the first player
        self.current = PlayerId(0);
        self.begin_turn();
    }

    fn end_turn(&mut self) {
        let n = self.num_players();
        for step in 1..=n {
            let p = PlayerId(((self.current.index() + step) % n) as u8);
            if self.region_counts[p.index()] > 0 {
                self.current = p;
                break;
            }
        }
        self.begin_turn();
    }

    fn begin_turn(&mut self) {
        self.turn += 1;
        self.redeploys_this_turn = 0;
        if self.turn > self.config.turn_limit {
            self.status = Status::Draw;
            return;
        }
        self.phase = Phase::Reinforce;
        let grant = self
            .reinforcement_count(self.current)
            .expect("current player owns a region");
        self.pools[self.current.index()] += grant;
    }

    /// Checks the structural invariants that must hold after every step.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.map.region_count();
        let mut counts = vec![0u32; self.num_players()];
        let mut totals = vec![0u32; self.num_players()];
        let mut unoccupied = 0;
        for i in 0..n {
            match self.owner[i] {
                Some(p) => {
                    if self.units[i] == 0 {
                        return Err(format!("owned region {i} has no units"));
                    }
                    counts[p.index()] += 1;
                    totals[p.index()] += self.units[i];
                }
                None => {
                    if self.units[i] != 0 {
                        return Err(format!("unowned region {i} holds units"));
                    }
                    if self.phase != Phase::Init {
                        return Err(format!("region {i} unowned after initialization"));
                    }
                    unoccupied += 1;
                }
            }
        }
        if counts != self.region_counts {
            return Err("region count cache out of sync".into());
        }
        if totals != self.unit_totals {
            return Err("unit total cache out of sync".into());
        }
        if unoccupied != self.unoccupied {
            return Err("unoccupied cache out of sync".into());
        }
        if let Status::Won(w) = self.status {
            if counts[w.index()] as usize != n {
                return Err(format!("winner {w} does not own every region"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> Arc<MapGraph> {
        Arc::new(MapGraph::tiny3())
    }

    const A: RegionId = RegionId(0);
    const B: RegionId = RegionId(1);
    const C: RegionId = RegionId(2);

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn attack_candidates_on_tiny3() {
        let s = GameState::from_position(
            tiny(),
            2,
            GameConfig::default(),
            &[PlayerId(0), PlayerId(1), PlayerId(0)],
            &[3, 1, 1],
            Phase::Attack,
            PlayerId(0),
        )
        .unwrap();
        assert_eq!(
            s.legal_moves(),
            vec![
                MoveCandidate::Attack {
                    from: A,
                    to: B,
                    committed: 2
                },
                MoveCandidate::Pass
            ]
        );
    }

    #[test]
    fn attack_with_no_enemy_is_pass_only() {
        let map = tiny();
        let mut s = GameState::new(map, 2, GameConfig::default()).unwrap();
        for r in [A, B, C] {
            s.owner[r.0] = Some(PlayerId(0));
            s.units[r.0] = 2;
        }
        s.phase = Phase::Attack;
        assert_eq!(s.legal_moves(), vec![MoveCandidate::Pass]);
    }

    #[test]
    fn init_with_one_unoccupied_region() {
        let mut cfg = GameConfig::default();
        cfg.initial_units = 3;
        let mut s = GameState::new(tiny(), 2, cfg).unwrap();
        let mut r = rng();
        s.apply_move(&MoveCandidate::Place { region: A }, &mut r).unwrap();
        s.apply_move(&MoveCandidate::Place { region: B }, &mut r).unwrap();
        assert_eq!(s.legal_moves(), vec![MoveCandidate::Place { region: C }]);
        assert_eq!(
            s.check_move(&MoveCandidate::Place { region: A }),
            Err(RuleError::PlaceWhileUnoccupied(A))
        );
        s.apply_move(&MoveCandidate::Place { region: C }, &mut r).unwrap();
        // P1 now reinforces own region only
        assert_eq!(s.current_player(), PlayerId(1));
        assert_eq!(s.legal_moves(), vec![MoveCandidate::Place { region: B }]);
    }

    #[test]
    fn placing_sets_owner_and_decrements_pool() {
        let mut cfg = GameConfig::default();
        cfg.initial_units = 5;
        let mut s = GameState::new(tiny(), 2, cfg).unwrap();
        s.apply_move(&MoveCandidate::Place { region: B }, &mut rng()).unwrap();
        assert_eq!(s.owner(B), Some(PlayerId(0)));
        assert_eq!(s.units(B), 1);
        assert_eq!(s.pool(PlayerId(0)), 4);
        assert_eq!(s.current_player(), PlayerId(1));
    }

    #[test]
    fn reinforcement_formula() {
        let map = Arc::new(MapGraph::classic_world());
        let au: Vec<RegionId> = map
            .zones()
            .iter()
            .find(|z| z.key == "AU")
            .unwrap()
            .members
            .clone();
        let na: Vec<RegionId> = map
            .zones()
            .iter()
            .find(|z| z.key == "NA")
            .unwrap()
            .members
            .clone();
        // 11 regions, no complete zone
        let mut owners = vec![PlayerId(1); 42];
        let mut mine = 0;
        for r in map.regions() {
            if mine < 11 && !au.contains(&r) && r != na[0] && map.zone(map.zone_of(r)).key != "SA" {
                owners[r.0] = PlayerId(0);
                mine += 1;
            }
        }
        let s = GameState::from_position(
            map.clone(),
            2,
            GameConfig::default(),
            &owners,
            &[1; 42],
            Phase::Attack,
            PlayerId(0),
        )
        .unwrap();
        assert_eq!(s.region_count_of(PlayerId(0)), 11);
        assert_eq!(s.zone_bonus_of(PlayerId(0)), 0);
        assert_eq!(s.reinforcement_count(PlayerId(0)), Ok(3));

        // 12 regions including all of Australia (bonus 2) -> 4 + 2
        let mut owners = vec![PlayerId(1); 42];
        for r in &au {
            owners[r.0] = PlayerId(0);
        }
        let mut extra = 0;
        for r in map.regions() {
            if extra < 8 && owners[r.0] == PlayerId(1) && map.zone(map.zone_of(r)).key == "AS" {
                owners[r.0] = PlayerId(0);
                extra += 1;
            }
        }
        let s = GameState::from_position(
            map,
            2,
            GameConfig::default(),
            &owners,
            &[1; 42],
            Phase::Attack,
            PlayerId(0),
        )
        .unwrap();
        assert_eq!(s.region_count_of(PlayerId(0)), 12);
        assert_eq!(s.reinforcement_count(PlayerId(0)), Ok(6));
    }

    #[test]
    fn reinforcement_floor_and_elimination() {
        let s = GameState::from_position(
            tiny(),
            3,
            GameConfig::default(),
            &[PlayerId(0), PlayerId(1), PlayerId(1)],
            &[1, 1, 1],
            Phase::Attack,
            PlayerId(0),
        )
        .unwrap();
        assert_eq!(s.reinforcement_count(PlayerId(0)), Ok(3));
        assert_eq!(
            s.reinforcement_count(PlayerId(2)),
            Err(RuleError::Eliminated(PlayerId(2)))
        );
    }

    #[test]
    fn redeploy_moves_units() {
        let mut s = GameState::from_position(
            tiny(),
            2,
            GameConfig::default(),
            &[PlayerId(0), PlayerId(0), PlayerId(1)],
            &[3, 1, 1],
            Phase::Redeploy,
            PlayerId(0),
        )
        .unwrap();
        let mv = MoveCandidate::Redeploy {
            from: A,
            to: B,
            count: 2,
        };
        assert!(s.legal_moves().contains(&mv));
        s.apply_move(&mv, &mut rng()).unwrap();
        assert_eq!(s.units(A), 1);
        assert_eq!(s.units(B), 3);
        // one redeploy per turn by default: P1's turn started
        assert_eq!(s.current_player(), PlayerId(1));
        assert_eq!(s.phase(), Phase::Reinforce);
    }

    #[test]
    fn redeploy_requires_owned_path() {
        let s = GameState::from_position(
            tiny(),
            2,
            GameConfig::default(),
            &[PlayerId(0), PlayerId(1), PlayerId(0)],
            &[3, 1, 1],
            Phase::Redeploy,
            PlayerId(0),
        )
        .unwrap();
        assert_eq!(s.legal_moves(), vec![MoveCandidate::Pass]);
        assert_eq!(
            s.check_move(&MoveCandidate::Redeploy {
                from: A,
                to: C,
                count: 2
            }),
            Err(RuleError::Unreachable { from: A, to: C })
        );
    }

    #[test]
    fn conquering_the_last_region_wins() {
        let mut s = GameState::from_position(
            tiny(),
            2,
            GameConfig::default(),
            &[PlayerId(0), PlayerId(1), PlayerId(0)],
            &[60, 1, 1],
            Phase::Attack,
            PlayerId(0),
        )
        .unwrap();
        let mv = MoveCandidate::Attack {
            from: A,
            to: B,
            committed: 59,
        };
        let mut r = rng();
        loop {
            let out = s.apply_move(&mv, &mut r);
            match out {
                Ok(Some(c)) if c.conquered => break,
                Ok(_) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(s.status(), Status::Won(PlayerId(0)));
        s.check_invariants().unwrap();
        assert_eq!(s.check_move(&MoveCandidate::Pass), Err(RuleError::GameOver));
    }

    #[test]
    fn illegal_moves_name_the_rule() {
        let s = GameState::from_position(
            tiny(),
            2,
            GameConfig::default(),
            &[PlayerId(0), PlayerId(1), PlayerId(0)],
            &[3, 1, 1],
            Phase::Attack,
            PlayerId(0),
        )
        .unwrap();
        assert_eq!(
            s.check_move(&MoveCandidate::Attack {
                from: C,
                to: B,
                committed: 1
            }),
            Err(RuleError::TooFewUnits(C))
        );
        assert_eq!(
            s.check_move(&MoveCandidate::Attack {
                from: A,
                to: B,
                committed: 3
            }),
            Err(RuleError::BadCommit {
                committed: 3,
                units: 3
            })
        );
        assert!(matches!(
            s.check_move(&MoveCandidate::Place { region: A }),
            Err(RuleError::WrongPhase { .. })
        ));
    }

    #[test]
    fn setup_validation() {
        assert_eq!(
            GameState::new(tiny(), 1, GameConfig::default()).unwrap_err(),
            SetupError::PlayerCount(1)
        );
        assert!(matches!(
            GameState::new(tiny(), 4, GameConfig::default()),
            Err(SetupError::TooFewRegions { .. })
        ));
        let mut cfg = GameConfig::default();
        cfg.initial_units = 1;
        assert!(matches!(
            GameState::new(tiny(), 2, cfg),
            Err(SetupError::TooFewUnits { .. })
        ));
    }

    #[test]
    fn commit_policy() {
        assert_eq!(CommitPolicy::AllButOne.committed(7), 6);
        assert_eq!(CommitPolicy::AtMost(3).committed(7), 3);
        assert_eq!(CommitPolicy::AtMost(3).committed(2), 1);
    }
}
