use crate::game::{GameState, MoveCandidate, PlayerId};
use crate::map::{RegionId, ZoneId};

use super::{HeuristicCode, HeuristicError, HeuristicPhase};

/// Facts about the position shared by every candidate of one decision.
///
/// Superlative players ("the player with the most regions", ...) are chosen
/// among the mover's remaining enemies; ties go to the lowest player id.
pub struct DecisionContext<'a> {
    pub state: &'a GameState,
    pub phase: HeuristicPhase,
    pub me: PlayerId,
    most_regions: Option<PlayerId>,
    least_regions: Option<PlayerId>,
    most_units: Option<PlayerId>,
    least_units: Option<PlayerId>,
    most_bonus: Option<PlayerId>,
    least_bonus: Option<PlayerId>,
    zone_owner: Vec<Option<PlayerId>>,
    largest_zone: ZoneId,
    smallest_zone: ZoneId,
    /// Region touches a region held by an enemy of the mover.
    enemy_adjacent: Vec<bool>,
    /// Region touches a zone held entirely by one enemy.
    enemy_zone_adjacent: Vec<bool>,
    /// Mover's territory components (attack phase only).
    components: Vec<usize>,
}

fn extreme_by(
    enemies: &[PlayerId],
    key: impl Fn(PlayerId) -> u32,
    most: bool,
) -> Option<PlayerId> {
    let mut best: Option<(PlayerId, u32)> = None;
    for &p in enemies {
        let k = key(p);
        let better = match best {
            None => true,
            Some((_, b)) => {
                if most {
                    k > b
                } else {
                    k < b
                }
            }
        };
        if better {
            best = Some((p, k));
        }
    }
    best.map(|(p, _)| p)
}

impl<'a> DecisionContext<'a> {
    pub fn new(state: &'a GameState) -> Self {
        let me = state.current_player();
        let phase = HeuristicPhase::of(state.phase());
        let map = state.map();
        let enemies: Vec<PlayerId> = state
            .players()
            .filter(|&p| p != me && !state.is_eliminated(p))
            .collect();

        let zone_owner: Vec<Option<PlayerId>> = (0..map.zones().len())
            .map(|z| state.zone_owner(ZoneId(z)))
            .collect();
        let bonus = |p: PlayerId| -> u32 {
            map.zones()
                .iter()
                .zip(&zone_owner)
                .filter(|(_, o)| **o == Some(p))
                .map(|(z, _)| z.bonus)
                .sum()
        };
        let regions = |p: PlayerId| state.region_count_of(p);
        let units = |p: PlayerId| state.unit_total_of(p);

        // lowest index wins ties because `extreme_by` keeps the first strict best
        let size = |z: &usize| map.zones()[*z].members.len();
        let zone_ids: Vec<usize> = (0..map.zones().len()).collect();
        let largest_zone = zone_ids
            .iter()
            .copied()
            .fold(0, |b, z| if size(&z) > size(&b) { z } else { b });
        let smallest_zone = zone_ids
            .iter()
            .copied()
            .fold(0, |b, z| if size(&z) < size(&b) { z } else { b });

        let is_enemy = |r: RegionId| matches!(state.owner(r), Some(o) if o != me);
        let enemy_adjacent = map
            .regions()
            .map(|r| map.neighbors(r).any(is_enemy))
            .collect();
        let enemy_zone_adjacent = map
            .regions()
            .map(|r| {
                map.neighbors(r)
                    .any(|n| matches!(zone_owner[map.zone_of(n).0], Some(o) if o != me))
            })
            .collect();
        let components = if phase == HeuristicPhase::Attack {
            state.owned_components(me)
        } else {
            Vec::new()
        };

        Self {
            state,
            phase,
            me,
            most_regions: extreme_by(&enemies, regions, true),
            least_regions: extreme_by(&enemies, regions, false),
            most_units: extreme_by(&enemies, units, true),
            least_units: extreme_by(&enemies, units, false),
            most_bonus: extreme_by(&enemies, bonus, true),
            least_bonus: extreme_by(&enemies, bonus, false),
            zone_owner,
            largest_zone: ZoneId(largest_zone),
            smallest_zone: ZoneId(smallest_zone),
            enemy_adjacent,
            enemy_zone_adjacent,
            components,
        }
    }

    fn superlative(&self, code: HeuristicCode) -> Option<PlayerId> {
        use HeuristicCode::*;
        match code {
            PTM | OBTM => self.most_regions,
            PTL | OBTL => self.least_regions,
            PUM | OBUM => self.most_units,
            PUL | OBUL => self.least_units,
            PCM | OBCM => self.most_bonus,
            PCL | OBCL => self.least_bonus,
            _ => None,
        }
    }

    fn touches_owner(&self, r: RegionId, p: Option<PlayerId>) -> bool {
        let Some(p) = p else { return false };
        self.state
            .map()
            .neighbors(r)
            .any(|n| self.state.owner(n) == Some(p))
    }

    fn count_touching(&self, r: RegionId, p: Option<PlayerId>) -> usize {
        let Some(p) = p else { return 0 };
        self.state
            .map()
            .neighbors(r)
            .filter(|&n| self.state.owner(n) == Some(p))
            .count()
    }

    fn touches_zone(&self, r: RegionId, z: ZoneId) -> bool {
        let map = self.state.map();
        map.neighbors(r).any(|n| map.zone_of(n) == z)
    }

    /// Best attack odds available from `r` if it held `available` movable
    /// units: the largest `available / defenders` over its enemy neighbours.
    fn best_invasion_ratio(&self, r: RegionId, available: u32) -> f64 {
        let state = self.state;
        state
            .map()
            .neighbors(r)
            .filter(|&n| matches!(state.owner(n), Some(o) if o != self.me))
            .map(|n| available as f64 / state.units(n) as f64)
            .fold(0.0, f64::max)
    }

    /// Truth of `code` for `mv`; codes are assumed to belong to `self.phase`.
    pub(crate) fn holds(&self, code: HeuristicCode, mv: &MoveCandidate) -> bool {
        use HeuristicCode::*;
        let state = self.state;
        let map = state.map();
        match (self.phase, *mv) {
            (_, MoveCandidate::Pass) => code == PASS,
            (HeuristicPhase::Deploy, MoveCandidate::Place { region: t }) => match code {
                PTM | PTL | PUM | PUL | PCM | PCL => self.touches_owner(t, self.superlative(code)),
                ETE => self.enemy_adjacent[t.0],
                ETN => !self.enemy_adjacent[t.0],
                EAC => map.on_zone_boundary(t),
                EACM => self.touches_zone(t, self.largest_zone),
                EACL => self.touches_zone(t, self.smallest_zone),
                EACO => self.enemy_zone_adjacent[t.0],
                _ => false,
            },
            (HeuristicPhase::Attack, MoveCandidate::Attack { from, to, .. }) => {
                let (uf, ut) = (state.units(from), state.units(to));
                match code {
                    PTM | PTL | PUM | PUL | PCM | PCL => {
                        let target = self.superlative(code);
                        target.is_some() && state.owner(to) == target
                    }
                    ONM => uf > ut,
                    ONL => uf < ut,
                    ON2 => uf >= 2 * ut,
                    ICD => map.zone_of(from) != map.zone_of(to),
                    ICS => map.zone_of(from) == map.zone_of(to),
                    ICOE => self.zone_owner[map.zone_of(to).0].is_some(),
                    L => map.neighbors(to).any(|n| {
                        n != from
                            && state.owner(n) == Some(self.me)
                            && self.components[n.0] != self.components[from.0]
                    }),
                    _ => false,
                }
            }
            (HeuristicPhase::Redeploy, MoveCandidate::Redeploy { from, to, count }) => {
                let (uf, ut) = (state.units(from), state.units(to));
                match code {
                    OBTM | OBTL | OBUM | OBUL | OBCM | OBCL => {
                        let target = self.superlative(code);
                        self.count_touching(to, target) > self.count_touching(from, target)
                    }
                    CNM => map.degree(to) > map.degree(from),
                    CNL => map.degree(to) < map.degree(from),
                    CB => map.on_zone_boundary(to) && !map.on_zone_boundary(from),
                    CA => self.enemy_adjacent[to.0] && !self.enemy_adjacent[from.0],
                    CAC => self.enemy_zone_adjacent[to.0] && !self.enemy_zone_adjacent[from.0],
                    M => ut > uf,
                    L => ut < uf,
                    // compare the moved stack's odds at the destination with
                    // what the source could manage before the move
                    SI => {
                        self.best_invasion_ratio(to, ut + count - 1)
                            > self.best_invasion_ratio(from, uf - 1)
                    }
                    _ => false,
                }
            }
            _ => false,
        }
    }
}

fn move_kind(mv: &MoveCandidate) -> &'static str {
    match mv {
        MoveCandidate::Place { .. } => "place",
        MoveCandidate::Attack { .. } => "attack",
        MoveCandidate::Redeploy { .. } => "redeploy",
        MoveCandidate::Pass => "pass",
    }
}

/// Evaluates one heuristic for one candidate of the current decision.
pub fn evaluate_predicate(
    code: HeuristicCode,
    state: &GameState,
    mv: &MoveCandidate,
) -> Result<bool, HeuristicError> {
    let phase = HeuristicPhase::of(state.phase());
    if !phase.has(code) {
        return Err(HeuristicError::PhaseMismatch { code, phase });
    }
    let fits = matches!(
        (phase, mv),
        (_, MoveCandidate::Pass)
            | (HeuristicPhase::Deploy, MoveCandidate::Place { .. })
            | (HeuristicPhase::Attack, MoveCandidate::Attack { .. })
            | (HeuristicPhase::Redeploy, MoveCandidate::Redeploy { .. })
    );
    if !fits {
        return Err(HeuristicError::MoveMismatch {
            move_kind: move_kind(mv),
            phase,
        });
    }
    Ok(DecisionContext::new(state).holds(code, mv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameConfig, Phase};
    use crate::map::MapGraph;
    use std::sync::Arc;
    use HeuristicCode::*;

    fn classic() -> Arc<MapGraph> {
        Arc::new(MapGraph::classic_world())
    }

    fn rid(map: &MapGraph, key: &str) -> RegionId {
        map.region_id(key).unwrap()
    }

    /// Player 0 owns `mine` (with the given units), player 1 owns the rest with 1 unit.
    fn position(map: &Arc<MapGraph>, mine: &[(&str, u32)], theirs: &[(&str, u32)], phase: Phase) -> GameState {
        let mut owners = vec![PlayerId(1); map.region_count()];
        let mut units = vec![1; map.region_count()];
        for (k, u) in mine {
            owners[rid(map, k).0] = PlayerId(0);
            units[rid(map, k).0] = *u;
        }
        for (k, u) in theirs {
            units[rid(map, k).0] = *u;
        }
        GameState::from_position(
            map.clone(),
            2,
            GameConfig::default(),
            &owners,
            &units,
            phase,
            PlayerId(0),
        )
        .unwrap()
    }

    fn attack(map: &MapGraph, from: &str, to: &str) -> MoveCandidate {
        MoveCandidate::Attack {
            from: rid(map, from),
            to: rid(map, to),
            committed: 1,
        }
    }

    #[test]
    fn on2_needs_double() {
        let map = classic();
        let s = position(&map, &[("brazil", 6)], &[("north_africa", 3)], Phase::Attack);
        let mv = attack(&map, "brazil", "north_africa");
        assert_eq!(evaluate_predicate(ON2, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(ONM, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(ONL, &s, &mv), Ok(false));
        let s = position(&map, &[("brazil", 5)], &[("north_africa", 3)], Phase::Attack);
        assert_eq!(evaluate_predicate(ON2, &s, &mv), Ok(false));
    }

    #[test]
    fn same_and_different_zone() {
        let map = classic();
        let s = position(&map, &[("brazil", 4)], &[], Phase::Attack);
        let same = attack(&map, "brazil", "peru");
        let cross = attack(&map, "brazil", "north_africa");
        assert_eq!(evaluate_predicate(ICS, &s, &same), Ok(true));
        assert_eq!(evaluate_predicate(ICD, &s, &same), Ok(false));
        assert_eq!(evaluate_predicate(ICS, &s, &cross), Ok(false));
        assert_eq!(evaluate_predicate(ICD, &s, &cross), Ok(true));
        // Africa belongs entirely to player 1, South America doesn't
        assert_eq!(evaluate_predicate(ICOE, &s, &cross), Ok(true));
        assert_eq!(evaluate_predicate(ICOE, &s, &same), Ok(false));
    }

    #[test]
    fn link_heuristic() {
        let map = classic();
        // two separate holdings: brazil and egypt; north africa joins them
        let s = position(&map, &[("brazil", 4), ("egypt", 1)], &[], Phase::Attack);
        assert_eq!(
            evaluate_predicate(L, &s, &attack(&map, "brazil", "north_africa")),
            Ok(true)
        );
        assert_eq!(
            evaluate_predicate(L, &s, &attack(&map, "brazil", "peru")),
            Ok(false)
        );
    }

    #[test]
    fn placement_predicates() {
        let map = classic();
        // player 0 holds all of Australia; placing in eastern australia touches no enemy
        let s = position(
            &map,
            &[
                ("indonesia", 1),
                ("new_guinea", 1),
                ("western_australia", 1),
                ("eastern_australia", 1),
            ],
            &[],
            Phase::Reinforce,
        );
        let inner = MoveCandidate::Place {
            region: rid(&map, "eastern_australia"),
        };
        let edge = MoveCandidate::Place {
            region: rid(&map, "indonesia"),
        };
        assert_eq!(evaluate_predicate(ETE, &s, &inner), Ok(false));
        assert_eq!(evaluate_predicate(ETN, &s, &inner), Ok(true));
        assert_eq!(evaluate_predicate(ETE, &s, &edge), Ok(true));
        assert_eq!(evaluate_predicate(EAC, &s, &edge), Ok(true));
        assert_eq!(evaluate_predicate(EAC, &s, &inner), Ok(false));
        // siam (Asia, largest zone) is next to indonesia
        assert_eq!(evaluate_predicate(EACM, &s, &edge), Ok(true));
        assert_eq!(evaluate_predicate(EACM, &s, &inner), Ok(false));
        // smallest zone is South America (first of the 4-region zones)
        assert_eq!(evaluate_predicate(EACL, &s, &inner), Ok(false));
        // Asia is fully enemy-owned
        assert_eq!(evaluate_predicate(EACO, &s, &edge), Ok(true));
        assert_eq!(evaluate_predicate(PTM, &s, &edge), Ok(true));
        assert_eq!(evaluate_predicate(PTM, &s, &inner), Ok(false));
    }

    #[test]
    fn superlatives_break_ties_by_lowest_id() {
        let map = Arc::new(MapGraph::tiny3());
        // P0 owns B; P1 and P2 own A and C with equal everything
        let s = GameState::from_position(
            map,
            3,
            GameConfig::default(),
            &[PlayerId(1), PlayerId(0), PlayerId(2)],
            &[1, 3, 1],
            Phase::Attack,
            PlayerId(0),
        )
        .unwrap();
        let to_a = MoveCandidate::Attack {
            from: RegionId(1),
            to: RegionId(0),
            committed: 2,
        };
        let to_c = MoveCandidate::Attack {
            from: RegionId(1),
            to: RegionId(2),
            committed: 2,
        };
        for code in [PTM, PTL, PUM, PUL, PCM, PCL] {
            assert_eq!(evaluate_predicate(code, &s, &to_a), Ok(true), "{code}");
            assert_eq!(evaluate_predicate(code, &s, &to_c), Ok(false), "{code}");
        }
    }

    #[test]
    fn redeploy_predicates() {
        let map = classic();
        // P0 holds South America; venezuela borders central america (enemy)
        let s = position(
            &map,
            &[("brazil", 5), ("peru", 1), ("argentina", 1), ("venezuela", 2)],
            &[("central_america", 1)],
            Phase::Redeploy,
        );
        // argentina -> brazil: brazil has more units, more neighbours, enemy contact
        let mv = MoveCandidate::Redeploy {
            from: rid(&map, "argentina"),
            to: rid(&map, "brazil"),
            count: 1,
        };
        assert_eq!(evaluate_predicate(M, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(L, &s, &mv), Ok(false));
        assert_eq!(evaluate_predicate(CNM, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(CNL, &s, &mv), Ok(false));
        assert_eq!(evaluate_predicate(CB, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(CA, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(CAC, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(SI, &s, &mv), Ok(true));
        assert_eq!(evaluate_predicate(OBTM, &s, &mv), Ok(true));
        let back = MoveCandidate::Redeploy {
            from: rid(&map, "brazil"),
            to: rid(&map, "argentina"),
            count: 4,
        };
        assert_eq!(evaluate_predicate(CA, &s, &back), Ok(false));
        assert_eq!(evaluate_predicate(SI, &s, &back), Ok(false));
        assert_eq!(evaluate_predicate(L, &s, &back), Ok(true));
    }

    #[test]
    fn mismatches_are_errors() {
        let map = classic();
        let s = position(&map, &[("brazil", 4)], &[], Phase::Attack);
        let mv = attack(&map, "brazil", "peru");
        assert!(matches!(
            evaluate_predicate(ETE, &s, &mv),
            Err(HeuristicError::PhaseMismatch { .. })
        ));
        let place = MoveCandidate::Place {
            region: rid(&map, "brazil"),
        };
        assert!(matches!(
            evaluate_predicate(PTM, &s, &place),
            Err(HeuristicError::MoveMismatch { .. })
        ));
    }
}
