//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use peril::game::{GameConfig, GameState, MoveCandidate, PlayerId, Status};
use peril::map::{LinkKind, LinkSpec, MapGraph, MapSpec, RegionId, RegionSpec, ZoneSpec};
use peril::persona::FeatureRatings;
use peril::tournament::Rating;

// ---------------------------------------------------------------- TrueSkill

/// Winner and loser after one decisive game, from the mean and variance of
/// the performance difference truncated to `d > 0`, both integrated with
/// composite Simpson's rule over the untruncated density.
pub fn trueskill_quadrature(w: Rating, l: Rating, beta: f64, tau: f64) -> (Rating, Rating) {
    let vw = w.sigma * w.sigma + tau * tau;
    let vl = l.sigma * l.sigma + tau * tau;
    let c2 = 2.0 * beta * beta + vw + vl;
    let c = c2.sqrt();
    let m = w.mu - l.mu;

    let lo = (m - 14.0 * c).max(0.0);
    let hi = m.max(0.0) + 14.0 * c;
    let steps = 400_000usize;
    let h = (hi - lo) / steps as f64;
    let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for i in 0..=steps {
        let d = lo + i as f64 * h;
        let k = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let dens = (-(d - m) * (d - m) / (2.0 * c2)).exp();
        z += k * dens;
        s1 += k * dens * d;
        s2 += k * dens * d * d;
    }
    let mean = s1 / z;
    let var = s2 / z - mean * mean;

    let gain = mean - m;
    // shrinkage of the difference's variance, split by each side's share
    let shrink = 1.0 - var / c2;
    let w_new = Rating::new(w.mu + vw / c2 * gain, (vw * (1.0 - vw / c2 * shrink)).sqrt());
    let l_new = Rating::new(l.mu - vl / c2 * gain, (vl * (1.0 - vl / c2 * shrink)).sqrt());
    (w_new, l_new)
}

// ----------------------------------------------------------- persona subsets

/// Product over features of the sum of squared deviations, exactly.
pub fn objective_exact(members: &[[f64; 5]]) -> BigRational {
    let n = BigRational::from_integer(BigInt::from(members.len()));
    let mut prod = BigRational::from_integer(BigInt::from(1));
    for f in 0..5 {
        let vals: Vec<BigRational> = members
            .iter()
            .map(|m| BigRational::from_float(m[f]).expect("finite"))
            .collect();
        let mean = vals.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
        let ss = vals
            .iter()
            .map(|v| (v - &mean) * (v - &mean))
            .fold(BigRational::zero(), |a, b| a + b);
        prod *= ss;
    }
    prod
}

/// Nearest double to an exact rational whose parts fit in 53 bits.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let n = r.numer().to_f64().unwrap();
    let d = r.denom().to_f64().unwrap();
    assert!(n.abs() < 9.0e15 && d < 9.0e15, "parts exceed exact double range");
    n / d
}

pub fn random_ratings(rng: &mut ChaCha8Rng) -> FeatureRatings {
    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut v = [0.0; 5];
    for x in &mut v[..4] {
        *x = grid[rng.random_range(0..grid.len())];
    }
    // doOrBe has no half steps
    v[4] = [-1.0, 0.0, 1.0][rng.random_range(0..3)];
    FeatureRatings::from_values(v).unwrap()
}

/// Every `k`-subset of `0..n`, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

// ------------------------------------------------------------------ Spearman

/// Ranks by counting: `1 + #smaller + (#equal - 1) / 2`, exact in halves.
pub fn naive_ranks(x: &[f64]) -> Vec<BigRational> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|u| *u < v).count() as i64;
            let eq = x.iter().filter(|u| *u == v).count() as i64;
            BigRational::new(BigInt::from(2 * less + eq + 1), BigInt::from(2))
        })
        .collect()
}

/// Pearson correlation of the naive ranks, exact up to the final sqrt.
pub fn naive_rho(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (naive_ranks(x), naive_ranks(y));
    let n = BigRational::from_integer(BigInt::from(x.len()));
    let mx = rx.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let my = ry.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let mut sxy = BigRational::zero();
    let mut sxx = BigRational::zero();
    let mut syy = BigRational::zero();
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - &mx) * (b - &my);
        sxx += (a - &mx) * (a - &mx);
        syy += (b - &my) * (b - &my);
    }
    let num = sxy.to_f64().unwrap();
    num / (sxx.to_f64().unwrap() * syy.to_f64().unwrap()).sqrt()
}

/// Lexicographic permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
        out.push(p.clone());
    }
}

/// Two-sided permutation p-value: the share of reorderings of `y` whose
/// naive rho is at least as far from zero as the observed one.
pub fn naive_perm_p(x: &[f64], y: &[f64]) -> f64 {
    let obs = naive_rho(x, y).abs();
    let perms = permutations(y.len());
    let hits = perms
        .iter()
        .filter(|p| {
            let yp: Vec<f64> = p.iter().map(|&i| y[i]).collect();
            naive_rho(x, &yp).abs() >= obs - 1e-12
        })
        .count();
    hits as f64 / perms.len() as f64
}

// --------------------------------------------------------------------- games

/// A random connected map with `n` regions in up to three zones.
pub fn random_map(rng: &mut ChaCha8Rng, n: usize) -> MapGraph {
    let regions: Vec<RegionSpec> = (0..n)
        .map(|i| RegionSpec {
            id: format!("R{i}"),
            name: format!("Region {i}"),
        })
        .collect();
    let mut edges = HashSet::new();
    for i in 1..n {
        edges.insert((rng.random_range(0..i), i));
    }
    for _ in 0..rng.random_range(0..n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let zones_n = rng.random_range(1..=3.min(n));
    let mut members: Vec<Vec<String>> = vec![Vec::new(); zones_n];
    for i in 0..n {
        let z = if i < zones_n { i } else { rng.random_range(0..zones_n) };
        members[z].push(format!("R{i}"));
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort();
    MapGraph::from_spec(MapSpec {
        name: format!("random-{n}"),
        mission: "world_domination".into(),
        regions,
        zones: members
            .into_iter()
            .enumerate()
            .map(|(z, regions)| ZoneSpec {
                id: format!("Z{z}"),
                name: format!("Zone {z}"),
                bonus: rng.random_range(0..4),
                regions,
            })
            .collect(),
        adjacency: edges
            .into_iter()
            .map(|(a, b)| LinkSpec {
                a: format!("R{a}"),
                b: format!("R{b}"),
                kind: LinkKind::Land,
            })
            .collect(),
    })
    .expect("generated map is valid")
}

/// Breadth-first reachability through regions owned by `p`.
pub fn owned_path(state: &GameState, p: PlayerId, from: RegionId, to: RegionId) -> bool {
    let map = state.map();
    let mut seen = vec![false; map.region_count()];
    let mut queue = VecDeque::from([from]);
    seen[from.0] = true;
    while let Some(r) = queue.pop_front() {
        if r == to {
            return true;
        }
        for nb in map.neighbors(r) {
            if !seen[nb.0] && state.owner(nb) == Some(p) {
                seen[nb.0] = true;
                queue.push_back(nb);
            }
        }
    }
    false
}

/// Checks one transition of a game against the rules. Returns a description
/// of the first violation found.
pub fn check_step(before: &GameState, mv: &MoveCandidate, after: &GameState) -> Result<(), String> {
    after.check_invariants()?;
    let me = before.current_player();
    let map = before.map();
    match *mv {
        MoveCandidate::Place { region } => {
            if before.owner(region).is_some_and(|o| o != me) {
                return Err(format!("placed on enemy region {region:?}"));
            }
            if after.units(region) != before.units(region) + 1 {
                return Err("placement did not add exactly one unit".into());
            }
            if after.total_units_on_board() != before.total_units_on_board() + 1 {
                return Err("placement changed other regions".into());
            }
        }
        MoveCandidate::Attack { from, to, committed } => {
            if !map.adjacent(from, to) {
                return Err(format!("attack between non-adjacent {from:?} and {to:?}"));
            }
            if before.owner(from) != Some(me) || before.owner(to).is_none_or(|o| o == me) {
                return Err("attack not from own region into an enemy one".into());
            }
            if committed == 0 || committed >= before.units(from) {
                return Err("attack left no unit behind".into());
            }
            if after.total_units_on_board() > before.total_units_on_board() {
                return Err("attack created units".into());
            }
            for r in map.regions() {
                if r != from && r != to && (after.units(r), after.owner(r)) != (before.units(r), before.owner(r)) {
                    return Err(format!("attack changed bystander {r:?}"));
                }
            }
        }
        MoveCandidate::Redeploy { from, to, count } => {
            if before.owner(from) != Some(me) || before.owner(to) != Some(me) {
                return Err("redeploy outside own regions".into());
            }
            if !owned_path(before, me, from, to) {
                return Err(format!("redeploy {from:?}->{to:?} without an owned path"));
            }
            if count == 0 || count >= before.units(from) {
                return Err("redeploy emptied its source".into());
            }
            if after.total_units_on_board() != before.total_units_on_board() {
                return Err("redeploy changed the unit total".into());
            }
        }
        MoveCandidate::Pass => {
            if after.total_units_on_board() != before.total_units_on_board() {
                return Err("pass changed the board".into());
            }
        }
    }
    if let Status::Won(w) = after.status() {
        if after.region_count_of(w) as usize != map.region_count() {
            return Err("winner does not own every region".into());
        }
    }
    Ok(())
}

/// Plays a game of uniformly random legal moves, checking every step. Now
/// and then a random move is also offered; if the engine accepts it, it must
/// obey the same rules.
pub fn random_checked_game(map: Arc<MapGraph>, players: usize, seed: u64) -> Result<(Status, u64), String> {
    let config = GameConfig {
        turn_limit: 80,
        initial_units: 4 * map.region_count() as u32,
        ..GameConfig::default()
    };
    let mut state = GameState::new(map.clone(), players, config).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = 0u64;
    state.check_invariants()?;
    while state.status() == Status::Ongoing {
        let legal = state.legal_moves();
        if legal.is_empty() {
            state.auto_advance();
            state.check_invariants()?;
            continue;
        }
        if rng.random_ratio(1, 8) {
            let probe = random_move(&state, &mut rng);
            if state.check_move(&probe).is_ok() {
                let mut trial = state.clone();
                let mut trial_rng = rng.clone();
                trial
                    .apply_move(&probe, &mut trial_rng)
                    .map_err(|e| format!("checked move refused: {e}"))?;
                check_step(&state, &probe, &trial).map_err(|e| format!("accepted {probe:?}: {e}"))?;
            }
        }
        let mv = legal[rng.random_range(0..legal.len())];
        let before = state.clone();
        state.apply_move(&mv, &mut rng).map_err(|e| format!("legal move refused: {e}"))?;
        check_step(&before, &mv, &state)?;
        steps += 1;
    }
    Ok((state.status(), steps))
}

fn random_move(state: &GameState, rng: &mut ChaCha8Rng) -> MoveCandidate {
    let n = state.map().region_count();
    let r = |rng: &mut ChaCha8Rng| RegionId(rng.random_range(0..n));
    match rng.random_range(0..4) {
        0 => MoveCandidate::Place { region: r(rng) },
        1 => MoveCandidate::Attack {
            from: r(rng),
            to: r(rng),
            committed: rng.random_range(0..6),
        },
        2 => MoveCandidate::Redeploy {
            from: r(rng),
            to: r(rng),
            count: rng.random_range(0..6),
        },
        _ => MoveCandidate::Pass,
    }
}
