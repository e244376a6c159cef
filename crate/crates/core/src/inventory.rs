//! Questionnaire items tied to heuristics, scoring of graded answers into
//! weights, and parsing of directly stated weights.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::{
    HeuristicCode, HeuristicError, HeuristicPhase, HeuristicProfile, Provenance, DEFAULT_WEIGHT,
    MAX_WEIGHT,
};
use crate::io::{json_blocks, parse_jsonl, read_jsonl, write_jsonl, IoError};

pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("duplicate item `{0}`")]
    DuplicateItem(String),
    #[error("item `{item}`: {code} is both positive and negative in the {phase} phase")]
    Contradiction {
        item: String,
        phase: HeuristicPhase,
        code: HeuristicCode,
    },
    #[error("item `{item}`: {source}")]
    BadMapping {
        item: String,
        source: HeuristicError,
    },
    #[error("response {0} is not one of -2, -1, +1, +2")]
    OffGrid(i64),
    #[error("ratio {0} is outside [-1, 1]")]
    RatioOutOfRange(f64),
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("no heuristic weights found in response: {raw:?}")]
    ParseFailure { raw: String },
    #[error("no answer between 0 and 3 found in response: {raw:?}")]
    AnswerParseFailure { raw: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    #[serde(default)]
    pub positive: BTreeSet<HeuristicCode>,
    #[serde(default)]
    pub negative: BTreeSet<HeuristicCode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryItem {
    pub item_id: String,
    pub statement: String,
    #[serde(default)]
    pub mappings: BTreeMap<HeuristicPhase, Mapping>,
}

impl InventoryItem {
    fn validate(&self) -> Result<(), InventoryError> {
        for (phase, m) in &self.mappings {
            for code in m.positive.iter().chain(&m.negative) {
                if !phase.has(*code) {
                    return Err(InventoryError::BadMapping {
                        item: self.item_id.clone(),
                        source: HeuristicError::PhaseMismatch {
                            code: *code,
                            phase: *phase,
                        },
                    });
                }
            }
            if let Some(code) = m.positive.intersection(&m.negative).next() {
                return Err(InventoryError::Contradiction {
                    item: self.item_id.clone(),
                    phase: *phase,
                    code: *code,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Inventory {
    items: Vec<InventoryItem>,
    index: HashMap<String, usize>,
}

impl Inventory {
    pub fn new(items: Vec<InventoryItem>) -> Result<Self, InventoryError> {
        let mut index = HashMap::new();
        for (i, item) in items.iter().enumerate() {
            item.validate()?;
            if index.insert(item.item_id.clone(), i).is_some() {
                return Err(InventoryError::DuplicateItem(item.item_id.clone()));
            }
        }
        Ok(Self { items, index })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InventoryError> {
        Self::new(read_jsonl(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InventoryError> {
        Ok(write_jsonl(path, &self.items)?)
    }

    /// The thirty-item inventory shipped with the crate.
    pub fn starter() -> Self {
        let items = parse_jsonl(
            include_str!("../assets/starter_inventory.jsonl").as_bytes(),
            Path::new("starter_inventory.jsonl"),
        )
        .expect("bundled inventory parses");
        Self::new(items).expect("bundled inventory is valid")
    }

    pub fn items(&self) -> &[InventoryItem] {
        &self.items
    }

    pub fn item(&self, id: &str) -> Option<&InventoryItem> {
        self.index.get(id).map(|&i| &self.items[i])
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Same statements with the mappings dealt out to items at random, each
    /// one also flipped (positive and negative sets swapped) on a coin toss.
    ///
    /// Answers then feed heuristics unrelated to what was asked, which makes
    /// this a control for whether the item-to-heuristic link carries signal.
    /// The flip matters: a plain permutation keeps every mapping's
    /// orientation, so a persona that agrees with most statements still
    /// raises most positive sets.
    pub fn shuffled_mappings(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut maps: Vec<_> = self.items.iter().map(|i| i.mappings.clone()).collect();
        maps.shuffle(&mut rng);
        let items = self
            .items
            .iter()
            .zip(maps)
            .map(|(item, mut mappings)| {
                if rng.random_bool(0.5) {
                    for m in mappings.values_mut() {
                        std::mem::swap(&mut m.positive, &mut m.negative);
                    }
                }
                InventoryItem {
                    mappings,
                    ..item.clone()
                }
            })
            .collect();
        Self::new(items).expect("shuffling keeps mappings valid")
    }
}

/// One graded answer: -2, -1, +1 or +2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Response(i8);

impl Response {
    pub fn value(self) -> i64 {
        self.0 as i64
    }

    /// Maps an answer on the 0 to 3 scale onto the four-point grid.
    pub fn from_scale(raw: u8) -> Option<Self> {
        match raw {
            0 => Some(Self(-2)),
            1 => Some(Self(-1)),
            2 => Some(Self(1)),
            3 => Some(Self(2)),
            _ => None,
        }
    }

    /// Reads the first standalone digit 0-3 in a model reply.
    pub fn parse_answer(raw: &str) -> Result<Self, InventoryError> {
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| Regex::new(r"(?:^|[^0-9.\-])([0-3])(?:$|[^0-9.]|\.(?:$|[^0-9]))").unwrap());
        re.captures(raw)
            .and_then(|c| c[1].parse().ok())
            .and_then(Self::from_scale)
            .ok_or_else(|| InventoryError::AnswerParseFailure {
                raw: raw.to_string(),
            })
    }
}

impl TryFrom<i64> for Response {
    type Error = InventoryError;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            -2 | -1 | 1 | 2 => Ok(Self(v as i8)),
            _ => Err(InventoryError::OffGrid(v)),
        }
    }
}

impl From<Response> for i64 {
    fn from(r: Response) -> Self {
        r.value()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSheet {
    pub persona_id: String,
    pub answers: BTreeMap<String, Response>,
}

impl ResponseSheet {
    pub fn new(persona_id: impl Into<String>) -> Self {
        Self {
            persona_id: persona_id.into(),
            answers: BTreeMap::new(),
        }
    }

    pub fn answer(mut self, item: impl Into<String>, value: i64) -> Result<Self, InventoryError> {
        self.answers.insert(item.into(), Response::try_from(value)?);
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Points {
    pub points: i64,
    pub max_points: i64,
}

impl Points {
    /// `points / max_points`, or `None` when no answered item touched the code.
    pub fn ratio(self) -> Option<f64> {
        (self.max_points > 0).then(|| self.points as f64 / self.max_points as f64)
    }
}

/// Points per heuristic, laid out like the phase catalogs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeuristicPoints {
    table: [Vec<Points>; 3],
}

impl Default for HeuristicPoints {
    fn default() -> Self {
        Self {
            table: HeuristicPhase::ALL.map(|p| vec![Points::default(); p.codes().len()]),
        }
    }
}

impl HeuristicPoints {
    pub fn get(&self, phase: HeuristicPhase, code: HeuristicCode) -> Points {
        phase
            .position(code)
            .map(|i| self.table[phase.index()][i])
            .unwrap_or_default()
    }

    fn slot(&mut self, phase: HeuristicPhase, code: HeuristicCode) -> &mut Points {
        let i = phase.position(code).expect("validated mapping");
        &mut self.table[phase.index()][i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (HeuristicPhase, HeuristicCode, Points)> + '_ {
        HeuristicPhase::ALL.into_iter().flat_map(move |p| {
            p.codes()
                .iter()
                .zip(&self.table[p.index()])
                .map(move |(c, pts)| (p, *c, *pts))
        })
    }
}

/// Adds each answer to the item's positive codes and subtracts it from the
/// negative ones. Every answered item contributes 2 to the maximum of each
/// code it touches.
pub fn score_points(
    inventory: &Inventory,
    sheet: &ResponseSheet,
) -> Result<HeuristicPoints, InventoryError> {
    let mut pts = HeuristicPoints::default();
    for (item_id, resp) in &sheet.answers {
        let item = inventory
            .item(item_id)
            .ok_or_else(|| InventoryError::UnknownItem(item_id.clone()))?;
        let v = resp.value();
        for (phase, m) in &item.mappings {
            for (codes, sign) in [(&m.positive, 1), (&m.negative, -1)] {
                for code in codes {
                    let slot = pts.slot(*phase, *code);
                    slot.points += sign * v;
                    slot.max_points += 2;
                }
            }
        }
    }
    Ok(pts)
}

/// Turns a point ratio into a weight: ratios at or below zero land in
/// `[0, 5]` scaled by `λ/5`, positive ratios rise towards 100 at `λ·95` per
/// unit. Both branches give 5 at zero.
pub fn weight_transform(r: f64, lambda: f64) -> Result<f64, InventoryError> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(InventoryError::RatioOutOfRange(r));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(InventoryError::BadLambda(lambda));
    }
    Ok(if r <= 0.0 {
        (lambda * (r / 5.0) + 5.0).max(0.0)
    } else {
        (lambda * (95.0 * r) + 5.0).min(MAX_WEIGHT)
    })
}

pub fn build_profile_pi(
    inventory: &Inventory,
    sheet: &ResponseSheet,
    lambda: f64,
) -> Result<HeuristicProfile, InventoryError> {
    let pts = score_points(inventory, sheet)?;
    let mut profile = HeuristicProfile::new(sheet.persona_id.clone(), Provenance::PI);
    for (phase, code, p) in pts.iter() {
        let w = match p.ratio() {
            Some(r) => weight_transform(r, lambda)?,
            None => DEFAULT_WEIGHT,
        };
        profile.set(phase, code, w).expect("catalog code");
    }
    Ok(profile)
}

fn code_pairs(phase: HeuristicPhase, map: &serde_json::Map<String, serde_json::Value>) -> Vec<(HeuristicCode, f64)> {
    map.iter()
        .filter_map(|(k, v)| {
            let code: HeuristicCode = k.parse().ok()?;
            let w = match v {
                serde_json::Value::Number(n) => n.as_f64()?,
                serde_json::Value::String(s) => s.trim().parse().ok()?,
                _ => return None,
            };
            (phase.has(code) && w.is_finite()).then_some((code, w))
        })
        .collect()
}

/// Extracts directly stated weights for one phase from a model reply.
///
/// The first JSON object holding at least one known code of `phase` wins;
/// failing that, `CODE: number` pairs anywhere in the text are used. Values
/// are clamped into `[0, 100]` and unmentioned codes stay at the default.
/// Only `phase` is filled in; other phases keep their defaults.
pub fn parse_dh_response(
    raw: &str,
    phase: HeuristicPhase,
    persona_id: &str,
) -> Result<HeuristicProfile, InventoryError> {
    let mut pairs = Vec::new();
    for obj in json_blocks(raw) {
        if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(obj) {
            pairs = code_pairs(phase, &map);
            if !pairs.is_empty() {
                break;
            }
        }
    }
    if pairs.is_empty() {
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| {
            Regex::new(r#"(?i)\b([A-Z][A-Z0-9]{0,3})\b["'*]*\s*[:=]\s*["'*]*(-?\d+(?:\.\d+)?)"#).unwrap()
        });
        pairs = re
            .captures_iter(raw)
            .filter_map(|c| {
                let code: HeuristicCode = c[1].parse().ok()?;
                let w: f64 = c[2].parse().ok()?;
                phase.has(code).then_some((code, w))
            })
            .collect();
    }
    if pairs.is_empty() {
        return Err(InventoryError::ParseFailure {
            raw: raw.to_string(),
        });
    }
    let mut profile = HeuristicProfile::new(persona_id, Provenance::DH);
    for (code, w) in pairs {
        profile.set(phase, code, w).expect("filtered to phase codes");
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starter_covers_every_code_twice() {
        let inv = Inventory::starter();
        assert_eq!(inv.len(), 30);
        let mut count: HashMap<(HeuristicPhase, HeuristicCode), usize> = HashMap::new();
        for item in inv.items() {
            for (phase, m) in &item.mappings {
                for c in m.positive.iter().chain(&m.negative) {
                    *count.entry((*phase, *c)).or_default() += 1;
                }
            }
        }
        for phase in HeuristicPhase::ALL {
            for c in phase.codes() {
                assert!(count.get(&(phase, *c)).copied().unwrap_or(0) >= 2, "{phase} {c}");
            }
        }
    }

    #[test]
    fn answer_scale() {
        assert_eq!(Response::parse_answer("3").unwrap().value(), 2);
        assert_eq!(Response::parse_answer("My answer: 0.").unwrap().value(), -2);
        assert_eq!(Response::parse_answer("I'd say 2 - mostly true").unwrap().value(), 1);
        assert!(Response::parse_answer("7").is_err());
        assert!(Response::parse_answer("none").is_err());
        assert!(Response::try_from(0).is_err());
    }

    #[test]
    fn dh_parsing() {
        let p = parse_dh_response(
            "Sure! ```json\n{\"PTM\": 80, \"ETE\": 150, \"XYZ\": 3}\n```",
            HeuristicPhase::Deploy,
            "p",
        )
        .unwrap();
        assert_eq!(p.weight(HeuristicPhase::Deploy, HeuristicCode::PTM), 80.0);
        assert_eq!(p.weight(HeuristicPhase::Deploy, HeuristicCode::ETE), 100.0);
        assert_eq!(p.weight(HeuristicPhase::Deploy, HeuristicCode::PTL), 5.0);
        assert_eq!(p.provenance, Provenance::DH);

        let p = parse_dh_response("ON2: 60\nPASS = 0\n", HeuristicPhase::Attack, "p").unwrap();
        assert_eq!(p.weight(HeuristicPhase::Attack, HeuristicCode::ON2), 60.0);
        assert_eq!(p.weight(HeuristicPhase::Attack, HeuristicCode::PASS), 0.0);

        assert!(matches!(
            parse_dh_response("", HeuristicPhase::Attack, "p"),
            Err(InventoryError::ParseFailure { .. })
        ));
        // codes of another phase don't count
        assert!(parse_dh_response("{\"SI\": 40}", HeuristicPhase::Deploy, "p").is_err());
    }

    #[test]
    fn contradictory_items_are_rejected() {
        let item = InventoryItem {
            item_id: "x".into(),
            statement: "s".into(),
            mappings: BTreeMap::from([(
                HeuristicPhase::Attack,
                Mapping {
                    positive: [HeuristicCode::ONM].into(),
                    negative: [HeuristicCode::ONM].into(),
                },
            )]),
        };
        assert!(matches!(
            Inventory::new(vec![item.clone()]),
            Err(InventoryError::Contradiction { .. })
        ));
        let mut wrong = item;
        wrong.mappings = BTreeMap::from([(
            HeuristicPhase::Deploy,
            Mapping {
                positive: [HeuristicCode::SI].into(),
                negative: BTreeSet::new(),
            },
        )]);
        assert!(Inventory::new(vec![wrong]).is_err());
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let inv = Inventory::starter();
        let a = inv.shuffled_mappings(3);
        assert_eq!(a, inv.shuffled_mappings(3));
        assert_ne!(a, inv);
        // up to orientation, the same mappings are handed out
        let canon = |m: &BTreeMap<HeuristicPhase, Mapping>| {
            let mut v: Vec<String> = m
                .iter()
                .map(|(p, m)| {
                    let (x, y) = (format!("{:?}", m.positive), format!("{:?}", m.negative));
                    format!("{p:?}{:?}", if x <= y { (x, y) } else { (y, x) })
                })
                .collect();
            v.sort();
            v
        };
        let mut before: Vec<_> = inv.items().iter().map(|i| canon(&i.mappings)).collect();
        let mut after: Vec<_> = a.items().iter().map(|i| canon(&i.mappings)).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
        let flipped = (0..20)
            .map(|s| inv.shuffled_mappings(s))
            .flat_map(|x| x.items.into_iter())
            .filter(|i| i.mappings.values().any(|m| m.positive.is_empty() && !m.negative.is_empty()))
            .count();
        assert!(flipped > 0);
    }
}
