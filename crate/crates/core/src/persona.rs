//! Persona records, their five annotated features, and greedy selection of
//! a maximally diverse subset.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{read_jsonl, write_jsonl, IoError};

/// Largest subset size for which the exact objective fits in a `u128`.
pub const MAX_SELECT: usize = 2000;

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("duplicate persona id `{0}`")]
    DuplicateId(String),
    #[error("persona `{0}` has an empty description")]
    EmptyDescription(String),
    #[error("persona `{0}` has no feature ratings")]
    Unrated(String),
    #[error("{feature} = {value} is not on the rating grid")]
    OffGrid { feature: Feature, value: f64 },
    #[error("cannot select {k} personas from a corpus of {n}")]
    TooMany { k: usize, n: usize },
    #[error("subset size must be between 1 and {MAX_SELECT}, got {0}")]
    BadSize(usize),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub persona_id: String,
    pub description: String,
}

impl Persona {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            persona_id: id.into(),
            description: description.into(),
        }
    }
}

/// Checks ids are unique and descriptions non-empty.
pub fn validate_corpus(corpus: &[Persona]) -> Result<(), PersonaError> {
    let mut seen = HashSet::new();
    for p in corpus {
        if !seen.insert(p.persona_id.as_str()) {
            return Err(PersonaError::DuplicateId(p.persona_id.clone()));
        }
        if p.description.trim().is_empty() {
            return Err(PersonaError::EmptyDescription(p.persona_id.clone()));
        }
    }
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Persona>, PersonaError> {
    let corpus: Vec<Persona> = read_jsonl(path)?;
    validate_corpus(&corpus)?;
    Ok(corpus)
}

pub fn save_corpus(path: impl AsRef<Path>, corpus: &[Persona]) -> Result<(), PersonaError> {
    Ok(write_jsonl(path, corpus)?)
}

/// The bundled corpus of hand-written persona descriptions.
pub fn builtin_corpus() -> Vec<Persona> {
    crate::io::parse_jsonl(
        include_str!("../assets/personas.jsonl").as_bytes(),
        Path::new("personas.jsonl"),
    )
    .expect("bundled persona corpus parses")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    #[serde(rename = "strategicThinker")]
    StrategicThinker,
    #[serde(rename = "domainExpert")]
    DomainExpert,
    #[serde(rename = "perilSpecific")]
    PerilSpecific,
    #[serde(rename = "riskTaker")]
    RiskTaker,
    #[serde(rename = "doOrBe")]
    DoOrBe,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Self::StrategicThinker,
        Self::DomainExpert,
        Self::PerilSpecific,
        Self::RiskTaker,
        Self::DoOrBe,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Self::StrategicThinker => "strategicThinker",
            Self::DomainExpert => "domainExpert",
            Self::PerilSpecific => "perilSpecific",
            Self::RiskTaker => "riskTaker",
            Self::DoOrBe => "doOrBe",
        }
    }

    /// Allowed values in half units: steps of 0.5, except `doOrBe` which
    /// only takes -1, 0 and 1.
    fn on_grid(self, half: i32) -> bool {
        match self {
            Self::DoOrBe => matches!(half, -2 | 0 | 2),
            _ => (-2..=2).contains(&half),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Feature {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PersonaError::UnknownFeature(s.to_string()))
    }
}

/// Five ratings in `[-1, 1]`, stored as whole half-units so that every
/// later computation is exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRatings", into = "RawRatings")]
pub struct FeatureRatings {
    half: [i32; 5],
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawRatings {
    strategic_thinker: f64,
    domain_expert: f64,
    peril_specific: f64,
    risk_taker: f64,
    do_or_be: f64,
}

impl TryFrom<RawRatings> for FeatureRatings {
    type Error = PersonaError;

    fn try_from(r: RawRatings) -> Result<Self, Self::Error> {
        FeatureRatings::from_values([
            r.strategic_thinker,
            r.domain_expert,
            r.peril_specific,
            r.risk_taker,
            r.do_or_be,
        ])
    }
}

impl From<FeatureRatings> for RawRatings {
    fn from(r: FeatureRatings) -> Self {
        let v = r.values();
        RawRatings {
            strategic_thinker: v[0],
            domain_expert: v[1],
            peril_specific: v[2],
            risk_taker: v[3],
            do_or_be: v[4],
        }
    }
}

impl FeatureRatings {
    /// Values in [`Feature::ALL`] order.
    pub fn from_values(values: [f64; 5]) -> Result<Self, PersonaError> {
        let mut half = [0; 5];
        for (i, (f, v)) in Feature::ALL.iter().zip(values).enumerate() {
            let h = v * 2.0;
            if !h.is_finite() || h.fract() != 0.0 || !f.on_grid(h as i32) {
                return Err(PersonaError::OffGrid {
                    feature: *f,
                    value: v,
                });
            }
            half[i] = h as i32;
        }
        Ok(Self { half })
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.half[f as usize] as f64 / 2.0
    }

    pub fn values(&self) -> [f64; 5] {
        self.half.map(|h| h as f64 / 2.0)
    }

    pub fn half_units(&self) -> [i32; 5] {
        self.half
    }
}

/// A persona's id with its ratings, as stored in a ratings file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub persona_id: String,
    #[serde(flatten)]
    pub ratings: FeatureRatings,
}

pub fn load_ratings(path: impl AsRef<Path>) -> Result<HashMap<String, FeatureRatings>, PersonaError> {
    let records: Vec<RatingRecord> = read_jsonl(path)?;
    let mut out = HashMap::new();
    for r in records {
        if out.insert(r.persona_id.clone(), r.ratings).is_some() {
            return Err(PersonaError::DuplicateId(r.persona_id));
        }
    }
    Ok(out)
}

pub fn save_ratings(path: impl AsRef<Path>, records: &[RatingRecord]) -> Result<(), PersonaError> {
    Ok(write_jsonl(path, records)?)
}

/// Running sums for the subset objective.
///
/// With half-unit values `h`, the squared deviations of one feature sum to
/// `N / (4n)` where `N = n·Σh² − (Σh)²`, so the product over features is
/// `∏N / (4n)^5` and subsets of equal size compare by `∏N` alone.
#[derive(Clone, Copy, Debug, Default)]
struct Sums {
    n: i64,
    s1: [i64; 5],
    s2: [i64; 5],
}

impl Sums {
    fn add(&mut self, h: &[i32; 5]) {
        self.n += 1;
        for f in 0..5 {
            self.s1[f] += h[f] as i64;
            self.s2[f] += (h[f] * h[f]) as i64;
        }
    }

    /// `(∏N, ΣN)` of this subset with `h` added.
    fn key_with(&self, h: &[i32; 5]) -> (u128, u128) {
        let n = self.n + 1;
        let mut prod: u128 = 1;
        let mut sum: u128 = 0;
        for f in 0..5 {
            let s1 = self.s1[f] + h[f] as i64;
            let s2 = self.s2[f] + (h[f] * h[f]) as i64;
            let nf = (n * s2 - s1 * s1) as u128;
            prod *= nf;
            sum += nf;
        }
        (prod, sum)
    }

    fn key(&self) -> (u128, u128) {
        let mut prod: u128 = 1;
        let mut sum: u128 = 0;
        for f in 0..5 {
            let nf = (self.n * self.s2[f] - self.s1[f] * self.s1[f]) as u128;
            prod *= nf;
            sum += nf;
        }
        (prod, sum)
    }

    fn objective(&self) -> f64 {
        let (prod, _) = self.key();
        prod as f64 / ((4 * self.n) as f64).powi(5)
    }
}

fn lookup<'a>(
    ratings: &'a HashMap<String, FeatureRatings>,
    id: &str,
) -> Result<&'a FeatureRatings, PersonaError> {
    ratings
        .get(id)
        .ok_or_else(|| PersonaError::Unrated(id.to_string()))
}

/// Product over the five features of the sum of squared deviations from
/// the subset mean.
pub fn diversity_objective<S: AsRef<str>>(
    subset: &[S],
    ratings: &HashMap<String, FeatureRatings>,
) -> Result<f64, PersonaError> {
    if subset.is_empty() || subset.len() > MAX_SELECT {
        return Err(PersonaError::BadSize(subset.len()));
    }
    let mut sums = Sums::default();
    for id in subset {
        sums.add(&lookup(ratings, id.as_ref())?.half);
    }
    Ok(sums.objective())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Chosen ids in the order greedy added them.
    pub persona_ids: Vec<String>,
    pub objective: f64,
    /// The persona the winning greedy run started from.
    pub seed_persona: String,
}

/// Greedy diversity selection restarted from every persona.
///
/// Each run adds the persona that maximizes the objective, ties going to the
/// lowest persona id. While every candidate leaves the objective at zero the
/// sum of the per-feature terms is maximized instead. The best finished run
/// wins, ties going to the run seeded with the lowest id.
pub fn greedy_select(
    corpus: &[Persona],
    ratings: &HashMap<String, FeatureRatings>,
    k: usize,
) -> Result<Selection, PersonaError> {
    if k == 0 || k > MAX_SELECT {
        return Err(PersonaError::BadSize(k));
    }
    if k > corpus.len() {
        return Err(PersonaError::TooMany { k, n: corpus.len() });
    }
    validate_corpus(corpus)?;
    let mut rated: Vec<(&str, [i32; 5])> = corpus
        .iter()
        .map(|p| Ok((p.persona_id.as_str(), lookup(ratings, &p.persona_id)?.half)))
        .collect::<Result<_, PersonaError>>()?;
    // scanning in id order makes "first strict improvement" the lowest-id tie-break
    rated.sort_by(|a, b| a.0.cmp(b.0));
    let points: Vec<[i32; 5]> = rated.iter().map(|r| r.1).collect();

    let runs: Vec<(Vec<usize>, (u128, u128))> = (0..points.len())
        .into_par_iter()
        .map(|seed| grow(&points, seed, k))
        .collect();
    let (best, (picked, _)) = runs
        .into_iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, (Vec<usize>, (u128, u128)))>, (i, run)| match acc {
            Some((_, (_, key))) if key >= run.1 => acc,
            _ => Some((i, run)),
        })
        .expect("non-empty corpus");

    let mut sums = Sums::default();
    picked.iter().for_each(|&i| sums.add(&points[i]));
    Ok(Selection {
        persona_ids: picked.iter().map(|&i| rated[i].0.to_string()).collect(),
        objective: sums.objective(),
        seed_persona: rated[best].0.to_string(),
    })
}

fn grow(points: &[[i32; 5]], seed: usize, k: usize) -> (Vec<usize>, (u128, u128)) {
    let mut taken = vec![false; points.len()];
    let mut picked = vec![seed];
    taken[seed] = true;
    let mut sums = Sums::default();
    sums.add(&points[seed]);
    while picked.len() < k {
        let mut best: Option<(usize, (u128, u128))> = None;
        for (i, h) in points.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let key = sums.key_with(h);
            if best.is_none_or(|(_, b)| key > b) {
                best = Some((i, key));
            }
        }
        let (i, _) = best.expect("k <= corpus size");
        taken[i] = true;
        picked.push(i);
        sums.add(&points[i]);
    }
    (picked, sums.key())
}
