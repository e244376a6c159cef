//! The heuristic catalog, per-persona weight profiles and the weighted-random
//! move picker built on them.
//!
//! A heuristic is a named predicate over `(state, candidate move)` scoped to one
//! of three decision phases. A profile assigns every heuristic a weight in
//! `[0, 100]`; a candidate's score is the sum of the weights of the heuristics
//! it satisfies, and moves are drawn with probability proportional to score.

mod predicates;
mod select;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Phase;

pub use predicates::{evaluate_predicate, DecisionContext};
pub use select::{score_move, select_move, HeuristicAgent};

pub const DEFAULT_WEIGHT: f64 = 5.0;
pub const MAX_WEIGHT: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicPhase {
    Deploy,
    Attack,
    Redeploy,
}

impl HeuristicPhase {
    pub const ALL: [HeuristicPhase; 3] = [Self::Deploy, Self::Attack, Self::Redeploy];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(phase: Phase) -> Self {
        match phase {
            Phase::Init | Phase::Reinforce => Self::Deploy,
            Phase::Attack => Self::Attack,
            Phase::Redeploy => Self::Redeploy,
        }
    }

    /// Codes available in this phase, in catalog order.
    pub fn codes(self) -> &'static [HeuristicCode] {
        use HeuristicCode::*;
        match self {
            Self::Deploy => &[PTM, PTL, PUM, PUL, PCM, PCL, ETE, ETN, EAC, EACM, EACL, EACO],
            Self::Attack => &[
                PTM, PTL, PUM, PUL, PCM, PCL, ONM, ONL, ON2, ICD, ICS, ICOE, L, PASS,
            ],
            Self::Redeploy => &[
                OBTM, OBTL, OBUM, OBUL, OBCM, OBCL, CNM, CNL, CB, CA, CAC, M, L, SI, PASS,
            ],
        }
    }

    pub fn position(self, code: HeuristicCode) -> Option<usize> {
        self.codes().iter().position(|c| *c == code)
    }

    pub fn has(self, code: HeuristicCode) -> bool {
        self.position(code).is_some()
    }
}

impl fmt::Display for HeuristicPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Deploy => "deploy",
            Self::Attack => "attack",
            Self::Redeploy => "redeploy",
        })
    }
}

impl FromStr for HeuristicPhase {
    type Err = HeuristicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "deploy" | "deployment" | "init" | "phase0" | "0" => Ok(Self::Deploy),
            "attack" | "phase1" | "1" => Ok(Self::Attack),
            "redeploy" | "redeployment" | "phase2" | "2" => Ok(Self::Redeploy),
            _ => Err(HeuristicError::UnknownPhase(s.to_string())),
        }
    }
}

#[allow(clippy::upper_case_acronyms)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HeuristicCode {
    PTM,
    PTL,
    PUM,
    PUL,
    PCM,
    PCL,
    ETE,
    ETN,
    EAC,
    EACM,
    EACL,
    EACO,
    ONM,
    ONL,
    ON2,
    ICD,
    ICS,
    ICOE,
    L,
    PASS,
    OBTM,
    OBTL,
    OBUM,
    OBUL,
    OBCM,
    OBCL,
    CNM,
    CNL,
    CB,
    CA,
    CAC,
    M,
    SI,
}

impl HeuristicCode {
    pub const ALL: [HeuristicCode; 33] = {
        use HeuristicCode::*;
        [
            PTM, PTL, PUM, PUL, PCM, PCL, ETE, ETN, EAC, EACM, EACL, EACO, ONM, ONL, ON2, ICD, ICS,
            ICOE, L, PASS, OBTM, OBTL, OBUM, OBUL, OBCM, OBCL, CNM, CNL, CB, CA, CAC, M, SI,
        ]
    };

    pub fn as_str(self) -> &'static str {
        use HeuristicCode::*;
        match self {
            PTM => "PTM",
            PTL => "PTL",
            PUM => "PUM",
            PUL => "PUL",
            PCM => "PCM",
            PCL => "PCL",
            ETE => "ETE",
            ETN => "ETN",
            EAC => "EAC",
            EACM => "EACM",
            EACL => "EACL",
            EACO => "EACO",
            ONM => "ONM",
            ONL => "ONL",
            ON2 => "ON2",
            ICD => "ICD",
            ICS => "ICS",
            ICOE => "ICOE",
            L => "L",
            PASS => "PASS",
            OBTM => "OBTM",
            OBTL => "OBTL",
            OBUM => "OBUM",
            OBUL => "OBUL",
            OBCM => "OBCM",
            OBCL => "OBCL",
            CNM => "CNM",
            CNL => "CNL",
            CB => "CB",
            CA => "CA",
            CAC => "CAC",
            M => "M",
            SI => "SI",
        }
    }
}

impl fmt::Display for HeuristicCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicCode {
    type Err = HeuristicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| HeuristicError::UnknownCode(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeuristicError {
    #[error("unknown heuristic code `{0}`")]
    UnknownCode(String),
    #[error("unknown phase `{0}`")]
    UnknownPhase(String),
    #[error("heuristic {code} does not exist in the {phase} phase")]
    PhaseMismatch {
        code: HeuristicCode,
        phase: HeuristicPhase,
    },
    #[error("a {move_kind} move cannot be judged in the {phase} phase")]
    MoveMismatch {
        move_kind: &'static str,
        phase: HeuristicPhase,
    },
    #[error("weight for {code} is not a finite number")]
    NonFinite { code: HeuristicCode },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Weights stated directly by the language model.
    DH,
    /// Weights derived from scored inventory answers.
    PI,
    #[serde(rename = "manual")]
    Manual,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DH => "DH",
            Self::PI => "PI",
            Self::Manual => "manual",
        })
    }
}

/// Per-phase heuristic weights for one player.
///
/// Every code of every phase always has a weight; unset ones hold
/// [`DEFAULT_WEIGHT`]. Weights are clamped into `[0, 100]` on the way in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile", into = "ProfileFile")]
pub struct HeuristicProfile {
    pub persona_id: String,
    pub provenance: Provenance,
    weights: [Vec<f64>; 3],
}

impl HeuristicProfile {
    pub fn new(persona_id: impl Into<String>, provenance: Provenance) -> Self {
        Self {
            persona_id: persona_id.into(),
            provenance,
            weights: HeuristicPhase::ALL.map(|p| vec![DEFAULT_WEIGHT; p.codes().len()]),
        }
    }

    pub fn weight(&self, phase: HeuristicPhase, code: HeuristicCode) -> f64 {
        phase
            .position(code)
            .map(|i| self.weights[phase.index()][i])
            .unwrap_or(DEFAULT_WEIGHT)
    }

    /// Weights of `phase` in catalog order.
    pub fn phase_weights(&self, phase: HeuristicPhase) -> &[f64] {
        &self.weights[phase.index()]
    }

    pub fn set(
        &mut self,
        phase: HeuristicPhase,
        code: HeuristicCode,
        weight: f64,
    ) -> Result<(), HeuristicError> {
        let i = phase
            .position(code)
            .ok_or(HeuristicError::PhaseMismatch { code, phase })?;
        if !weight.is_finite() {
            return Err(HeuristicError::NonFinite { code });
        }
        self.weights[phase.index()][i] = weight.clamp(0.0, MAX_WEIGHT);
        Ok(())
    }

    pub fn with(mut self, phase: HeuristicPhase, code: HeuristicCode, weight: f64) -> Self {
        self.set(phase, code, weight).expect("valid code for phase");
        self
    }

    /// Sets every weight of every phase (PASS included) to `weight`.
    pub fn fill(mut self, weight: f64) -> Self {
        let w = weight.clamp(0.0, MAX_WEIGHT);
        self.weights.iter_mut().flatten().for_each(|x| *x = w);
        self
    }

    /// Copies the weights of `phase` from `other`.
    pub fn merge_phase(&mut self, phase: HeuristicPhase, other: &HeuristicProfile) {
        self.weights[phase.index()] = other.weights[phase.index()].clone();
    }

    pub fn iter(&self) -> impl Iterator<Item = (HeuristicPhase, HeuristicCode, f64)> + '_ {
        HeuristicPhase::ALL.into_iter().flat_map(move |p| {
            p.codes()
                .iter()
                .zip(&self.weights[p.index()])
                .map(move |(c, w)| (p, *c, *w))
        })
    }

    pub fn mean_weight(&self) -> f64 {
        let (sum, n) = self
            .iter()
            .fold((0.0, 0usize), |(s, n), (_, _, w)| (s + w, n + 1));
        sum / n as f64
    }
}

/// Serialized form: `{persona_id, provenance, weights: {phase: {code: w}}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileFile {
    pub persona_id: String,
    pub provenance: Provenance,
    #[serde(default)]
    pub weights: BTreeMap<HeuristicPhase, BTreeMap<String, f64>>,
}

impl TryFrom<ProfileFile> for HeuristicProfile {
    type Error = HeuristicError;

    fn try_from(f: ProfileFile) -> Result<Self, Self::Error> {
        let mut p = HeuristicProfile::new(f.persona_id, f.provenance);
        for (phase, codes) in f.weights {
            for (code, w) in codes {
                p.set(phase, code.parse()?, w)?;
            }
        }
        Ok(p)
    }
}

impl From<HeuristicProfile> for ProfileFile {
    fn from(p: HeuristicProfile) -> Self {
        let mut weights = BTreeMap::new();
        for (phase, code, w) in p.iter() {
            weights
                .entry(phase)
                .or_insert_with(BTreeMap::new)
                .insert(code.as_str().to_string(), w);
        }
        ProfileFile {
            persona_id: p.persona_id,
            provenance: p.provenance,
            weights,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn catalog_sizes() {
        assert_eq!(HeuristicPhase::Deploy.codes().len(), 12);
        assert_eq!(HeuristicPhase::Attack.codes().len(), 14);
        assert_eq!(HeuristicPhase::Redeploy.codes().len(), 15);
        // every code lives in at least one phase
        for c in HeuristicCode::ALL {
            assert!(HeuristicPhase::ALL.iter().any(|p| p.has(c)), "{c}");
        }
    }

    #[test]
    fn defaults_and_clamping() {
        let mut p = HeuristicProfile::new("x", Provenance::Manual);
        assert_eq!(p.weight(HeuristicPhase::Attack, HeuristicCode::ON2), 5.0);
        p.set(HeuristicPhase::Attack, HeuristicCode::ON2, 150.0).unwrap();
        assert_eq!(p.weight(HeuristicPhase::Attack, HeuristicCode::ON2), 100.0);
        p.set(HeuristicPhase::Attack, HeuristicCode::ON2, -3.0).unwrap();
        assert_eq!(p.weight(HeuristicPhase::Attack, HeuristicCode::ON2), 0.0);
        assert_eq!(
            p.set(HeuristicPhase::Deploy, HeuristicCode::PASS, 1.0),
            Err(HeuristicError::PhaseMismatch {
                code: HeuristicCode::PASS,
                phase: HeuristicPhase::Deploy
            })
        );
    }

    #[test]
    fn missing_codes_default_when_loading() {
        let p: HeuristicProfile = serde_json::from_str(
            r#"{"persona_id":"p","provenance":"DH","weights":{"attack":{"PTM":80}}}"#,
        )
        .unwrap();
        assert_eq!(p.weight(HeuristicPhase::Attack, HeuristicCode::PTM), 80.0);
        assert_eq!(p.weight(HeuristicPhase::Deploy, HeuristicCode::PTM), 5.0);
        let bad = serde_json::from_str::<HeuristicProfile>(
            r#"{"persona_id":"p","provenance":"DH","weights":{"deploy":{"ON2":1}}}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn code_parsing() {
        assert_eq!("on2".parse::<HeuristicCode>(), Ok(HeuristicCode::ON2));
        assert!("XYZ".parse::<HeuristicCode>().is_err());
        assert_eq!("phase2".parse::<HeuristicPhase>(), Ok(HeuristicPhase::Redeploy));
    }

    proptest! {
        #[test]
        fn profile_file_round_trips(ws in proptest::collection::vec(0.0f64..=100.0, 41)) {
            let mut p = HeuristicProfile::new("persona-7", Provenance::PI);
            let mut it = ws.iter();
            for phase in HeuristicPhase::ALL {
                for &code in phase.codes() {
                    p.set(phase, code, *it.next().unwrap()).unwrap();
                }
            }
            let text = serde_json::to_string(&p).unwrap();
            let back: HeuristicProfile = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
