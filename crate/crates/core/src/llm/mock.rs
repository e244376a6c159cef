//! A deterministic stand-in for a model.
//!
//! Replies are a function of the prompt text only. Hash noise makes distinct
//! personas answer differently, while keyword cues in the persona (and in
//! questionnaire statements) tilt the answers the way a model plausibly
//! would: strategic, military-minded personas rate themselves as strategic
//! and agree with assertive statements, hesitant ones lean the other way.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{Backend, LlmError, Request, TemplateId};
use crate::heuristics::{HeuristicCode, HeuristicPhase};

const STRATEGIC: &[&str] = &[
    "strateg", "military", "general", "officer", "chess", "tactic", "war", "command", "intelligence",
    "analyst", "planner", "planning", "geopolit", "admiral", "campaign", "logistic", "game theory",
    "optimiz", "grandmaster", "anticipate", "ahead",
];
const UNSTRATEGIC: &[&str] = &[
    "child", "toddler", "confused", "struggling", "shy", "timid", "nervous", "anxious",
    "overwhelmed", "forget", "distracted", "never plan", "carefree", "exhausted", "lost",
    "just for fun", "avoids arguments", "agrees with everyone",
];
const MARTIAL: &[&str] = &[
    "military", "army", "war", "combat", "officer", "general", "commander", "soldier", "naval",
    "admiral", "pilot", "forces", "cavalry", "guerrilla", "mercenary", "defense", "security",
    "counterinsurgency", "fleet", "submarine", "battle", "fencing",
];
const GAMER: &[&str] = &[
    "risk tournament", "board game", "wargam", "strategy game", "strategy titles", "conquest",
    "chess", "territory", "game ai", "real-time strategy", "esports", "tabletop",
];
const BOLD: &[&str] = &[
    "bold", "gambl", "bets", "betting", "daredevil", "reckless", "adrenaline", "all in", "leverag", "stunt",
    "skydiv", "summit", "volatil", "danger", "long shot", "explorer", "impulsive", "big waves",
    "aggressive", "risks",
];
const CAREFUL: &[&str] = &[
    "cautious", "careful", "risk-averse", "meticulous", "safe", "never takes", "patien",
    "routine", "double-check", "uncertainty", "calm", "quiet",
];
const ASSERTIVE: &[&str] = &[
    "strike", "attack", "confront", "conquer", "seize", "dominate", "expand", "push", "go after",
    "target", "outnumber", "head-on", "front line", "forward", "capture",
];
const HESITANT: &[&str] = &[
    "avoid", "wait", "quiet", "safe", "hold back", "careful", "patient", "reserve", "shore up",
    "defended", "corners", "keep away", "let others",
];

/// Counts cue words that occur at the start of a word in `text`.
fn hits(text: &str, words: &[&str]) -> i32 {
    let starts_word = |i: usize| {
        text[..i]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric())
    };
    words
        .iter()
        .filter(|w| text.match_indices(*w).any(|(i, _)| starts_word(i)))
        .count() as i32
}

/// Keyword lean in `[-1, 1]`: two net hits saturate.
fn lean(text: &str, pos: &[&str], neg: &[&str]) -> f64 {
    let t = text.to_lowercase();
    ((hits(&t, pos) - hits(&t, neg)) as f64 / 2.0).clamp(-1.0, 1.0)
}

fn snap_half(x: f64) -> f64 {
    ((x * 2.0).round() / 2.0).clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, Default)]
pub struct MockBackend {
    salt: u64,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_salt(salt: u64) -> Self {
        Self { salt }
    }

    fn rng(&self, prompt: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.salt.to_le_bytes());
        h.update(prompt.as_bytes());
        let digest: [u8; 32] = h.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }

    fn assessment(&self, prompt: &str) -> String {
        let persona = line_after(prompt, "personality: ");
        let index = line_after(prompt, "index: ");
        let mut rng = self.rng(prompt);
        let mut noise = || rng.random_range(-0.4..0.4);
        let strategic = snap_half(lean(persona, STRATEGIC, UNSTRATEGIC) + noise());
        let expert = snap_half(lean(persona, MARTIAL, &[]) - 0.25 + noise());
        let peril = snap_half(
            0.5 * lean(persona, GAMER, &[]) + 0.5 * lean(persona, STRATEGIC, UNSTRATEGIC) + noise(),
        );
        let risk = snap_half(lean(persona, BOLD, CAREFUL) + noise());
        let do_or_be = match rng.random_range(0..10) {
            0..=6 => -1,
            7..=8 => 0,
            _ => 1,
        };
        let index: serde_json::Value = index
            .trim()
            .parse::<i64>()
            .map(Into::into)
            .unwrap_or_else(|_| index.trim().into());
        let body = serde_json::json!({
            "index": index,
            "personality": persona,
            "strategicThinker": strategic,
            "domainExpert": expert,
            "perilSpecific": peril,
            "riskTaker": risk,
            "doOrBe": do_or_be,
        });
        format!("```json\n{}\n```", serde_json::to_string_pretty(&body).unwrap())
    }

    fn direct(&self, prompt: &str, phase: HeuristicPhase) -> String {
        let persona = line_after(prompt, "Your assigned personality: ");
        let boldness = lean(persona, BOLD, CAREFUL);
        let mut rng = self.rng(prompt);
        let mut out = String::from("Here are the weights for my personality:\n```json\n{\n");
        let codes = phase.codes();
        for (i, code) in codes.iter().enumerate() {
            let base: f64 = rng.random_range(0.0..60.0);
            // bold personas claim to pass less, otherwise the numbers are noise
            let w = if *code == HeuristicCode::PASS {
                (base - 20.0 * boldness).clamp(0.0, 100.0)
            } else {
                base
            };
            let sep = if i + 1 == codes.len() { "" } else { "," };
            let _ = writeln!(out, "  \"{code}\": {}{sep}", w.round());
        }
        out.push_str("}\n```");
        out
    }

    fn item(&self, prompt: &str) -> String {
        let persona = line_after(prompt, "Your assigned personality: ");
        let statement = quoted_statement(prompt);
        let stance = lean(statement, ASSERTIVE, HESITANT).signum();
        let z = lean(persona, STRATEGIC, UNSTRATEGIC);
        let mut rng = self.rng(prompt);
        let x = rng.random_range(-1.0..1.0) + 1.5 * stance * z;
        let (n, label) = if x < -0.6 {
            (0, "Very false or often false")
        } else if x < 0.0 {
            (1, "Sometimes or somewhat false")
        } else if x < 0.6 {
            (2, "Sometimes or somewhat true")
        } else {
            (3, "Very true or often true")
        };
        format!("{n} - {label}")
    }
}

fn line_after<'a>(text: &'a str, prefix: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or_default()
}

fn quoted_statement(text: &str) -> &str {
    let open = "Given the statement \"";
    let close = "\", you must";
    text.find(open)
        .and_then(|i| {
            let rest = &text[i + open.len()..];
            rest.rfind(close).map(|j| &rest[..j])
        })
        .unwrap_or_default()
}

impl Backend for MockBackend {
    fn complete(&self, request: &Request) -> Result<String, LlmError> {
        let p = &request.prompt;
        Ok(match request.template_id {
            TemplateId::Assessment => self.assessment(p),
            TemplateId::DhPhase0 => self.direct(p, HeuristicPhase::Deploy),
            TemplateId::DhPhase1 => self.direct(p, HeuristicPhase::Attack),
            TemplateId::DhPhase2 => self.direct(p, HeuristicPhase::Redeploy),
            TemplateId::InventoryItem => self.item(p),
            TemplateId::GameIntro => "Understood. I am ready to play.".to_string(),
        })
    }
}
