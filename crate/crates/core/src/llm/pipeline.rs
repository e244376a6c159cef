use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Backend, LlmError, PromptTemplate, Request, TemplateId};
use crate::heuristics::{HeuristicPhase, HeuristicProfile, Provenance};
use crate::inventory::{
    build_profile_pi, parse_dh_response, Inventory, InventoryItem, Response, ResponseSheet,
};
use crate::io::json_blocks;
use crate::persona::{Feature, FeatureRatings, Persona};

/// How a persona is turned into heuristic weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// The model states the weights itself.
    #[serde(alias = "dh")]
    DH,
    /// The model answers questionnaire items that are scored into weights.
    #[serde(alias = "pi")]
    PI,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DH => "DH",
            Self::PI => "PI",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dh" | "direct" => Ok(Self::DH),
            "pi" | "inventory" => Ok(Self::PI),
            _ => Err(format!("unknown method `{s}` (expected dh or pi)")),
        }
    }
}

fn dh_template(phase: HeuristicPhase) -> TemplateId {
    match phase {
        HeuristicPhase::Deploy => TemplateId::DhPhase0,
        HeuristicPhase::Attack => TemplateId::DhPhase1,
        HeuristicPhase::Redeploy => TemplateId::DhPhase2,
    }
}

fn render(id: TemplateId, values: &[(&str, &str)]) -> String {
    PromptTemplate::builtin(id)
        .render(values)
        .expect("builtin templates only use supplied placeholders")
}

/// Game rules followed by the phase's heuristic list.
pub fn render_dh_prompt(persona: &Persona, phase: HeuristicPhase) -> String {
    format!(
        "{}\n{}",
        render(TemplateId::GameIntro, &[]),
        render(dh_template(phase), &[("persona", &persona.description)])
    )
}

/// One questionnaire item; carries neither codes nor mappings.
pub fn render_item_prompt(persona: &Persona, item: &InventoryItem) -> String {
    render(
        TemplateId::InventoryItem,
        &[("persona", &persona.description), ("item_statement", &item.statement)],
    )
}

fn rating_value(v: &serde_json::Value) -> Option<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => s.trim().trim_start_matches('+').parse().ok(),
        _ => None,
    }
}

/// Reads the five feature ratings from the first JSON object that has any
/// of them. Every feature must be present and on its grid.
pub fn parse_ratings(raw: &str) -> Result<FeatureRatings, String> {
    let obj = json_blocks(raw)
        .into_iter()
        .filter_map(|b| match serde_json::from_str(b) {
            Ok(serde_json::Value::Object(m)) => Some(m),
            _ => None,
        })
        .find(|m| Feature::ALL.iter().any(|f| m.contains_key(f.key())))
        .ok_or_else(|| "no JSON object with feature ratings".to_string())?;
    let mut values = [0.0; 5];
    for (i, f) in Feature::ALL.iter().enumerate() {
        let v = obj.get(f.key()).ok_or_else(|| format!("missing {f}"))?;
        values[i] = rating_value(v).ok_or_else(|| format!("{f} is not a number: {v}"))?;
    }
    FeatureRatings::from_values(values).map_err(|e| e.to_string())
}

pub fn annotate_persona(
    backend: &dyn Backend,
    persona: &Persona,
    index: usize,
) -> Result<FeatureRatings, LlmError> {
    let index = index.to_string();
    let request = Request {
        template_id: TemplateId::Assessment,
        persona_id: persona.persona_id.clone(),
        item_id: None,
        prompt: render(
            TemplateId::Assessment,
            &[("persona", &persona.description), ("index", &index)],
        ),
    };
    let raw = backend.complete(&request)?;
    parse_ratings(&raw).map_err(|message| LlmError::Reply {
        persona_id: persona.persona_id.clone(),
        item: None,
        template_id: TemplateId::Assessment,
        message,
        raw,
    })
}

/// Asks every item of `inventory` in order and grades the answers.
pub fn elicit_sheet(
    backend: &dyn Backend,
    persona: &Persona,
    inventory: &Inventory,
) -> Result<ResponseSheet, LlmError> {
    let mut sheet = ResponseSheet::new(persona.persona_id.clone());
    for item in inventory.items() {
        let request = Request {
            template_id: TemplateId::InventoryItem,
            persona_id: persona.persona_id.clone(),
            item_id: Some(item.item_id.clone()),
            prompt: render_item_prompt(persona, item),
        };
        let raw = backend.complete(&request)?;
        let answer = Response::parse_answer(&raw).map_err(|e| LlmError::Reply {
            persona_id: persona.persona_id.clone(),
            item: Some(item.item_id.clone()),
            template_id: TemplateId::InventoryItem,
            message: e.to_string(),
            raw: raw.clone(),
        })?;
        sheet.answers.insert(item.item_id.clone(), answer);
    }
    Ok(sheet)
}

pub fn elicit_profile(
    backend: &dyn Backend,
    persona: &Persona,
    method: Method,
    inventory: Option<&Inventory>,
    lambda: f64,
) -> Result<HeuristicProfile, LlmError> {
    match method {
        Method::PI => {
            let inventory = inventory.ok_or(LlmError::MissingInventory)?;
            let sheet = elicit_sheet(backend, persona, inventory)?;
            build_profile_pi(inventory, &sheet, lambda).map_err(|e| LlmError::Reply {
                persona_id: persona.persona_id.clone(),
                item: None,
                template_id: TemplateId::InventoryItem,
                message: e.to_string(),
                raw: String::new(),
            })
        }
        Method::DH => {
            let mut profile = HeuristicProfile::new(persona.persona_id.clone(), Provenance::DH);
            for phase in HeuristicPhase::ALL {
                let template_id = dh_template(phase);
                let request = Request {
                    template_id,
                    persona_id: persona.persona_id.clone(),
                    item_id: None,
                    prompt: render_dh_prompt(persona, phase),
                };
                let raw = backend.complete(&request)?;
                let part = parse_dh_response(&raw, phase, &persona.persona_id).map_err(|e| {
                    LlmError::Reply {
                        persona_id: persona.persona_id.clone(),
                        item: Some(phase.to_string()),
                        template_id,
                        message: e.to_string(),
                        raw: raw.clone(),
                    }
                })?;
                profile.merge_phase(phase, &part);
            }
            Ok(profile)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rating_replies() {
        let ok = r#"{"index": 1, "strategicThinker": 0.5, "domainExpert": "-1", "perilSpecific": 0, "riskTaker": "+0.5", "doOrBe": -1}"#;
        let r = parse_ratings(ok).unwrap();
        assert_eq!(r.get(Feature::RiskTaker), 0.5);
        assert_eq!(r.get(Feature::DomainExpert), -1.0);
        let off = ok.replace("\"+0.5\"", "0.3");
        assert!(parse_ratings(&off).unwrap_err().contains("riskTaker"));
        let missing = ok.replace(", \"doOrBe\": -1", "");
        assert_eq!(parse_ratings(&missing).unwrap_err(), "missing doOrBe");
        assert!(parse_ratings("no idea").is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("pi".parse::<Method>(), Ok(Method::PI));
        assert_eq!("DH".parse::<Method>(), Ok(Method::DH));
        assert!("x".parse::<Method>().is_err());
    }
}
