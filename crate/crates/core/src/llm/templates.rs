use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Assessment,
    GameIntro,
    DhPhase0,
    DhPhase1,
    DhPhase2,
    InventoryItem,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        Self::Assessment,
        Self::GameIntro,
        Self::DhPhase0,
        Self::DhPhase1,
        Self::DhPhase2,
        Self::InventoryItem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Assessment => "assessment",
            Self::GameIntro => "game_intro",
            Self::DhPhase0 => "dh_phase0",
            Self::DhPhase1 => "dh_phase1",
            Self::DhPhase2 => "dh_phase2",
            Self::InventoryItem => "inventory_item",
        }
    }

    fn text(self) -> &'static str {
        match self {
            Self::Assessment => include_str!("../../assets/prompts/assessment.txt"),
            Self::GameIntro => include_str!("../../assets/prompts/game_intro.txt"),
            Self::DhPhase0 => include_str!("../../assets/prompts/dh_phase0.txt"),
            Self::DhPhase1 => include_str!("../../assets/prompts/dh_phase1.txt"),
            Self::DhPhase2 => include_str!("../../assets/prompts/dh_phase2.txt"),
            Self::InventoryItem => include_str!("../../assets/prompts/inventory_item.txt"),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown template `{s}`"))
    }
}

pub const PLACEHOLDERS: [&str; 3] = ["persona", "index", "item_statement"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub text: String,
}

impl PromptTemplate {
    pub fn builtin(id: TemplateId) -> Self {
        Self {
            id,
            text: id.text().to_string(),
        }
    }

    /// Placeholders that occur in the text.
    pub fn placeholders(&self) -> Vec<&'static str> {
        PLACEHOLDERS
            .into_iter()
            .filter(|p| self.text.contains(&format!("{{{p}}}")))
            .collect()
    }

    /// Substitutes `{name}` for each known placeholder in one left-to-right
    /// pass, so values that themselves contain braces are inserted as-is.
    /// Other brace groups in the text are literal.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, LlmError> {
        for p in self.placeholders() {
            if !values.iter().any(|(k, _)| *k == p) {
                return Err(LlmError::Unresolved {
                    template_id: self.id,
                    placeholder: p.to_string(),
                });
            }
        }
        let mut out = String::with_capacity(self.text.len() + 256);
        let mut rest = self.text.as_str();
        'scan: while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let tail = &rest[open..];
            for (k, v) in values {
                let token_len = k.len() + 2;
                if tail.len() >= token_len
                    && tail[1..].starts_with(k)
                    && tail.as_bytes()[token_len - 1] == b'}'
                {
                    out.push_str(v);
                    rest = &tail[token_len..];
                    continue 'scan;
                }
            }
            out.push('{');
            rest = &tail[1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}
