//! Talking to a language model: prompt templates, a chat-completion backend
//! contract with HTTP and offline implementations, an audit trail, and the
//! persona annotation / profile elicitation pipelines built on them.

mod audit;
mod http;
mod mock;
mod pipeline;
mod templates;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{AuditLog, AuditRecord, AuditedBackend, ReplayBackend};
pub use http::HttpBackend;
pub use mock::MockBackend;
pub use pipeline::{
    annotate_persona, elicit_profile, elicit_sheet, parse_ratings, render_dh_prompt,
    render_item_prompt, Method,
};
pub use templates::{PromptTemplate, TemplateId};

pub const ENV_ENDPOINT: &str = "PERIL_LLM_ENDPOINT";
pub const ENV_KEY: &str = "PERIL_LLM_KEY";
pub const ENV_MODEL: &str = "PERIL_LLM_MODEL";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("[{template_id}] no API key: set {ENV_KEY}")]
    MissingKey { template_id: TemplateId },
    #[error("[{template_id}] endpoint rejected the credentials (HTTP {status})")]
    Auth { template_id: TemplateId, status: u16 },
    #[error("[{template_id}] request failed after {attempts} attempt(s): {message}")]
    Network {
        template_id: TemplateId,
        attempts: u32,
        message: String,
    },
    #[error("[{template_id}] HTTP {status}: {body}")]
    Http {
        template_id: TemplateId,
        status: u16,
        body: String,
    },
    #[error("[{template_id}] malformed completion body: {message}")]
    BadBody {
        template_id: TemplateId,
        message: String,
    },
    #[error("[{template_id}] no recorded reply for this prompt")]
    ReplayMiss { template_id: TemplateId },
    #[error("template {template_id} needs a value for {{{placeholder}}}")]
    Unresolved {
        template_id: TemplateId,
        placeholder: String,
    },
    #[error("persona {persona_id}{}: {message}", item.as_ref().map(|i| format!(", item {i}")).unwrap_or_default())]
    Reply {
        persona_id: String,
        item: Option<String>,
        template_id: TemplateId,
        message: String,
        raw: String,
    },
    #[error("the inventory method needs an inventory")]
    MissingInventory,
    #[error("backend config: {0}")]
    Config(String),
    #[error("audit log: {0}")]
    Audit(String),
}

/// One prompt plus the bookkeeping needed to audit it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Request {
    pub template_id: TemplateId,
    pub persona_id: String,
    pub item_id: Option<String>,
    pub prompt: String,
}

/// A chat-completion provider. Implementations are shared across threads.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &Request) -> Result<String, LlmError>;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn complete(&self, request: &Request) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    #[default]
    Mock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL of an OpenAI-compatible API; falls back to `PERIL_LLM_ENDPOINT`.
    pub endpoint: Option<String>,
    /// Falls back to `PERIL_LLM_MODEL`.
    pub model: Option<String>,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// First retry delay; each later one is four times longer.
    pub backoff_ms: u64,
    /// Perturbs the mock's hashing so independent mock "models" can be drawn.
    pub mock_salt: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            model: None,
            temperature: 0.0,
            max_retries: 3,
            timeout_secs: 120,
            backoff_ms: 1000,
            mock_salt: 0,
        }
    }
}

/// Builds the configured backend. HTTP credentials come from `PERIL_LLM_KEY`.
pub fn build_backend(config: &BackendConfig) -> Result<Arc<dyn Backend>, LlmError> {
    Ok(match config.kind {
        BackendKind::Mock => Arc::new(MockBackend::with_salt(config.mock_salt)),
        BackendKind::Http => Arc::new(HttpBackend::from_config(
            config,
            std::env::var(ENV_KEY).ok(),
        )?),
    })
}
