use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Backend, BackendConfig, LlmError, Request, TemplateId, ENV_ENDPOINT, ENV_MODEL};

/// Client for an OpenAI-compatible `chat/completions` endpoint.
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    model: String,
    key: Option<String>,
    temperature: f64,
    max_retries: u32,
    backoff: Duration,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(LlmError),
}

impl HttpBackend {
    /// `key` is the bearer token; a missing key is reported on first use,
    /// before anything is sent.
    pub fn from_config(config: &BackendConfig, key: Option<String>) -> Result<Self, LlmError> {
        let endpoint = config
            .endpoint
            .clone()
            .or_else(|| std::env::var(ENV_ENDPOINT).ok())
            .filter(|e| !e.trim().is_empty())
            .ok_or_else(|| LlmError::Config(format!("no endpoint: set `endpoint` or {ENV_ENDPOINT}")))?;
        let model = config
            .model
            .clone()
            .or_else(|| std::env::var(ENV_MODEL).ok())
            .unwrap_or_else(|| "gpt-4o".to_string());
        let url = if endpoint.trim_end_matches('/').ends_with("/chat/completions") {
            endpoint
        } else {
            format!("{}/chat/completions", endpoint.trim_end_matches('/'))
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            url,
            model,
            key: key.filter(|k| !k.trim().is_empty()),
            temperature: config.temperature,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
        })
    }

    fn attempt(&self, template_id: TemplateId, key: &str, body: &str) -> Attempt {
        let sent = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {key}"))
            .header("Content-Type", "application/json")
            .send(body);
        let mut resp = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        match status {
            200..=299 => match serde_json::from_str::<Completion>(&text) {
                Ok(c) => match c.choices.into_iter().next().and_then(|c| c.message.content) {
                    Some(content) => Attempt::Done(content),
                    None => Attempt::Fatal(LlmError::BadBody {
                        template_id,
                        message: "no message content in first choice".into(),
                    }),
                },
                Err(e) => Attempt::Fatal(LlmError::BadBody {
                    template_id,
                    message: e.to_string(),
                }),
            },
            401 | 403 => Attempt::Fatal(LlmError::Auth {
                template_id,
                status,
            }),
            408 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {status}: {text}")),
            _ => Attempt::Fatal(LlmError::Http {
                template_id,
                status,
                body: text,
            }),
        }
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &Request) -> Result<String, LlmError> {
        let template_id = request.template_id;
        let key = self
            .key
            .as_deref()
            .ok_or(LlmError::MissingKey { template_id })?;
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": request.prompt}],
        })
        .to_string();

        let mut delay = self.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(template_id, key, &body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(message) => {
                    if attempts > self.max_retries {
                        return Err(LlmError::Network {
                            template_id,
                            attempts,
                            message,
                        });
                    }
                    log::warn!("[{template_id}] attempt {attempts} failed ({message}); retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 4;
                }
            }
        }
    }
}
