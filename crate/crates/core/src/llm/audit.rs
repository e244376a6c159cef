use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{Backend, LlmError, Request, TemplateId};
use crate::io::read_jsonl;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub seq: u64,
    pub template_id: TemplateId,
    pub persona_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Unix milliseconds.
    pub started_ms: u64,
    pub finished_ms: u64,
}

/// Append-only newline-delimited log of every exchange.
pub struct AuditLog {
    out: Mutex<BufWriter<File>>,
    seq: AtomicU64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl AuditLog {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Audit(format!("{}: {e}", path.display())))?;
        Ok(Self {
            out: Mutex::new(BufWriter::new(file)),
            seq: AtomicU64::new(0),
        })
    }

    pub fn append(&self, mut record: AuditRecord) -> Result<(), LlmError> {
        let mut out = self.out.lock().map_err(|_| LlmError::Audit("writer poisoned".into()))?;
        // numbered under the lock so sequence order matches file order
        record.seq = self.seq.fetch_add(1, Ordering::SeqCst);
        let line = serde_json::to_string(&record).map_err(|e| LlmError::Audit(e.to_string()))?;
        writeln!(out, "{line}")
            .and_then(|_| out.flush())
            .map_err(|e| LlmError::Audit(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Vec<AuditRecord>, LlmError> {
        read_jsonl(path).map_err(|e| LlmError::Audit(e.to_string()))
    }
}

/// Wraps a backend and logs every request it serves.
pub struct AuditedBackend<B> {
    inner: B,
    log: Arc<AuditLog>,
}

impl<B: Backend> AuditedBackend<B> {
    pub fn new(inner: B, log: Arc<AuditLog>) -> Self {
        Self { inner, log }
    }
}

impl<B: Backend> Backend for AuditedBackend<B> {
    fn complete(&self, request: &Request) -> Result<String, LlmError> {
        let started_ms = now_ms();
        let result = self.inner.complete(request);
        let (reply, error) = match &result {
            Ok(r) => (Some(r.clone()), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.log.append(AuditRecord {
            seq: 0,
            template_id: request.template_id,
            persona_id: request.persona_id.clone(),
            item_id: request.item_id.clone(),
            prompt: request.prompt.clone(),
            reply,
            error,
            started_ms,
            finished_ms: now_ms(),
        })?;
        result
    }
}

/// Answers from a previous run's audit log, matched on template and prompt.
#[derive(Clone, Debug, Default)]
pub struct ReplayBackend {
    replies: HashMap<(TemplateId, String), String>,
}

impl ReplayBackend {
    pub fn from_records(records: impl IntoIterator<Item = AuditRecord>) -> Self {
        let mut replies = HashMap::new();
        for r in records {
            if let Some(reply) = r.reply {
                replies.insert((r.template_id, r.prompt), reply);
            }
        }
        Self { replies }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Ok(Self::from_records(AuditLog::read(path)?))
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &Request) -> Result<String, LlmError> {
        self.replies
            .get(&(request.template_id, request.prompt.clone()))
            .cloned()
            .ok_or(LlmError::ReplayMiss {
                template_id: request.template_id,
            })
    }
}
