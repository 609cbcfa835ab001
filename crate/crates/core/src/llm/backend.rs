use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const ENV_ENDPOINT_URL: &str = "FM_ENDPOINT_URL";
pub const ENV_MODEL_ID: &str = "FM_MODEL_ID";
pub const ENV_API_TOKEN: &str = "FM_API_TOKEN";

#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest {
    pub scenario: String,
    pub trial: usize,
    pub prompt: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    /// Seconds from request to answer (reported as reasoning time).
    pub latency_s: f64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

pub trait ChatBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, req: &ChatRequest) -> Result<LlmResponse>;
}

/// Canned responses keyed by `"<scenario>#<trial>"`, falling back to
/// `"<scenario>"` for every trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MockBackend {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub latency_s: f64,
    pub responses: BTreeMap<String, String>,
}

impl MockBackend {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: MockBackend = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if m.id.is_empty() {
            m.id = format!("mock:{}", path.file_stem().and_then(|s| s.to_str()).unwrap_or("fixture"));
        }
        if !(m.latency_s >= 0.0) {
            return Err(Error::Contract(format!("mock latency must be >= 0, got {}", m.latency_s)));
        }
        Ok(m)
    }

    pub fn response_for(&self, scenario: &str, trial: usize) -> Option<&str> {
        self.responses
            .get(&format!("{scenario}#{trial}"))
            .or_else(|| self.responses.get(scenario))
            .map(String::as_str)
    }
}

impl ChatBackend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, req: &ChatRequest) -> Result<LlmResponse> {
        let text = self.response_for(&req.scenario, req.trial).ok_or_else(|| {
            Error::Contract(format!(
                "mock fixture {} has no response for {}#{}",
                self.id, req.scenario, req.trial
            ))
        })?;
        Ok(LlmResponse {
            text: text.to_string(),
            latency_s: self.latency_s,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    /// First backoff delay; each retry doubles it.
    pub backoff_s: f64,
    pub temperature: f64,
    pub max_in_flight: usize,
}

impl Default for ModelEndpoint {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            model: String::new(),
            token_env: ENV_API_TOKEN.into(),
            timeout_s: 60.0,
            max_retries: 3,
            backoff_s: 1.0,
            temperature: 0.2,
            max_in_flight: 4,
        }
    }
}

impl ModelEndpoint {
    /// Endpoint from `FM_ENDPOINT_URL` / `FM_MODEL_ID`, if both are set.
    pub fn from_env() -> Option<Self> {
        let base_url = std::env::var(ENV_ENDPOINT_URL).ok().filter(|s| !s.is_empty())?;
        let model = std::env::var(ENV_MODEL_ID).ok().filter(|s| !s.is_empty())?;
        Some(Self {
            base_url,
            model,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_url.is_empty() || self.model.is_empty() {
            return Err(Error::Contract("endpoint needs a base URL and a model id".into()));
        }
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(Error::Contract(format!("timeout must be > 0, got {}", self.timeout_s)));
        }
        if !(self.backoff_s >= 0.0 && self.backoff_s.is_finite()) {
            return Err(Error::Contract(format!("backoff must be >= 0, got {}", self.backoff_s)));
        }
        if self.max_in_flight == 0 {
            return Err(Error::Contract("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }

    /// Delay before retry `k` (0-based): backoff, 2 x backoff, 4 x backoff, ...
    pub fn backoff(&self, k: u32) -> Duration {
        Duration::from_secs_f64(self.backoff_s * 2f64.powi(k as i32))
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

/// Blocking chat-completions client. Shareable across threads; at most
/// `max_in_flight` requests are outstanding at once.
pub struct HttpBackend {
    endpoint: ModelEndpoint,
    agent: ureq::Agent,
    permits: Semaphore,
}

impl HttpBackend {
    pub fn new(endpoint: ModelEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(endpoint.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            permits: Semaphore::new(endpoint.max_in_flight),
            endpoint,
            agent,
        })
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    fn attempt(&self, prompt: &str) -> std::result::Result<LlmResponse, Attempt> {
        let ep = &self.endpoint;
        let url = format!("{}/chat/completions", ep.base_url.trim_end_matches('/'));
        let body = json!({
            "model": ep.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": ep.temperature,
        });
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Ok(token) = std::env::var(&ep.token_env) {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let t0 = Instant::now();
        let mut resp = req.send_json(&body).map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let latency_s = t0.elapsed().as_secs_f64();
        match status {
            200..=299 => {}
            429 | 500..=599 => return Err(Attempt::Retry(format!("http status {status}"))),
            _ => return Err(Attempt::Fatal(format!("http status {status}: {text}"))),
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| Attempt::Fatal(format!("bad response body: {e}")))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Attempt::Fatal("response has no choices[0].message.content".into()))?;
        Ok(LlmResponse {
            text: content.to_string(),
            latency_s,
            prompt_tokens: v["usage"]["prompt_tokens"].as_u64(),
            completion_tokens: v["usage"]["completion_tokens"].as_u64(),
        })
    }
}

impl ChatBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.endpoint.model
    }

    fn complete(&self, req: &ChatRequest) -> Result<LlmResponse> {
        let _permit = self.permits.acquire();
        let total = self.endpoint.max_retries as usize + 1;
        let mut last_error = String::new();
        for k in 0..total {
            if k > 0 {
                std::thread::sleep(self.endpoint.backoff(k as u32 - 1));
            }
            match self.attempt(&req.prompt) {
                Ok(r) => return Ok(r),
                Err(Attempt::Retry(e)) => {
                    log::debug!("attempt {} for {}#{} failed: {e}", k + 1, req.scenario, req.trial);
                    last_error = e;
                }
                Err(Attempt::Fatal(e)) => {
                    return Err(Error::EndpointUnavailable {
                        attempts: k + 1,
                        last_error: e,
                    })
                }
            }
        }
        Err(Error::EndpointUnavailable {
            attempts: total,
            last_error,
        })
    }
}
