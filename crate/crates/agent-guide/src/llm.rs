//! Chat-completion backed generator.
//!
//! Prompts render the persona, the event, the last [`MEMORY_WINDOW`] memory
//! records and the behavior catalog. Distribution replies must be a bare JSON
//! object mapping every behavior id to a number; malformed replies are
//! re-requested up to `max_retries` times.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use agent_guide_core::{
    normalize_distribution, Action, Behavior, BehaviorCatalog, BehaviorDistribution, Event,
    GeneratorError, Memory, Persona, RawDistribution,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Version tag of the prompt templates below.
pub const PROMPT_VERSION: &str = "v1";
pub const MEMORY_WINDOW: usize = 10;
pub const DISTRIBUTION_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        LlmEndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            token_env: "OPENAI_API_KEY".into(),
            timeout_secs: 30,
            max_retries: 3,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("malformed response after {attempts} attempts: {last}")]
    MalformedResponseAfterRetries { attempts: u32, last: String },
    #[error(transparent)]
    Distribution(#[from] agent_guide_core::Error),
}

impl From<LlmError> for GeneratorError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::EndpointUnreachable(m) => GeneratorError::EndpointUnreachable(m),
            LlmError::MalformedResponseAfterRetries { attempts, last } => {
                GeneratorError::MalformedResponseAfterRetries { attempts, last }
            }
            LlmError::Distribution(e) => e.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Sends one chat request and returns the assistant's message text.
/// `Err` means the endpoint could not be reached or answered with a non-2xx
/// status.
pub trait ChatTransport {
    fn complete(&self, messages: &[ChatMessage], json_object: bool) -> Result<String, String>;
}

/// OpenAI-compatible `POST {base_url}/chat/completions`.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    model: String,
    token: Option<String>,
}

impl HttpTransport {
    pub fn new(config: &LlmEndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        HttpTransport {
            agent,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            model: config.model.clone(),
            token: std::env::var(&config.token_env).ok(),
        }
    }
}

pub fn chat_request_body(model: &str, messages: &[ChatMessage], json_object: bool) -> Value {
    let mut body = json!({
        "model": model,
        "messages": messages,
    });
    if json_object {
        body["response_format"] = json!({ "type": "json_object" });
    }
    body
}

impl ChatTransport for HttpTransport {
    fn complete(&self, messages: &[ChatMessage], json_object: bool) -> Result<String, String> {
        let mut req = self.agent.post(&self.url);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(chat_request_body(&self.model, messages, json_object))
            .map_err(|e| e.to_string())?;
        let body: Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        // a 2xx reply without the expected envelope is handed back verbatim so
        // the caller treats it as malformed content
        Ok(body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .unwrap_or_else(|| body.to_string()))
    }
}

pub struct LlmGenerator<T> {
    persona: Persona,
    transport: T,
    max_retries: u32,
}

impl<T: ChatTransport> LlmGenerator<T> {
    pub fn new(persona: Persona, transport: T, max_retries: u32) -> Self {
        LlmGenerator {
            persona,
            transport,
            max_retries,
        }
    }

    fn ask(&self, messages: &[ChatMessage], json_object: bool) -> Result<String, LlmError> {
        self.transport
            .complete(messages, json_object)
            .map_err(LlmError::EndpointUnreachable)
    }

    /// Requests a raw behavior → probability map, retrying malformed replies.
    pub fn request_raw(
        &self,
        event: &Event,
        memory: &Memory,
        catalog: &BehaviorCatalog,
    ) -> Result<RawDistribution, LlmError> {
        let messages = distribution_prompt(&self.persona, event, memory, catalog);
        let attempts = self.max_retries + 1;
        let mut last = String::new();
        for _ in 0..attempts {
            let reply = self.ask(&messages, true)?;
            match parse_distribution(&reply, catalog) {
                Ok(raw) => return Ok(raw),
                Err(why) => last = why,
            }
        }
        Err(LlmError::MalformedResponseAfterRetries { attempts, last })
    }

    /// [`request_raw`](Self::request_raw) followed by normalization with the
    /// ±0.05 sum tolerance.
    pub fn request_distribution(
        &self,
        event: &Event,
        memory: &Memory,
        catalog: &BehaviorCatalog,
    ) -> Result<BehaviorDistribution, LlmError> {
        let raw = self.request_raw(event, memory, catalog)?;
        Ok(normalize_distribution(&raw, catalog, DISTRIBUTION_TOLERANCE)?)
    }
}

fn persona_block(persona: &Persona) -> String {
    format!(
        "You are {}, a social media user ({}). {}",
        persona.name,
        persona.profile(),
        persona.description
    )
}

fn memory_block(memory: &Memory) -> String {
    let recent = memory.recent(MEMORY_WINDOW);
    if recent.is_empty() {
        return "No previous activity.".into();
    }
    let mut out = String::from("Recent activity (oldest first):\n");
    for r in recent {
        let _ = writeln!(
            out,
            "- round {}: {} -> {} ({})",
            r.round,
            r.event.text,
            r.behavior.id(),
            r.action.text
        );
    }
    out
}

pub fn event_prompt(persona: &Persona, round: u64, memory: &Memory) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(persona_block(persona)),
        ChatMessage::user(format!(
            "{}\n\nRound {round}. Describe in one sentence the next post you come across on \
             your feed. Reply with the sentence only.",
            memory_block(memory)
        )),
    ]
}

pub fn distribution_prompt(
    persona: &Persona,
    event: &Event,
    memory: &Memory,
    catalog: &BehaviorCatalog,
) -> Vec<ChatMessage> {
    let ids: Vec<String> = catalog.ids().map(|id| format!("\"{id}\"")).collect();
    vec![
        ChatMessage::system(persona_block(persona)),
        ChatMessage::user(format!(
            "{}\n\nCurrent event: {}\n\nPossible behaviors: [{}].\n\
             How likely are you to choose each behavior in response? Reply with a single JSON \
             object whose keys are exactly these behavior ids and whose values are \
             probabilities that sum to 1. No other text.",
            memory_block(memory),
            event.text,
            ids.join(", ")
        )),
    ]
}

pub fn action_prompt(persona: &Persona, event: &Event, behavior: &Behavior, memory: &Memory) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(persona_block(persona)),
        ChatMessage::user(format!(
            "{}\n\nCurrent event: {}\nYou decided on: {}.\nDescribe in one sentence, in the \
             third person, exactly what you do. Reply with the sentence only.",
            memory_block(memory),
            event.text,
            behavior.id()
        )),
    ]
}

/// Accepts a bare object, an object wrapped in a Markdown code fence, or
/// `{"probabilities": {...}}`. Every catalog id must be present with a
/// non-negative number and no other key may appear.
pub fn parse_distribution(reply: &str, catalog: &BehaviorCatalog) -> Result<RawDistribution, String> {
    let text = strip_fence(reply);
    let value: Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
    let obj = match value {
        Value::Object(mut o) => match o.remove("probabilities") {
            Some(Value::Object(inner)) if o.is_empty() => inner,
            Some(other) => {
                o.insert("probabilities".into(), other);
                o
            }
            None => o,
        },
        _ => return Err("reply is not a JSON object".into()),
    };
    let mut raw = BTreeMap::new();
    for (k, v) in obj {
        if catalog.index_of(&k).is_err() {
            return Err(format!("unexpected behavior {k:?}"));
        }
        let p = v.as_f64().ok_or_else(|| format!("value for {k:?} is not a number"))?;
        if p.is_nan() || p < 0.0 {
            return Err(format!("value for {k:?} is negative"));
        }
        raw.insert(k, p);
    }
    if let Some(missing) = catalog.ids().find(|id| !raw.contains_key(*id)) {
        return Err(format!("missing behavior {missing:?}"));
    }
    Ok(raw)
}

fn strip_fence(reply: &str) -> &str {
    let t = reply.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let rest = rest.trim_start_matches("json");
        return rest.trim_end().trim_end_matches("```").trim();
    }
    t
}

fn one_line(reply: &str) -> Result<String, GeneratorError> {
    let line = reply.trim().lines().next().unwrap_or("").trim().to_string();
    if line.is_empty() {
        Err(GeneratorError::MalformedResponseAfterRetries {
            attempts: 1,
            last: "empty reply".into(),
        })
    } else {
        Ok(line)
    }
}

impl<T: ChatTransport> agent_guide_core::Generator for LlmGenerator<T> {
    fn generate_event(&mut self, persona: &Persona, round: u64, memory: &Memory) -> Result<Event, GeneratorError> {
        let reply = self.ask(&event_prompt(persona, round, memory), false)?;
        Ok(Event {
            round,
            text: one_line(&reply)?,
        })
    }

    fn generate_distribution(
        &mut self,
        event: &Event,
        memory: &Memory,
        catalog: &BehaviorCatalog,
    ) -> Result<RawDistribution, GeneratorError> {
        Ok(self.request_raw(event, memory, catalog)?)
    }

    fn generate_action(&mut self, event: &Event, behavior: &Behavior, memory: &Memory) -> Result<Action, GeneratorError> {
        let reply = self.ask(&action_prompt(&self.persona, event, behavior, memory), false)?;
        Ok(Action {
            behavior_id: behavior.id().to_string(),
            text: one_line(&reply)?,
        })
    }

    fn sum_tolerance(&self) -> f64 {
        DISTRIBUTION_TOLERANCE
    }
}
