//! Core domain types shared by every other module. No I/O here.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("agent id is missing the field(s) selected by mode {0}")]
    MissingAgentField(AgentIdMode),
}

/// One parsed access-log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLogEntry {
    pub ip: String,
    /// Seconds since the Unix epoch, normalized to UTC.
    pub timestamp: f64,
    pub method: String,
    pub path: String,
    pub http_version: String,
    pub status: u16,
    pub response_size: Option<u64>,
    pub referrer: Option<String>,
    pub user_agent: Option<String>,
}

/// How agents are keyed: by User-Agent string, IP address, or both.
/// The compound key is the strictest and is the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentIdMode {
    #[serde(rename = "ua")]
    UserAgent,
    #[serde(rename = "ip")]
    Ip,
    #[default]
    #[serde(rename = "ua+ip")]
    UserAgentAndIp,
}

impl fmt::Display for AgentIdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AgentIdMode::UserAgent => "ua",
            AgentIdMode::Ip => "ip",
            AgentIdMode::UserAgentAndIp => "ua+ip",
        };
        f.write_str(s)
    }
}

impl FromStr for AgentIdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ua" | "user-agent" => Ok(AgentIdMode::UserAgent),
            "ip" => Ok(AgentIdMode::Ip),
            "ua+ip" | "both" => Ok(AgentIdMode::UserAgentAndIp),
            other => Err(format!("unknown agent-id mode `{other}` (expected ua, ip, or ua+ip)")),
        }
    }
}

/// Identity of a requesting agent. Equality and hashing consider only the
/// fields selected by `mode`, so the same struct works for all three keying
/// schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentId {
    mode: AgentIdMode,
    user_agent: Option<String>,
    ip: Option<String>,
}

impl AgentId {
    pub fn new(
        mode: AgentIdMode,
        user_agent: Option<String>,
        ip: Option<String>,
    ) -> Result<Self, ModelError> {
        let ok = match mode {
            AgentIdMode::UserAgent => user_agent.is_some(),
            AgentIdMode::Ip => ip.is_some(),
            AgentIdMode::UserAgentAndIp => user_agent.is_some() || ip.is_some(),
        };
        if !ok {
            return Err(ModelError::MissingAgentField(mode));
        }
        Ok(AgentId { mode, user_agent, ip })
    }

    pub fn from_entry(entry: &RawLogEntry, mode: AgentIdMode) -> Result<Self, ModelError> {
        AgentId::new(mode, entry.user_agent.clone(), Some(entry.ip.clone()))
    }

    pub fn mode(&self) -> AgentIdMode {
        self.mode
    }

    pub fn user_agent(&self) -> Option<&str> {
        self.user_agent.as_deref()
    }

    pub fn ip(&self) -> Option<&str> {
        self.ip.as_deref()
    }

    /// The fields that participate in equality under the current mode.
    fn key(&self) -> (AgentIdMode, Option<&str>, Option<&str>) {
        match self.mode {
            AgentIdMode::UserAgent => (self.mode, self.user_agent.as_deref(), None),
            AgentIdMode::Ip => (self.mode, None, self.ip.as_deref()),
            AgentIdMode::UserAgentAndIp => {
                (self.mode, self.user_agent.as_deref(), self.ip.as_deref())
            }
        }
    }

    /// Single-string form used in trace CSV output and sorting.
    pub fn label(&self) -> String {
        match self.mode {
            AgentIdMode::UserAgent => self.user_agent.clone().unwrap_or_default(),
            AgentIdMode::Ip => self.ip.clone().unwrap_or_default(),
            AgentIdMode::UserAgentAndIp => format!(
                "{}|{}",
                self.user_agent.as_deref().unwrap_or("-"),
                self.ip.as_deref().unwrap_or("-")
            ),
        }
    }
}

impl PartialEq for AgentId {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for AgentId {}

impl Hash for AgentId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

/// A single request: who, when, what.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub agent: AgentId,
    /// Seconds (real-valued; logs carry 1-second resolution, generated
    /// traces millisecond precision).
    pub time: f64,
    pub path: String,
}

/// A maximal burst of one agent's requests in which consecutive gaps stay
/// within the sessionization timeout.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub agent: AgentId,
    pub start_time: f64,
    /// Nondecreasing in time; `requests[0].time == start_time`.
    pub requests: Vec<Request>,
}

impl Session {
    /// Session length `k`: the number of requests.
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Time of the last request.
    pub fn end_time(&self) -> f64 {
        self.requests.last().map(|r| r.time).unwrap_or(self.start_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceOrigin {
    Observed,
    Generated,
}

/// A time-ordered request stream.
#[derive(Debug, Clone)]
pub struct Trace {
    requests: Vec<Request>,
    origin: TraceOrigin,
}

impl Trace {
    /// Build a trace, stably sorting by timestamp (ties keep input order).
    pub fn new(mut requests: Vec<Request>, origin: TraceOrigin) -> Self {
        requests.sort_by(|a, b| a.time.total_cmp(&b.time));
        Trace { requests, origin }
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn origin(&self) -> TraceOrigin {
        self.origin
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    /// Observation span in seconds (last minus first timestamp).
    pub fn span(&self) -> f64 {
        match (self.requests.first(), self.requests.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }

    pub fn into_requests(self) -> Vec<Request> {
        self.requests
    }
}
