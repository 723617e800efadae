//! Access-log ingestion: parse NCSA Common/Combined records, isolate robot
//! traffic by User-Agent substring matching, reconstruct sessions, and
//! compute summary statistics.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::DateTime;
use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_model::{AgentId, AgentIdMode, RawLogEntry, Request, Session};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed log line: {0}")]
    MalformedLine(String),
    #[error("undecodable timestamp `{0}`")]
    BadTimestamp(String),
    #[error("bad status `{0}` (expected integer in 100..=599)")]
    BadStatus(String),
    #[error("session timeout must be positive, got {0}")]
    NonPositiveTimeout(f64),
    #[error("user-agent database has no usable patterns")]
    EmptyDatabase,
    #[error("user-agent database pattern may not be empty")]
    EmptyPattern,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// NCSA log flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Common,
    Combined,
}

impl FromStr for LogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "common" => Ok(LogFormat::Common),
            "combined" => Ok(LogFormat::Combined),
            other => Err(format!("unknown log format `{other}` (expected common or combined)")),
        }
    }
}

const CLF_DATE: &str = "%d/%b/%Y:%H:%M:%S %z";

fn take_quoted(s: &str) -> Option<(&str, &str)> {
    let rest = s.trim_start();
    let rest = rest.strip_prefix('"')?;
    let end = rest.find('"')?;
    Some((&rest[..end], &rest[end + 1..]))
}

fn opt_field(s: &str) -> Option<String> {
    if s == "-" {
        None
    } else {
        Some(s.to_string())
    }
}

/// Parse one access-log record (no trailing newline).
pub fn parse_log_line(line: &str, format: LogFormat) -> Result<RawLogEntry, IngestError> {
    let malformed = || IngestError::MalformedLine(line.to_string());

    let bracket_open = line.find('[').ok_or_else(malformed)?;
    let bracket_close = line[bracket_open..].find(']').ok_or_else(malformed)? + bracket_open;

    let ip = line[..bracket_open]
        .split_whitespace()
        .next()
        .ok_or_else(malformed)?
        .to_string();

    let date_str = &line[bracket_open + 1..bracket_close];
    let timestamp = DateTime::parse_from_str(date_str, CLF_DATE)
        .map_err(|_| IngestError::BadTimestamp(date_str.to_string()))?
        .timestamp() as f64;
    if timestamp < 0.0 {
        return Err(IngestError::BadTimestamp(date_str.to_string()));
    }

    let (request_line, rest) = take_quoted(&line[bracket_close + 1..]).ok_or_else(malformed)?;
    let mut req_parts = request_line.split_whitespace();
    let method = req_parts.next().ok_or_else(malformed)?.to_string();
    let path = req_parts.next().ok_or_else(malformed)?.to_string();
    let http_version = req_parts.next().ok_or_else(malformed)?.to_string();
    if req_parts.next().is_some() || !path.starts_with('/') {
        return Err(malformed());
    }

    let mut tail = rest.split_whitespace();
    let status_str = tail.next().ok_or_else(malformed)?;
    let status: u16 = status_str
        .parse()
        .map_err(|_| IngestError::BadStatus(status_str.to_string()))?;
    if !(100..=599).contains(&status) {
        return Err(IngestError::BadStatus(status_str.to_string()));
    }

    let size_str = tail.next().ok_or_else(malformed)?;
    let response_size = match size_str {
        "-" => None,
        s => Some(s.parse::<u64>().map_err(|_| malformed())?),
    };

    let (referrer, user_agent) = match format {
        LogFormat::Common => (None, None),
        LogFormat::Combined => {
            let after_size = rest
                .trim_start()
                .strip_prefix(status_str)
                .and_then(|s| s.trim_start().strip_prefix(size_str))
                .ok_or_else(malformed)?;
            let (referrer, after_ref) = take_quoted(after_size).ok_or_else(malformed)?;
            let (user_agent, _) = take_quoted(after_ref).ok_or_else(malformed)?;
            (opt_field(referrer), opt_field(user_agent))
        }
    };

    Ok(RawLogEntry {
        ip,
        timestamp,
        method,
        path,
        http_version,
        status,
        response_size,
        referrer,
        user_agent,
    })
}

/// Case-insensitive substring patterns identifying robot User-Agents.
/// Stands in for a crowd-sourced robot database.
#[derive(Debug, Clone)]
pub struct UserAgentDatabase {
    patterns: Vec<String>,
}

impl UserAgentDatabase {
    pub fn new<I, S>(patterns: I) -> Result<Self, IngestError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Vec::new();
        for p in patterns {
            let p: String = p.into();
            if p.is_empty() {
                return Err(IngestError::EmptyPattern);
            }
            out.push(p.to_lowercase());
        }
        if out.is_empty() {
            return Err(IngestError::EmptyDatabase);
        }
        Ok(UserAgentDatabase { patterns: out })
    }

    /// Load from a plain-text file: one substring per line, `#` comments and
    /// blank lines ignored.
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self, IngestError> {
        let reader = open_reader(path.as_ref())?;
        let mut patterns = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            patterns.push(trimmed.to_string());
        }
        UserAgentDatabase::new(patterns)
    }

    pub fn matches(&self, user_agent: &str) -> bool {
        let ua = user_agent.to_lowercase();
        self.patterns.iter().any(|p| ua.contains(p.as_str()))
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }
}

/// Retain exactly the entries whose User-Agent matches the database.
/// Entries lacking a User-Agent cannot match and are dropped.
pub fn filter_robots(entries: Vec<RawLogEntry>, db: &UserAgentDatabase) -> Vec<RawLogEntry> {
    entries
        .into_iter()
        .filter(|e| e.user_agent.as_deref().is_some_and(|ua| db.matches(ua)))
        .collect()
}

/// Strip query string and fragment; the path itself is kept verbatim.
pub fn normalize_path(raw: &str) -> &str {
    let end = raw.find(['?', '#']).unwrap_or(raw.len());
    &raw[..end]
}

/// Convert parsed entries into requests keyed by the chosen agent-id mode.
/// Paths are normalized (query strings stripped) here so that cataloguing
/// and cache simulation see one consistent resource universe.
pub fn entries_to_requests(entries: &[RawLogEntry], mode: AgentIdMode) -> Vec<Request> {
    entries
        .iter()
        .filter_map(|e| {
            let agent = AgentId::from_entry(e, mode).ok()?;
            Some(Request {
                agent,
                time: e.timestamp,
                path: normalize_path(&e.path).to_string(),
            })
        })
        .collect()
}

/// Group requests per agent and split whenever the gap between consecutive
/// requests exceeds `timeout`. A gap equal to the timeout stays within the
/// session. Requests are stably sorted by time per agent first, so ties keep
/// input order. Sessions are returned ordered by (start time, agent label).
pub fn sessionize(requests: Vec<Request>, timeout: f64) -> Result<Vec<Session>, IngestError> {
    if !(timeout > 0.0) {
        return Err(IngestError::NonPositiveTimeout(timeout));
    }

    let mut per_agent: HashMap<AgentId, Vec<Request>> = HashMap::new();
    for req in requests {
        per_agent.entry(req.agent.clone()).or_default().push(req);
    }

    let mut sessions = Vec::new();
    for (agent, mut reqs) in per_agent {
        reqs.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut current: Vec<Request> = Vec::new();
        for req in reqs {
            if let Some(last) = current.last() {
                if req.time - last.time > timeout {
                    sessions.push(Session {
                        agent: agent.clone(),
                        start_time: current[0].time,
                        requests: std::mem::take(&mut current),
                    });
                }
            }
            current.push(req);
        }
        if !current.is_empty() {
            sessions.push(Session {
                agent: agent.clone(),
                start_time: current[0].time,
                requests: current,
            });
        }
    }

    sessions.sort_by(|a, b| {
        a.start_time
            .total_cmp(&b.start_time)
            .then_with(|| a.agent.label().cmp(&b.agent.label()))
    });
    Ok(sessions)
}

/// Dataset-level counts in the style of a traffic-summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub num_requests: u64,
    pub num_sessions: u64,
    pub num_agents: u64,
    pub num_ips: u64,
    pub num_resources: u64,
    pub avg_session_length: f64,
}

impl SummaryStats {
    /// Average session length is always the exact ratio of the counts.
    pub fn avg_length(num_requests: u64, num_sessions: u64) -> f64 {
        if num_sessions == 0 {
            0.0
        } else {
            num_requests as f64 / num_sessions as f64
        }
    }
}

pub fn summarize(sessions: &[Session]) -> SummaryStats {
    let mut agents: HashSet<&AgentId> = HashSet::new();
    let mut ips: HashSet<&str> = HashSet::new();
    let mut resources: HashSet<&str> = HashSet::new();
    let mut num_requests = 0u64;

    for session in sessions {
        agents.insert(&session.agent);
        for req in &session.requests {
            num_requests += 1;
            resources.insert(req.path.as_str());
            if let Some(ip) = req.agent.ip() {
                ips.insert(ip);
            }
        }
    }

    let num_sessions = sessions.len() as u64;
    SummaryStats {
        num_requests,
        num_sessions,
        num_agents: agents.len() as u64,
        num_ips: ips.len() as u64,
        num_resources: resources.len() as u64,
        avg_session_length: SummaryStats::avg_length(num_requests, num_sessions),
    }
}

/// Open a file for buffered reading, transparently decompressing `.gz`.
pub fn open_reader(path: &Path) -> Result<Box<dyn BufRead>, IngestError> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

/// Read a log file (gzip accepted by `.gz` extension). Malformed lines are
/// skipped; their count is returned alongside the parsed entries.
pub fn read_log_file<P: AsRef<Path>>(
    path: P,
    format: LogFormat,
) -> Result<(Vec<RawLogEntry>, usize), IngestError> {
    let reader = open_reader(path.as_ref())?;
    let mut entries = Vec::new();
    let mut skipped = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_log_line(&line, format) {
            Ok(entry) => entries.push(entry),
            Err(_) => skipped += 1,
        }
    }
    Ok((entries, skipped))
}
