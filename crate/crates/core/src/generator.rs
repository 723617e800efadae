//! The traffic generation engine. A fixed-size pool of active sessions is
//! maintained: session start times come from a global exponential arrival
//! clock, session lengths from a Zeta draw, robots from the inactive pool
//! weighted by training-data request share, intra-session gaps from a
//! global lognormal, and request paths from the per-robot resource model.
//! Also owns the end-to-end model fit from an observed trace and the
//! model/trace file formats.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::io::{self, Read, Write};

use chrono::DateTime;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::{
    fit_lognormal, fit_poisson_rate, fit_zeta, sample_exponential, sample_lognormal, sample_zeta,
};
use crate::evalcmp::extract_intra_session_iats;
use crate::ingest::{sessionize, IngestError};
use crate::log_model::{AgentId, AgentIdMode, Request, Session, Trace, TraceOrigin};
use crate::resource_model::{
    build_catalog, PathModel, PriorStrengths, ResourceCatalog, ResourceError, RobotHistory,
};
use crate::{CategoricalParams, ExponentialParams, FitError, LognormalParams, ZetaParams};

/// Schema tag written into model files.
pub const MODEL_SCHEMA: &str = "robotraffic-model/1";

pub const TRACE_CSV_HEADER: [&str; 4] = ["time", "robot", "session_id", "path"];

/// Default cap on a single Zeta session-length draw; power-law draws are
/// unbounded and a pathological one must not hang a run.
pub const DEFAULT_SESSION_CAP: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("empty input")]
    EmptyInput,
    #[error("no inactive robot to draw")]
    NoInactiveRobot,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid stop condition: {0}")]
    InvalidStopCondition(String),
    #[error("{stage}: {source}")]
    Fit {
        stage: &'static str,
        #[source]
        source: FitError,
    },
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("trace format: {0}")]
    TraceFormat(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

fn stage(stage: &'static str) -> impl Fn(FitError) -> GeneratorError {
    move |source| GeneratorError::Fit { stage, source }
}

/// Settings the fit was produced under; recorded in the model file for
/// provenance and reuse by downstream commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Sessionization timeout in seconds.
    pub timeout: f64,
    pub agent_mode: AgentIdMode,
    pub priors: PriorStrengths,
    /// When set, overrides the pool size estimated from the data.
    pub pool_size_override: Option<u32>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            timeout: 1800.0,
            agent_mode: AgentIdMode::default(),
            priors: PriorStrengths::default(),
            pool_size_override: None,
        }
    }
}

/// Everything needed to generate traffic: fitted distribution parameters,
/// robot identities and weights, the resource catalog with per-robot
/// request histories, and the pool size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModel {
    pub schema: String,
    pub tool_version: String,
    pub fit_config: FitConfig,
    /// Session arrival rate (sessions per second).
    pub lambda: ExponentialParams,
    /// Session length exponent.
    pub zeta: ZetaParams,
    /// Intra-session gap distribution.
    pub lognormal: LognormalParams,
    pub robots: Vec<AgentId>,
    /// Robot selection weights, aligned with `robots`.
    pub rho: CategoricalParams,
    pub pool_size: u32,
    pub catalog: ResourceCatalog,
    /// Per-robot training request counts, aligned with `robots`; the MAP
    /// tables are derived from these together with the catalog and prior
    /// strengths.
    pub histories: Vec<RobotHistory>,
}

impl FittedModel {
    /// Fit every model component from an observed trace.
    pub fn fit(trace: &Trace, cfg: &FitConfig) -> Result<FittedModel, GeneratorError> {
        if trace.is_empty() {
            return Err(GeneratorError::EmptyInput);
        }

        let sessions = sessionize(trace.requests().to_vec(), cfg.timeout)?;
        let span = trace.span();
        let lambda = fit_poisson_rate(sessions.len() as u64, span)
            .map_err(stage("session arrival rate fit"))?;

        let lengths: Vec<u64> = sessions.iter().map(|s| s.len() as u64).collect();
        let zeta = fit_zeta(&lengths).map_err(stage("session length fit"))?;

        // 1-second log resolution produces zero gaps; the lognormal is fit
        // on the positive ones.
        let gaps: Vec<f64> =
            extract_intra_session_iats(&sessions).into_iter().filter(|g| *g > 0.0).collect();
        let lognormal = fit_lognormal(&gaps).map_err(stage("intra-session gap fit"))?;

        let mut request_counts: HashMap<AgentId, u64> = HashMap::new();
        for req in trace.requests() {
            *request_counts.entry(req.agent.clone()).or_insert(0) += 1;
        }
        let mut robots_with_counts: Vec<(AgentId, u64)> = request_counts.into_iter().collect();
        robots_with_counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.label().cmp(&b.0.label())));
        let weights: Vec<f64> = robots_with_counts.iter().map(|(_, c)| *c as f64).collect();
        let rho = CategoricalParams::from_weights(&weights).map_err(stage("robot weight fit"))?;
        let robots: Vec<AgentId> = robots_with_counts.into_iter().map(|(a, _)| a).collect();

        let catalog = build_catalog(trace)?;
        let robot_index: HashMap<&AgentId, u32> =
            robots.iter().enumerate().map(|(i, a)| (a, i as u32)).collect();
        let mut history_maps: Vec<BTreeMap<(u32, u32, u32), u64>> =
            vec![BTreeMap::new(); robots.len()];
        for req in trace.requests() {
            let robot = robot_index[&req.agent] as usize;
            let loc = catalog.locate(&req.path).expect("catalog was built from this trace");
            *history_maps[robot].entry(loc).or_insert(0) += 1;
        }
        let histories: Vec<RobotHistory> =
            history_maps.into_iter().map(RobotHistory::from_counts).collect();

        let pool_size = match cfg.pool_size_override {
            Some(n) => n.max(1).min(robots.len() as u32),
            None => estimate_pool_size(&sessions)?.min(robots.len() as u32),
        };

        let model = FittedModel {
            schema: MODEL_SCHEMA.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            fit_config: cfg.clone(),
            lambda,
            zeta,
            lognormal,
            robots,
            rho,
            pool_size,
            catalog,
            histories,
        };
        model.validate().map_err(GeneratorError::InvalidModel)?;
        Ok(model)
    }

    /// Full consistency check; run after deserialization.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema != MODEL_SCHEMA {
            return Err(format!("unsupported schema `{}` (expected {MODEL_SCHEMA})", self.schema));
        }
        ExponentialParams::new(self.lambda.lambda).map_err(|e| e.to_string())?;
        ZetaParams::new(self.zeta.s).map_err(|e| e.to_string())?;
        LognormalParams::new(self.lognormal.mu, self.lognormal.sigma).map_err(|e| e.to_string())?;
        if self.robots.is_empty() {
            return Err("model has no robots".into());
        }
        CategoricalParams::new(self.rho.probs().to_vec())
            .map_err(|e| format!("rho: {e}"))?;
        if self.rho.len() != self.robots.len() {
            return Err(format!(
                "rho has {} entries for {} robots",
                self.rho.len(),
                self.robots.len()
            ));
        }
        if self.pool_size < 1 || self.pool_size as usize > self.robots.len() {
            return Err(format!(
                "pool size {} outside 1..={}",
                self.pool_size,
                self.robots.len()
            ));
        }
        if !(self.fit_config.timeout > 0.0) {
            return Err("fit timeout must be positive".into());
        }
        if !(self.fit_config.priors.alpha > 0.0) || !(self.fit_config.priors.gamma > 0.0) {
            return Err("prior strengths must be positive".into());
        }
        self.catalog.check().map_err(|e| e.to_string())?;
        if self.histories.len() != self.robots.len() {
            return Err(format!(
                "{} histories for {} robots",
                self.histories.len(),
                self.robots.len()
            ));
        }
        for (i, h) in self.histories.iter().enumerate() {
            if !h.subdirs.windows(2).all(|w| w[0].subdir < w[1].subdir) {
                return Err(format!("robot {i}: history subdirs not sorted"));
            }
            for sh in &h.subdirs {
                let Some(entry) = self.catalog.subdirs().get(sh.subdir as usize) else {
                    return Err(format!("robot {i}: history references subdir {}", sh.subdir));
                };
                for c in &sh.counts {
                    let ok = entry
                        .types
                        .get(c.type_idx as usize)
                        .is_some_and(|t| (c.res_idx as usize) < t.resources.len());
                    if !ok || c.count == 0 {
                        return Err(format!(
                            "robot {i}: bad history entry in subdir {}",
                            sh.subdir
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(json: &str) -> Result<FittedModel, GeneratorError> {
        let model: FittedModel = serde_json::from_str(json)?;
        model.validate().map_err(GeneratorError::InvalidModel)?;
        Ok(model)
    }
}

/// Mean number of sessions whose [start, end] interval covers each observed
/// request, rounded, and at least 1.
pub fn estimate_pool_size(sessions: &[Session]) -> Result<u32, GeneratorError> {
    if sessions.is_empty() {
        return Err(GeneratorError::EmptyInput);
    }
    let mut starts: Vec<f64> = sessions.iter().map(|s| s.start_time).collect();
    let mut ends: Vec<f64> = sessions.iter().map(|s| s.end_time()).collect();
    let mut times: Vec<f64> =
        sessions.iter().flat_map(|s| s.requests.iter().map(|r| r.time)).collect();
    starts.sort_by(f64::total_cmp);
    ends.sort_by(f64::total_cmp);
    times.sort_by(f64::total_cmp);

    let mut started = 0usize;
    let mut ended = 0usize;
    let mut total = 0u64;
    for &t in &times {
        while started < starts.len() && starts[started] <= t {
            started += 1;
        }
        while ended < ends.len() && ends[ended] < t {
            ended += 1;
        }
        total += (started - ended) as u64;
    }
    let mean = total as f64 / times.len() as f64;
    Ok((mean.round() as u32).max(1))
}

/// Draw an inactive robot with probability proportional to its weight,
/// renormalized over the inactive pool.
pub fn draw_robot<R: rand::Rng + ?Sized>(
    rng: &mut R,
    rho: &CategoricalParams,
    active: &[bool],
) -> Result<u32, GeneratorError> {
    debug_assert_eq!(rho.len(), active.len());
    let inactive_mass: f64 = rho
        .probs()
        .iter()
        .zip(active)
        .filter(|(_, a)| !**a)
        .map(|(p, _)| *p)
        .sum();
    if inactive_mass <= 0.0 {
        return Err(GeneratorError::NoInactiveRobot);
    }
    let u = rng.random::<f64>() * inactive_mass;
    let mut acc = 0.0;
    let mut last = None;
    for (i, (p, a)) in rho.probs().iter().zip(active).enumerate() {
        if *a || !(*p > 0.0) {
            continue;
        }
        acc += *p;
        last = Some(i as u32);
        if u < acc {
            return Ok(i as u32);
        }
    }
    last.ok_or(GeneratorError::NoInactiveRobot)
}

/// When to stop a generation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCondition {
    /// Emit exactly this many requests; in-flight sessions truncate.
    RequestCount(u64),
    /// Stop at the first event past this time.
    TimeHorizon(f64),
}

/// One session slot in the active pool.
#[derive(Debug, Clone)]
pub struct ActiveSession {
    pub robot: u32,
    pub session_id: u64,
    pub start_time: f64,
    pub target_length: u64,
    pub emitted: u64,
    pub next_request_time: f64,
}

// Heap ordering: earliest next request first; ties broken by robot index
// then session id so runs are reproducible.
impl PartialEq for ActiveSession {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for ActiveSession {}
impl PartialOrd for ActiveSession {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ActiveSession {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.next_request_time
            .total_cmp(&other.next_request_time)
            .then_with(|| self.robot.cmp(&other.robot))
            .then_with(|| self.session_id.cmp(&other.session_id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRequest {
    pub time: f64,
    /// Index into the model's robot list.
    pub robot: u32,
    pub session_id: u64,
    pub path: String,
}

/// Lifecycle record for every session admitted during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSessionInfo {
    pub id: u64,
    pub robot: u32,
    pub start_time: f64,
    pub target_length: u64,
    pub emitted: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedTrace {
    pub requests: Vec<GeneratedRequest>,
    pub robots: Vec<AgentId>,
    pub sessions: Vec<GeneratedSessionInfo>,
    pub seed: u64,
    pub session_cap: u64,
    /// Number of Zeta draws clipped to the session cap.
    pub capped_draws: u64,
}

impl GeneratedTrace {
    /// Sessions that emitted requests but were cut off by the stop
    /// condition before reaching their drawn length.
    pub fn truncated_session_ids(&self) -> Vec<u64> {
        self.sessions
            .iter()
            .filter(|s| s.emitted > 0 && s.emitted < s.target_length)
            .map(|s| s.id)
            .collect()
    }

    /// View as a generic trace with robots keyed by label.
    pub fn to_trace(&self) -> Trace {
        let agents: Vec<AgentId> = self
            .robots
            .iter()
            .map(|r| {
                AgentId::new(AgentIdMode::UserAgent, Some(r.label()), None)
                    .expect("robot label is nonempty")
            })
            .collect();
        let requests = self
            .requests
            .iter()
            .map(|r| Request {
                agent: agents[r.robot as usize].clone(),
                time: r.time,
                path: r.path.clone(),
            })
            .collect();
        Trace::new(requests, TraceOrigin::Generated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateOptions {
    pub seed: u64,
    pub session_cap: u64,
}

impl GenerateOptions {
    pub fn new(seed: u64) -> Self {
        GenerateOptions { seed, session_cap: DEFAULT_SESSION_CAP }
    }
}

/// Event-driven simulation state. `step` emits one request; the active pool
/// always holds exactly `pool_size` sessions.
pub struct Generator<'m> {
    model: &'m FittedModel,
    paths: PathModel<'m>,
    rng: ChaCha8Rng,
    active: Vec<bool>,
    heap: BinaryHeap<Reverse<ActiveSession>>,
    clock: f64,
    next_session_id: u64,
    sessions: Vec<GeneratedSessionInfo>,
    session_cap: u64,
    capped_draws: u64,
}

impl<'m> Generator<'m> {
    pub fn new(model: &'m FittedModel, opts: GenerateOptions) -> Result<Self, GeneratorError> {
        model.validate().map_err(GeneratorError::InvalidModel)?;
        if opts.session_cap == 0 {
            return Err(GeneratorError::InvalidStopCondition("session cap must be >= 1".into()));
        }
        let paths = PathModel::new(&model.catalog, &model.histories, model.fit_config.priors)?;
        let mut gen = Generator {
            model,
            paths,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            active: vec![false; model.robots.len()],
            heap: BinaryHeap::with_capacity(model.pool_size as usize),
            clock: 0.0,
            next_session_id: 0,
            sessions: Vec::new(),
            session_cap: opts.session_cap,
            capped_draws: 0,
        };
        for _ in 0..model.pool_size {
            gen.admit_session(0.0)?;
        }
        Ok(gen)
    }

    /// Admit a replacement session. Its start time comes from the global
    /// arrival clock, clamped to be no earlier than `floor` (the retirement
    /// time of the slot being refilled) so the pool never runs below size.
    fn admit_session(&mut self, floor: f64) -> Result<(), GeneratorError> {
        let dt = sample_exponential(&mut self.rng, &self.model.lambda);
        self.clock += dt;
        let start = self.clock.max(floor);

        let robot = draw_robot(&mut self.rng, &self.model.rho, &self.active)?;
        self.active[robot as usize] = true;

        let mut target_length = sample_zeta(&mut self.rng, &self.model.zeta);
        if target_length > self.session_cap {
            target_length = self.session_cap;
            self.capped_draws += 1;
        }

        let session_id = self.next_session_id;
        self.next_session_id += 1;
        self.sessions.push(GeneratedSessionInfo {
            id: session_id,
            robot,
            start_time: start,
            target_length,
            emitted: 0,
        });
        self.heap.push(Reverse(ActiveSession {
            robot,
            session_id,
            start_time: start,
            target_length,
            emitted: 0,
            next_request_time: start,
        }));
        Ok(())
    }

    /// Timestamp of the next request to be emitted.
    pub fn peek_time(&self) -> f64 {
        self.heap.peek().map(|Reverse(s)| s.next_request_time).expect("pool is never empty")
    }

    pub fn active_count(&self) -> usize {
        self.heap.len()
    }

    pub fn active_robots(&self) -> &[bool] {
        &self.active
    }

    /// Emit the next request: pop the earliest session, sample a path,
    /// schedule its next request or retire it and admit a replacement.
    pub fn step(&mut self) -> Result<GeneratedRequest, GeneratorError> {
        let Reverse(mut session) = self.heap.pop().expect("pool is never empty");
        let path = self.paths.sample_request_path(&mut self.rng, session.robot)?.to_string();
        let request = GeneratedRequest {
            time: session.next_request_time,
            robot: session.robot,
            session_id: session.session_id,
            path,
        };
        session.emitted += 1;
        self.sessions[session.session_id as usize].emitted = session.emitted;

        if session.emitted < session.target_length {
            let gap = sample_lognormal(&mut self.rng, &self.model.lognormal);
            session.next_request_time += gap;
            self.heap.push(Reverse(session));
        } else {
            self.active[session.robot as usize] = false;
            self.admit_session(request.time)?;
        }
        Ok(request)
    }

    fn finish(self, requests: Vec<GeneratedRequest>, seed: u64) -> GeneratedTrace {
        GeneratedTrace {
            requests,
            robots: self.model.robots.clone(),
            sessions: self.sessions,
            seed,
            session_cap: self.session_cap,
            capped_draws: self.capped_draws,
        }
    }
}

/// Run a full generation. Deterministic: the same model, stop condition,
/// and options produce an identical trace.
pub fn generate(
    model: &FittedModel,
    stop: StopCondition,
    opts: GenerateOptions,
) -> Result<GeneratedTrace, GeneratorError> {
    match stop {
        StopCondition::RequestCount(0) => {
            return Err(GeneratorError::InvalidStopCondition("request count must be >= 1".into()))
        }
        StopCondition::TimeHorizon(t) if !(t > 0.0) => {
            return Err(GeneratorError::InvalidStopCondition(format!(
                "time horizon must be positive, got {t}"
            )))
        }
        _ => {}
    }

    let mut gen = Generator::new(model, opts)?;
    let mut requests = Vec::new();
    match stop {
        StopCondition::RequestCount(count) => {
            requests.reserve(count as usize);
            for _ in 0..count {
                requests.push(gen.step()?);
            }
        }
        StopCondition::TimeHorizon(horizon) => {
            while gen.peek_time() <= horizon {
                requests.push(gen.step()?);
            }
        }
    }
    Ok(gen.finish(requests, opts.seed))
}

// ---------------------------------------------------------------------------
// Trace file formats
// ---------------------------------------------------------------------------

/// CSV with header `time,robot,session_id,path`; times at millisecond
/// precision, rows time-ordered.
pub fn write_trace_csv<W: Write>(trace: &GeneratedTrace, writer: W) -> Result<(), GeneratorError> {
    let labels: Vec<String> = trace.robots.iter().map(|r| r.label()).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_CSV_HEADER)?;
    for r in &trace.requests {
        w.write_record([
            format!("{:.3}", r.time).as_str(),
            &labels[r.robot as usize],
            &r.session_id.to_string(),
            &r.path,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a generated-trace CSV back as a [`Trace`] with robots keyed by
/// label.
pub fn read_trace_csv<R: Read>(reader: R) -> Result<Trace, GeneratorError> {
    let mut r = csv::Reader::from_reader(reader);
    {
        let headers = r.headers()?;
        if headers != &csv::StringRecord::from(TRACE_CSV_HEADER.to_vec()) {
            return Err(GeneratorError::TraceFormat(format!(
                "unexpected header {:?}",
                headers
            )));
        }
    }
    let mut requests = Vec::new();
    for record in r.records() {
        let record = record?;
        let time: f64 = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GeneratorError::TraceFormat(format!("bad time in {record:?}")))?;
        let robot = record
            .get(1)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| GeneratorError::TraceFormat(format!("missing robot in {record:?}")))?;
        let path = record
            .get(3)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| GeneratorError::TraceFormat(format!("missing path in {record:?}")))?;
        let agent = AgentId::new(AgentIdMode::UserAgent, Some(robot.to_string()), None)
            .map_err(|e| GeneratorError::TraceFormat(e.to_string()))?;
        requests.push(Request { agent, time, path: path.to_string() });
    }
    Ok(Trace::new(requests, TraceOrigin::Generated))
}

/// Whether the first line of a file looks like a generated-trace CSV.
pub fn is_trace_csv_header(first_line: &str) -> bool {
    first_line.trim_end() == TRACE_CSV_HEADER.join(",")
}

fn synthetic_ip(robot: u32) -> String {
    format!(
        "10.{}.{}.{}",
        (robot >> 16) & 0xff,
        (robot >> 8) & 0xff,
        robot & 0xff
    )
}

/// Re-export a generated trace as Combined Log Format lines for feeding
/// third-party tools: synthetic per-robot IP, fixed GET/200, 1-second
/// timestamps offset by `base_epoch`.
pub fn write_clf<W: Write>(
    trace: &GeneratedTrace,
    base_epoch: i64,
    writer: W,
) -> Result<(), GeneratorError> {
    let mut writer = io::BufWriter::new(writer);
    for r in &trace.requests {
        let robot = &trace.robots[r.robot as usize];
        let secs = base_epoch + r.time.floor() as i64;
        let when = DateTime::from_timestamp(secs, 0)
            .ok_or_else(|| GeneratorError::TraceFormat(format!("timestamp {secs} out of range")))?;
        let ua = robot.user_agent().map(str::to_string).unwrap_or_else(|| robot.label());
        writeln!(
            writer,
            "{} - - [{}] \"GET {} HTTP/1.1\" 200 - \"-\" \"{}\"",
            synthetic_ip(r.robot),
            when.format("%d/%b/%Y:%H:%M:%S %z"),
            r.path,
            ua,
        )?;
    }
    writer.flush()?;
    Ok(())
}
