//! `robotraffic`: fit a web-robot traffic model from access logs, generate
//! synthetic traces, summarize datasets, run cache simulations, and compare
//! traces.
//!
//! Exit codes: 2 I/O or usage, 3 fit errors, 4 invalid model, 5 bad
//! capacity grid or empty trace in cache-sim.

mod config;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use robotraffic_core::cache_sim::{default_capacity_grid, distinct_paths, sweep, CachePolicy};
use robotraffic_core::evalcmp::{compare, write_bundle, CompareOptions};
use robotraffic_core::generator::{
    generate, read_trace_csv, write_clf, write_trace_csv, FitConfig, FittedModel, GenerateOptions,
    GeneratorError, StopCondition, DEFAULT_SESSION_CAP,
};
use robotraffic_core::ingest::{
    entries_to_requests, filter_robots, open_reader, read_log_file, sessionize, summarize,
    LogFormat, UserAgentDatabase,
};
use robotraffic_core::log_model::{AgentIdMode, Trace, TraceOrigin};
use robotraffic_core::resource_model::PriorStrengths;

use config::{pick, pick_opt, FileConfig};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "robotraffic", version, about = "Web-robot traffic modeling toolkit")]
struct Cli {
    /// Cap worker parallelism (default: machine parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a traffic model from an access log and print summary statistics
    Fit(FitArgs),
    /// Generate a synthetic trace from a fitted model
    Generate(GenerateArgs),
    /// Print robot-traffic summary statistics for a log
    Summarize(SummarizeArgs),
    /// Simulate LFU/LRU caches over a trace and emit hit-rate curves
    CacheSim(CacheSimArgs),
    /// Compare an original trace against a generated one
    Compare(CompareArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Access log (NCSA common/combined; .gz accepted)
    #[arg(long)]
    input: PathBuf,
    /// Robot User-Agent substring database (one pattern per line)
    #[arg(long)]
    ua_db: Option<PathBuf>,
    /// Log format: common | combined
    #[arg(long)]
    format: Option<String>,
    /// Session timeout T in seconds
    #[arg(long)]
    timeout: Option<f64>,
    /// Agent identity: ua | ip | ua+ip
    #[arg(long)]
    agent_mode: Option<String>,
    /// Type-prior strength alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Resource-prior strength gamma
    #[arg(long)]
    gamma: Option<f64>,
    /// Scale prior strengths by each subdirectory's observation count
    #[arg(long)]
    data_scaled_priors: bool,
    /// Override the estimated pool size N
    #[arg(long)]
    pool_size: Option<u32>,
    /// Output model JSON path
    #[arg(long)]
    output: PathBuf,
    /// JSON config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("stop").required(true).multiple(false)))]
struct GenerateArgs {
    /// Fitted model JSON
    #[arg(long)]
    model: PathBuf,
    /// Stop after exactly this many requests
    #[arg(long, group = "stop")]
    requests: Option<u64>,
    /// Stop at the first event past this many seconds
    #[arg(long, group = "stop")]
    horizon: Option<f64>,
    /// RNG seed (required; all randomness flows from it)
    #[arg(long)]
    seed: u64,
    /// Cap on a single session-length draw
    #[arg(long)]
    session_cap: Option<u64>,
    /// Output trace CSV path
    #[arg(long)]
    output: PathBuf,
    /// Also export the trace as Combined Log Format lines
    #[arg(long)]
    clf_out: Option<PathBuf>,
    /// Epoch offset (seconds) for CLF timestamps
    #[arg(long)]
    clf_epoch: Option<i64>,
    /// JSON config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Robot database; without it all traffic is summarized
    #[arg(long)]
    ua_db: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    agent_mode: Option<String>,
    /// Also write the JSON to this path
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CacheSimArgs {
    /// Trace input: access log or generated-trace CSV (auto-detected)
    #[arg(long)]
    trace: PathBuf,
    /// Robot database applied to log inputs
    #[arg(long)]
    ua_db: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Eviction policies (comma-separated: lfu,lru)
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    /// Capacity grid (comma-separated object counts, strictly increasing)
    #[arg(long, value_delimiter = ',')]
    capacities: Vec<usize>,
    /// Output curve CSV path
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Original trace (access log or trace CSV)
    #[arg(long)]
    original: PathBuf,
    /// Generated trace (access log or trace CSV)
    #[arg(long)]
    generated: PathBuf,
    #[arg(long)]
    ua_db: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    agent_mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    capacities: Vec<usize>,
    /// Directory for the report bundle
    #[arg(long)]
    outdir: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

type CmdResult = Result<(), Failure>;

fn fail(code: u8, message: impl Display) -> Failure {
    Failure { code, message: message.to_string() }
}

fn io_fail(stage: &str, err: impl Display) -> Failure {
    fail(2, format!("{stage}: {err}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => cmd_fit(args, cli.threads),
        Command::Generate(args) => cmd_generate(args, cli.threads),
        Command::Summarize(args) => cmd_summarize(args, cli.threads),
        Command::CacheSim(args) => cmd_cache_sim(args, cli.threads),
        Command::Compare(args) => cmd_compare(args, cli.threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("robotraffic: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn init_threads(flag: Option<usize>, file: Option<usize>) {
    if let Some(n) = flag.or(file) {
        // best effort; a second init in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn parse_as<T: FromStr>(what: &str, value: Option<String>) -> Result<Option<T>, Failure>
where
    T::Err: Display,
{
    match value {
        None => Ok(None),
        Some(s) => s.parse::<T>().map(Some).map_err(|e| fail(2, format!("{what}: {e}"))),
    }
}

fn parse_policies(values: &[String], file: Option<Vec<String>>) -> Result<Vec<CachePolicy>, Failure> {
    let raw: Vec<String> = if values.is_empty() { file.unwrap_or_default() } else { values.to_vec() };
    if raw.is_empty() {
        return Ok(vec![CachePolicy::Lfu, CachePolicy::Lru]);
    }
    raw.iter()
        .map(|s| s.parse::<CachePolicy>().map_err(|e| fail(5, e)))
        .collect()
}

fn read_log(
    path: &Path,
    format: LogFormat,
    db: Option<&UserAgentDatabase>,
    mode: AgentIdMode,
) -> Result<Trace, Failure> {
    let (entries, skipped) =
        read_log_file(path, format).map_err(|e| io_fail(&format!("reading {}", path.display()), e))?;
    if skipped > 0 {
        eprintln!("robotraffic: skipped {skipped} malformed line(s) in {}", path.display());
    }
    let entries = match db {
        Some(db) => filter_robots(entries, db),
        None => entries,
    };
    Ok(Trace::new(entries_to_requests(&entries, mode), TraceOrigin::Observed))
}

/// A trace file is either a generated-trace CSV (detected by header) or an
/// access log.
fn load_trace(
    path: &Path,
    format: LogFormat,
    db: Option<&UserAgentDatabase>,
    mode: AgentIdMode,
) -> Result<Trace, Failure> {
    let stage = format!("reading {}", path.display());
    let mut reader = open_reader(path).map_err(|e| io_fail(&stage, e))?;
    let mut first_line = String::new();
    std::io::BufRead::read_line(&mut reader, &mut first_line).map_err(|e| io_fail(&stage, e))?;

    if robotraffic_core::generator::is_trace_csv_header(&first_line) {
        let reader = open_reader(path).map_err(|e| io_fail(&stage, e))?;
        read_trace_csv(reader).map_err(|e| io_fail(&stage, e))
    } else {
        read_log(path, format, db, mode)
    }
}

fn load_ua_db(path: Option<&Path>) -> Result<Option<UserAgentDatabase>, Failure> {
    match path {
        None => Ok(None),
        Some(p) => UserAgentDatabase::from_file(p)
            .map(Some)
            .map_err(|e| io_fail(&format!("reading {}", p.display()), e)),
    }
}

fn write_sidecar(artifact: &Path, meta: &serde_json::Value) -> Result<(), Failure> {
    let path = artifact.with_extension(format!(
        "{}.meta.json",
        artifact.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    let text = serde_json::to_string_pretty(meta).expect("meta serializes");
    fs::write(&path, text + "\n").map_err(|e| io_fail(&format!("writing {}", path.display()), e))
}

fn cmd_fit(args: &FitArgs, threads: Option<usize>) -> CmdResult {
    let file = FileConfig::load(args.config.as_deref()).map_err(|e| fail(2, e))?;
    init_threads(threads, file.threads);

    let format: LogFormat =
        parse_as("format", pick_opt(args.format.clone(), file.format.clone()))?
            .unwrap_or(LogFormat::Combined);
    let mode: AgentIdMode =
        parse_as("agent-mode", pick_opt(args.agent_mode.clone(), file.agent_mode.clone()))?
            .unwrap_or_default();
    let ua_db_path = pick_opt(args.ua_db.clone(), file.ua_db.clone())
        .ok_or_else(|| fail(2, "fit requires --ua-db (or ua_db in the config file)"))?;
    let cfg = FitConfig {
        timeout: pick(args.timeout, file.timeout, 1800.0),
        agent_mode: mode,
        priors: PriorStrengths {
            alpha: pick(args.alpha, file.alpha, 1.0),
            gamma: pick(args.gamma, file.gamma, 1.0),
            data_scaled: args.data_scaled_priors || file.data_scaled_priors.unwrap_or(false),
        },
        pool_size_override: pick_opt(args.pool_size, file.pool_size),
    };

    let db = load_ua_db(Some(&ua_db_path))?.expect("path given");
    let trace = read_log(&args.input, format, Some(&db), mode)?;
    if trace.is_empty() {
        return Err(fail(3, "fit failed at robot filtering: no robot traffic after filtering"));
    }

    let model = FittedModel::fit(&trace, &cfg).map_err(|e| match e {
        GeneratorError::Io(e) => io_fail("fit", e),
        other => fail(3, format!("fit failed at {other}")),
    })?;
    let json = model.to_json().map_err(|e| fail(3, format!("serializing model: {e}")))?;
    fs::write(&args.output, json)
        .map_err(|e| io_fail(&format!("writing {}", args.output.display()), e))?;

    let sessions = sessionize(trace.requests().to_vec(), cfg.timeout)
        .map_err(|e| fail(3, format!("fit failed at sessionization: {e}")))?;
    let stats = summarize(&sessions);
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

fn cmd_generate(args: &GenerateArgs, threads: Option<usize>) -> CmdResult {
    let file = FileConfig::load(args.config.as_deref()).map_err(|e| fail(2, e))?;
    init_threads(threads, file.threads);

    let model_bytes = fs::read(&args.model)
        .map_err(|e| io_fail(&format!("reading {}", args.model.display()), e))?;
    let model_text = String::from_utf8(model_bytes.clone())
        .map_err(|e| fail(4, format!("model is not UTF-8: {e}")))?;
    let model = FittedModel::from_json(&model_text)
        .map_err(|e| fail(4, format!("invalid model {}: {e}", args.model.display())))?;
    let model_hash: String =
        Sha256::digest(&model_bytes).iter().map(|b| format!("{b:02x}")).collect();

    let stop = match (args.requests, args.horizon) {
        (Some(n), None) => StopCondition::RequestCount(n),
        (None, Some(t)) => StopCondition::TimeHorizon(t),
        _ => unreachable!("clap enforces the stop group"),
    };
    let opts = GenerateOptions {
        seed: args.seed,
        session_cap: pick(args.session_cap, file.session_cap, DEFAULT_SESSION_CAP),
    };

    let trace = generate(&model, stop, opts).map_err(|e| match e {
        GeneratorError::Io(e) => io_fail("generate", e),
        other => fail(4, format!("generate failed: {other}")),
    })?;

    let out = fs::File::create(&args.output)
        .map_err(|e| io_fail(&format!("writing {}", args.output.display()), e))?;
    write_trace_csv(&trace, out)
        .map_err(|e| io_fail(&format!("writing {}", args.output.display()), e))?;

    let clf_epoch = pick(args.clf_epoch, file.clf_epoch, 1_000_000_000);
    if let Some(clf_path) = &args.clf_out {
        let out = fs::File::create(clf_path)
            .map_err(|e| io_fail(&format!("writing {}", clf_path.display()), e))?;
        write_clf(&trace, clf_epoch, out)
            .map_err(|e| io_fail(&format!("writing {}", clf_path.display()), e))?;
    }

    let meta = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "seed": trace.seed,
        "model_path": args.model.display().to_string(),
        "model_sha256": model_hash,
        "stop": stop,
        "session_cap": trace.session_cap,
        "requests_emitted": trace.requests.len(),
        "sessions_admitted": trace.sessions.len(),
        "truncated_sessions": trace.truncated_session_ids(),
        "capped_draws": trace.capped_draws,
        "clf_out": args.clf_out.as_ref().map(|p| p.display().to_string()),
        "clf_epoch": args.clf_out.as_ref().map(|_| clf_epoch),
    });
    write_sidecar(&args.output, &meta)?;
    eprintln!(
        "robotraffic: wrote {} requests ({} sessions, {} truncated, {} capped draws)",
        trace.requests.len(),
        trace.sessions.len(),
        trace.truncated_session_ids().len(),
        trace.capped_draws
    );
    Ok(())
}

fn cmd_summarize(args: &SummarizeArgs, threads: Option<usize>) -> CmdResult {
    let file = FileConfig::load(args.config.as_deref()).map_err(|e| fail(2, e))?;
    init_threads(threads, file.threads);

    let format: LogFormat =
        parse_as("format", pick_opt(args.format.clone(), file.format.clone()))?
            .unwrap_or(LogFormat::Combined);
    let mode: AgentIdMode =
        parse_as("agent-mode", pick_opt(args.agent_mode.clone(), file.agent_mode.clone()))?
            .unwrap_or_default();
    let timeout = pick(args.timeout, file.timeout, 1800.0);
    let db = load_ua_db(pick_opt(args.ua_db.clone(), file.ua_db.clone()).as_deref())?;

    let trace = load_trace(&args.input, format, db.as_ref(), mode)?;
    let sessions = sessionize(trace.requests().to_vec(), timeout)
        .map_err(|e| fail(3, format!("sessionization: {e}")))?;
    let stats = summarize(&sessions);
    let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    println!("{text}");
    if let Some(out) = &args.output {
        fs::write(out, text + "\n")
            .map_err(|e| io_fail(&format!("writing {}", out.display()), e))?;
    }
    Ok(())
}

fn cmd_cache_sim(args: &CacheSimArgs, threads: Option<usize>) -> CmdResult {
    let file = FileConfig::load(args.config.as_deref()).map_err(|e| fail(2, e))?;
    init_threads(threads, file.threads);

    let format: LogFormat =
        parse_as("format", pick_opt(args.format.clone(), file.format.clone()))?
            .unwrap_or(LogFormat::Combined);
    let policies = parse_policies(&args.policy, file.policies.clone())?;
    let db = load_ua_db(pick_opt(args.ua_db.clone(), file.ua_db.clone()).as_deref())?;

    let trace = load_trace(&args.trace, format, db.as_ref(), AgentIdMode::default())?;
    if trace.is_empty() {
        return Err(fail(5, format!("empty trace {}", args.trace.display())));
    }
    let paths: Vec<&str> = trace.requests().iter().map(|r| r.path.as_str()).collect();

    let capacities = if args.capacities.is_empty() {
        match &file.capacities {
            Some(c) if !c.is_empty() => c.clone(),
            _ => default_capacity_grid(distinct_paths(&paths)),
        }
    } else {
        args.capacities.clone()
    };

    let label = args
        .trace
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trace")
        .to_string();

    let mut out = String::from("capacity,hit_rate,policy,trace_label\n");
    for &policy in &policies {
        let curve = sweep(&paths, &capacities, policy)
            .map_err(|e| fail(5, format!("cache sweep: {e}")))?;
        for (cap, rate) in &curve.points {
            out.push_str(&format!("{cap},{rate},{policy},{label}\n"));
        }
    }
    fs::write(&args.output, out)
        .map_err(|e| io_fail(&format!("writing {}", args.output.display()), e))?;

    let meta = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "trace": args.trace.display().to_string(),
        "trace_label": label,
        "policies": policies,
        "capacities": capacities,
        "ua_db": args.ua_db.as_ref().map(|p| p.display().to_string()),
    });
    write_sidecar(&args.output, &meta)?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs, threads: Option<usize>) -> CmdResult {
    let file = FileConfig::load(args.config.as_deref()).map_err(|e| fail(2, e))?;
    init_threads(threads, file.threads);

    let format: LogFormat =
        parse_as("format", pick_opt(args.format.clone(), file.format.clone()))?
            .unwrap_or(LogFormat::Combined);
    let mode: AgentIdMode =
        parse_as("agent-mode", pick_opt(args.agent_mode.clone(), file.agent_mode.clone()))?
            .unwrap_or_default();
    let timeout = pick(args.timeout, file.timeout, 1800.0);
    let policies = parse_policies(&args.policy, file.policies.clone())?;
    let db = load_ua_db(pick_opt(args.ua_db.clone(), file.ua_db.clone()).as_deref())?;

    let original = load_trace(&args.original, format, db.as_ref(), mode)?;
    let generated = load_trace(&args.generated, format, db.as_ref(), mode)?;

    let capacities = if args.capacities.is_empty() { file.capacities.clone() } else { Some(args.capacities.clone()) };
    let opts = CompareOptions { timeout, policies, capacities };
    let bundle =
        compare(&original, &generated, &opts).map_err(|e| fail(1, format!("compare: {e}")))?;

    let echo = serde_json::json!({
        "original": args.original.display().to_string(),
        "generated": args.generated.display().to_string(),
        "timeout": timeout,
        "policies": opts.policies,
        "capacities": opts.capacities,
        "agent_mode": mode,
        "ua_db": args.ua_db.as_ref().map(|p| p.display().to_string()),
    });
    write_bundle(&bundle, &args.outdir, &echo)
        .map_err(|e| io_fail(&format!("writing {}", args.outdir.display()), e))?;

    for report in &bundle.reports {
        eprintln!(
            "robotraffic: {} KS(original,generated) = {:.4}",
            report.metric, report.ks_original_vs_generated
        );
    }
    Ok(())
}
