//! Shared synthetic fixtures: a hand-built bootstrap model and a
//! deterministic Combined-format fixture log derived from it.

use std::path::{Path, PathBuf};

use robotraffic_core::generator::{
    generate, write_clf, FitConfig, FittedModel, GenerateOptions, StopCondition, MODEL_SCHEMA,
};
use robotraffic_core::log_model::{AgentId, AgentIdMode, Request, Trace, TraceOrigin};
use robotraffic_core::resource_model::{build_catalog, PriorStrengths, RobotHistory};
use robotraffic_core::{CategoricalParams, ExponentialParams, LognormalParams, ZetaParams};

/// Synthetic site: ~25 subdirectories, ~420 resources, power-law request
/// counts. Returned as a trace so the catalog comes from `build_catalog`.
pub fn catalog_trace() -> Trace {
    let agent = AgentId::new(AgentIdMode::UserAgent, Some("seed/1.0".into()), None).unwrap();
    let sections = [
        "", "/docs", "/docs/api", "/docs/guide", "/img", "/img/icons", "/news", "/news/2016",
        "/papers", "/papers/old", "/software", "/software/releases", "/people", "/people/faculty",
        "/courses", "/courses/cs101", "/courses/cs202", "/events", "/library", "/library/maps",
        "/admin", "/data", "/data/sets", "/blog", "/blog/archive",
    ];
    let extensions = ["html", "html", "html", "pdf", "gif", "jpg", "css", ""];

    let mut requests = Vec::new();
    let mut time = 0.0f64;
    let mut rank = 0u64;
    for (si, section) in sections.iter().enumerate() {
        let resources = 8 + (si * 7) % 20;
        for ri in 0..resources {
            rank += 1;
            let ext = extensions[(si + ri) % extensions.len()];
            let path = if ext.is_empty() {
                format!("{section}/item{ri}")
            } else {
                format!("{section}/page{ri}.{ext}")
            };
            // heavier head, long tail
            let count = 1 + 600 / (rank + 2);
            for _ in 0..count {
                time += 1.0;
                requests.push(Request { agent: agent.clone(), time, path: path.clone() });
            }
        }
    }
    Trace::new(requests, TraceOrigin::Observed)
}

/// Bootstrap model with hand-picked parameters: uniform robot weights,
/// empty per-robot histories (everyone follows the global prior).
pub fn bootstrap_model(
    num_robots: usize,
    pool_size: u32,
    lambda: f64,
    s: f64,
    mu: f64,
    sigma: f64,
    timeout: f64,
) -> FittedModel {
    let catalog = build_catalog(&catalog_trace()).unwrap();
    let robots: Vec<AgentId> = (0..num_robots)
        .map(|i| {
            AgentId::new(
                AgentIdMode::UserAgent,
                Some(format!("TestBot-{i:03}/1.0 (+robot)")),
                None,
            )
            .unwrap()
        })
        .collect();
    let model = FittedModel {
        schema: MODEL_SCHEMA.to_string(),
        tool_version: "test".to_string(),
        fit_config: FitConfig {
            timeout,
            agent_mode: AgentIdMode::UserAgent,
            priors: PriorStrengths::default(),
            pool_size_override: Some(pool_size),
        },
        lambda: ExponentialParams::new(lambda).unwrap(),
        zeta: ZetaParams::new(s).unwrap(),
        lognormal: LognormalParams::new(mu, sigma).unwrap(),
        rho: CategoricalParams::from_weights(&vec![1.0; num_robots]).unwrap(),
        robots,
        pool_size,
        catalog,
        histories: vec![RobotHistory::default(); num_robots],
    };
    model.validate().expect("bootstrap model is valid");
    model
}

/// Write a Combined-format fixture log of `requests` robot requests plus a
/// matching User-Agent database file; returns (log path, db path).
#[allow(dead_code)]
pub fn write_fixture_log(dir: &Path, requests: u64, seed: u64) -> (PathBuf, PathBuf) {
    // gaps well above 1 s so the 1-second CLF resolution keeps them positive
    let model = bootstrap_model(40, 4, 0.05, 2.5, 2.0, 0.7, 1800.0);
    let trace =
        generate(&model, StopCondition::RequestCount(requests), GenerateOptions::new(seed))
            .unwrap();

    let log_path = dir.join("fixture_access.log");
    let mut buf = Vec::new();
    write_clf(&trace, 1_460_000_000, &mut buf).unwrap();
    std::fs::write(&log_path, buf).unwrap();

    let db_path = dir.join("robots.txt");
    std::fs::write(&db_path, "# fixture robot patterns\nbot\n").unwrap();
    (log_path, db_path)
}
