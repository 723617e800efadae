//! Side-by-side evaluation of an original trace against a generated one:
//! inter-session time CDFs, intra-session inter-arrival CDFs, session-length
//! PMFs, and LFU/LRU hit-rate curves, with Kolmogorov-Smirnov distances
//! quantifying what the plots would show.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache_sim::{
    default_capacity_grid, distinct_paths, sweep, CacheError, CachePolicy, HitRateCurve,
};
use crate::distfit::{
    empirical_cdf, fit_lognormal, fit_poisson_rate, fit_zeta, ks_statistic, ks_two_sample, FitError,
};
use crate::ingest::{sessionize, IngestError};
use crate::log_model::{Session, Trace};
use crate::ZetaParams;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("empty input")]
    EmptyInput,
    #[error("need at least 2 sessions, got {0}")]
    TooFewSessions(usize),
    #[error("no intra-session gaps (every session has length 1)")]
    NoIntraSessionGaps,
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Gaps between consecutive session start times across all robots.
pub fn extract_inter_session_times(sessions: &[Session]) -> Result<Vec<f64>, CompareError> {
    if sessions.len() < 2 {
        return Err(CompareError::TooFewSessions(sessions.len()));
    }
    let mut starts: Vec<f64> = sessions.iter().map(|s| s.start_time).collect();
    starts.sort_by(f64::total_cmp);
    Ok(starts.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Pooled gaps between consecutive requests within each session of length
/// at least 2.
pub fn extract_intra_session_iats(sessions: &[Session]) -> Vec<f64> {
    let mut gaps = Vec::new();
    for s in sessions {
        for w in s.requests.windows(2) {
            gaps.push(w[1].time - w[0].time);
        }
    }
    gaps
}

/// Empirical session-length mass function; zero-mass lengths are omitted.
pub fn session_length_pmf(sessions: &[Session]) -> Result<Vec<(u64, f64)>, CompareError> {
    if sessions.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for s in sessions {
        *counts.entry(s.len() as u64).or_insert(0) += 1;
    }
    let n = sessions.len() as f64;
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
}

/// Fitted parameters for one metric, per trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FitSummary {
    Exponential { lambda: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Zeta { s: f64 },
}

/// KS distances and fitted parameters for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric: String,
    pub fit_original: FitSummary,
    pub fit_generated: FitSummary,
    pub ks_original_vs_fit: f64,
    pub ks_generated_vs_fit: f64,
    pub ks_original_vs_generated: f64,
}

/// CDF columns on the merged x-grid of both samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfComparison {
    pub xs: Vec<f64>,
    pub cdf_original: Vec<f64>,
    pub cdf_generated: Vec<f64>,
    pub cdf_fit_original: Vec<f64>,
    pub cdf_fit_generated: Vec<f64>,
}

/// PMF columns on the merged set of observed lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfComparison {
    pub ks: Vec<u64>,
    pub pmf_original: Vec<f64>,
    pub pmf_generated: Vec<f64>,
    pub pmf_fit_original: Vec<f64>,
    pub pmf_fit_generated: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCurve {
    pub trace_label: String,
    pub curve: HitRateCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareBundle {
    pub reports: Vec<ComparisonReport>,
    pub inter_session: CdfComparison,
    pub intra_session: CdfComparison,
    pub session_length: PmfComparison,
    pub curves: Vec<LabeledCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Sessionization timeout applied to both traces.
    pub timeout: f64,
    pub policies: Vec<CachePolicy>,
    /// Shared capacity grid; default is log-spaced up to the larger
    /// distinct-path count.
    pub capacities: Option<Vec<usize>>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            timeout: 1800.0,
            policies: vec![CachePolicy::Lfu, CachePolicy::Lru],
            capacities: None,
        }
    }
}

fn merged_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn cdf_comparison(
    original: &[f64],
    generated: &[f64],
    fit_original: impl Fn(f64) -> f64,
    fit_generated: impl Fn(f64) -> f64,
) -> Result<CdfComparison, CompareError> {
    let xs = merged_grid(original, generated);
    let eo = empirical_cdf(original)?;
    let eg = empirical_cdf(generated)?;
    Ok(CdfComparison {
        cdf_original: xs.iter().map(|&x| eo.eval(x)).collect(),
        cdf_generated: xs.iter().map(|&x| eg.eval(x)).collect(),
        cdf_fit_original: xs.iter().map(|&x| fit_original(x)).collect(),
        cdf_fit_generated: xs.iter().map(|&x| fit_generated(x)).collect(),
        xs,
    })
}

fn zeta_cdf_fn(params: &ZetaParams, max_k: u64) -> impl Fn(f64) -> f64 {
    let table = params.cdf_table(max_k);
    move |x: f64| {
        if x < 1.0 {
            0.0
        } else {
            let k = (x.floor() as u64).min(table.len() as u64);
            table[(k - 1) as usize]
        }
    }
}

/// Sessionize both traces with the same timeout and produce the three
/// distribution comparisons plus cache hit-rate curve pairs on a shared
/// capacity grid.
pub fn compare(
    original: &Trace,
    generated: &Trace,
    opts: &CompareOptions,
) -> Result<CompareBundle, CompareError> {
    if original.is_empty() || generated.is_empty() {
        return Err(CompareError::EmptyInput);
    }

    let sessions_o = sessionize(original.requests().to_vec(), opts.timeout)?;
    let sessions_g = sessionize(generated.requests().to_vec(), opts.timeout)?;

    // Inter-session times against the exponential fit lambda = n_s / span.
    let tbs_o = extract_inter_session_times(&sessions_o)?;
    let tbs_g = extract_inter_session_times(&sessions_g)?;
    let exp_o = fit_poisson_rate(sessions_o.len() as u64, original.span())?;
    let exp_g = fit_poisson_rate(sessions_g.len() as u64, generated.span())?;
    let inter_session = cdf_comparison(&tbs_o, &tbs_g, |x| exp_o.cdf(x), |x| exp_g.cdf(x))?;
    let inter_report = ComparisonReport {
        metric: "inter_session_time".into(),
        fit_original: FitSummary::Exponential { lambda: exp_o.lambda },
        fit_generated: FitSummary::Exponential { lambda: exp_g.lambda },
        ks_original_vs_fit: ks_statistic(&tbs_o, |x| exp_o.cdf(x))?,
        ks_generated_vs_fit: ks_statistic(&tbs_g, |x| exp_g.cdf(x))?,
        ks_original_vs_generated: ks_two_sample(&tbs_o, &tbs_g)?,
    };

    // Intra-session gaps; zero gaps (log-resolution ties) are excluded so
    // the lognormal fit is defined, on both sides alike.
    let iat_o: Vec<f64> =
        extract_intra_session_iats(&sessions_o).into_iter().filter(|g| *g > 0.0).collect();
    let iat_g: Vec<f64> =
        extract_intra_session_iats(&sessions_g).into_iter().filter(|g| *g > 0.0).collect();
    if iat_o.is_empty() || iat_g.is_empty() {
        return Err(CompareError::NoIntraSessionGaps);
    }
    let logn_o = fit_lognormal(&iat_o)?;
    let logn_g = fit_lognormal(&iat_g)?;
    let intra_session = cdf_comparison(&iat_o, &iat_g, |x| logn_o.cdf(x), |x| logn_g.cdf(x))?;
    let intra_report = ComparisonReport {
        metric: "intra_session_iat".into(),
        fit_original: FitSummary::Lognormal { mu: logn_o.mu, sigma: logn_o.sigma },
        fit_generated: FitSummary::Lognormal { mu: logn_g.mu, sigma: logn_g.sigma },
        ks_original_vs_fit: ks_statistic(&iat_o, |x| logn_o.cdf(x))?,
        ks_generated_vs_fit: ks_statistic(&iat_g, |x| logn_g.cdf(x))?,
        ks_original_vs_generated: ks_two_sample(&iat_o, &iat_g)?,
    };

    // Session lengths against the Zeta fits.
    let lengths_o: Vec<u64> = sessions_o.iter().map(|s| s.len() as u64).collect();
    let lengths_g: Vec<u64> = sessions_g.iter().map(|s| s.len() as u64).collect();
    let zeta_o = fit_zeta(&lengths_o)?;
    let zeta_g = fit_zeta(&lengths_g)?;
    let pmf_o = session_length_pmf(&sessions_o)?;
    let pmf_g = session_length_pmf(&sessions_g)?;
    let max_k = lengths_o.iter().chain(lengths_g.iter()).copied().max().unwrap_or(1);

    let pmf_map_o: BTreeMap<u64, f64> = pmf_o.iter().copied().collect();
    let pmf_map_g: BTreeMap<u64, f64> = pmf_g.iter().copied().collect();
    let ks: Vec<u64> = {
        let mut all: Vec<u64> = pmf_map_o.keys().chain(pmf_map_g.keys()).copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    let session_length = PmfComparison {
        pmf_original: ks.iter().map(|k| pmf_map_o.get(k).copied().unwrap_or(0.0)).collect(),
        pmf_generated: ks.iter().map(|k| pmf_map_g.get(k).copied().unwrap_or(0.0)).collect(),
        pmf_fit_original: ks.iter().map(|&k| zeta_o.pmf(k)).collect(),
        pmf_fit_generated: ks.iter().map(|&k| zeta_g.pmf(k)).collect(),
        ks,
    };
    let flo: Vec<f64> = lengths_o.iter().map(|&k| k as f64).collect();
    let flg: Vec<f64> = lengths_g.iter().map(|&k| k as f64).collect();
    let length_report = ComparisonReport {
        metric: "session_length".into(),
        fit_original: FitSummary::Zeta { s: zeta_o.s },
        fit_generated: FitSummary::Zeta { s: zeta_g.s },
        ks_original_vs_fit: ks_statistic(&flo, zeta_cdf_fn(&zeta_o, max_k))?,
        ks_generated_vs_fit: ks_statistic(&flg, zeta_cdf_fn(&zeta_g, max_k))?,
        ks_original_vs_generated: ks_two_sample(&flo, &flg)?,
    };

    // Cache curves on a shared grid.
    let paths_o: Vec<&str> = original.requests().iter().map(|r| r.path.as_str()).collect();
    let paths_g: Vec<&str> = generated.requests().iter().map(|r| r.path.as_str()).collect();
    let capacities = match &opts.capacities {
        Some(c) => c.clone(),
        None => default_capacity_grid(distinct_paths(&paths_o).max(distinct_paths(&paths_g))),
    };
    let mut curves = Vec::new();
    for &policy in &opts.policies {
        curves.push(LabeledCurve {
            trace_label: "original".into(),
            curve: sweep(&paths_o, &capacities, policy)?,
        });
        curves.push(LabeledCurve {
            trace_label: "generated".into(),
            curve: sweep(&paths_g, &capacities, policy)?,
        });
    }

    Ok(CompareBundle {
        reports: vec![inter_report, intra_report, length_report],
        inter_session,
        intra_session,
        session_length,
        curves,
    })
}

fn write_cdf_csv(path: &Path, cmp: &CdfComparison) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "x,cdf_original,cdf_generated,cdf_fit_original,cdf_fit_generated")?;
    for i in 0..cmp.xs.len() {
        writeln!(
            f,
            "{},{},{},{},{}",
            cmp.xs[i],
            cmp.cdf_original[i],
            cmp.cdf_generated[i],
            cmp.cdf_fit_original[i],
            cmp.cdf_fit_generated[i]
        )?;
    }
    Ok(())
}

/// Write the plot-ready CSVs and the KS/parameter summary JSON into a
/// directory. `config` is echoed into the summary for reproducibility.
pub fn write_bundle(
    bundle: &CompareBundle,
    dir: &Path,
    config: &serde_json::Value,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    write_cdf_csv(&dir.join("inter_session_cdf.csv"), &bundle.inter_session)?;
    write_cdf_csv(&dir.join("intra_session_iat_cdf.csv"), &bundle.intra_session)?;

    let mut f = std::io::BufWriter::new(fs::File::create(dir.join("session_length_pmf.csv"))?);
    writeln!(f, "k,pmf_original,pmf_generated,pmf_fit_original,pmf_fit_generated")?;
    let pmf = &bundle.session_length;
    for i in 0..pmf.ks.len() {
        writeln!(
            f,
            "{},{},{},{},{}",
            pmf.ks[i],
            pmf.pmf_original[i],
            pmf.pmf_generated[i],
            pmf.pmf_fit_original[i],
            pmf.pmf_fit_generated[i]
        )?;
    }

    let mut f = std::io::BufWriter::new(fs::File::create(dir.join("cache_curves.csv"))?);
    writeln!(f, "capacity,hit_rate,policy,trace_label")?;
    for labeled in &bundle.curves {
        for (cap, rate) in &labeled.curve.points {
            writeln!(f, "{},{},{},{}", cap, rate, labeled.curve.policy, labeled.trace_label)?;
        }
    }

    let mut reports = serde_json::Map::new();
    for r in &bundle.reports {
        reports.insert(r.metric.clone(), serde_json::to_value(r)?);
    }
    let summary = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "reports": reports,
    });
    let mut f = fs::File::create(dir.join("summary.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distfit::{sample_exponential, sample_lognormal, sample_zeta};
    use crate::log_model::{AgentId, AgentIdMode, Request, TraceOrigin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn agent(name: &str) -> AgentId {
        AgentId::new(AgentIdMode::UserAgent, Some(name.to_string()), None).unwrap()
    }

    fn session(agent_name: &str, times: &[f64]) -> Session {
        let a = agent(agent_name);
        Session {
            agent: a.clone(),
            start_time: times[0],
            requests: times
                .iter()
                .map(|&t| Request { agent: a.clone(), time: t, path: "/".into() })
                .collect(),
        }
    }

    #[test]
    fn inter_session_gaps() {
        let sessions =
            vec![session("a", &[0.0]), session("b", &[3.0]), session("c", &[10.0])];
        assert_eq!(extract_inter_session_times(&sessions).unwrap(), vec![3.0, 7.0]);

        let simultaneous = vec![session("a", &[5.0]), session("b", &[5.0])];
        assert_eq!(extract_inter_session_times(&simultaneous).unwrap(), vec![0.0]);

        assert!(matches!(
            extract_inter_session_times(&[session("a", &[0.0])]),
            Err(CompareError::TooFewSessions(1))
        ));
    }

    #[test]
    fn intra_session_gaps() {
        let sessions = vec![session("a", &[0.0, 2.0, 5.0])];
        assert_eq!(extract_intra_session_iats(&sessions), vec![2.0, 3.0]);

        let singletons = vec![session("a", &[0.0]), session("b", &[1.0])];
        assert!(extract_intra_session_iats(&singletons).is_empty());
    }

    #[test]
    fn pmf_counts() {
        let sessions = vec![
            session("a", &[0.0]),
            session("b", &[1.0]),
            session("c", &[2.0, 3.0]),
        ];
        let pmf = session_length_pmf(&sessions).unwrap();
        assert_eq!(pmf, vec![(1, 2.0 / 3.0), (2, 1.0 / 3.0)]);

        let constant = vec![session("a", &[0.0, 1.0, 2.0, 3.0, 4.0])];
        assert_eq!(session_length_pmf(&constant).unwrap(), vec![(5, 1.0)]);

        assert!(matches!(session_length_pmf(&[]), Err(CompareError::EmptyInput)));
    }

    #[test]
    fn extraction_round_trips_against_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);

        // exponential arrivals refit to lambda within 5%
        let lambda = crate::ExponentialParams::new(0.8).unwrap();
        let mut t = 0.0;
        let sessions: Vec<Session> = (0..20_000)
            .map(|i| {
                t += sample_exponential(&mut rng, &lambda);
                session(&format!("r{i}"), &[t])
            })
            .collect();
        let gaps = extract_inter_session_times(&sessions).unwrap();
        let span: f64 = gaps.iter().sum();
        let refit = fit_poisson_rate::<f64>(gaps.len() as u64, span).unwrap();
        assert!((refit.lambda - 0.8).abs() / 0.8 < 0.05);

        // lognormal gaps refit within 2%
        let logn = crate::LognormalParams::new(0.2, 0.9).unwrap();
        let sessions: Vec<Session> = (0..2_000)
            .map(|i| {
                let mut times = vec![i as f64 * 1e6];
                for _ in 0..50 {
                    let last = *times.last().unwrap();
                    times.push(last + sample_lognormal(&mut rng, &logn));
                }
                session(&format!("r{i}"), &times)
            })
            .collect();
        let refit = fit_lognormal(&extract_intra_session_iats(&sessions)).unwrap();
        assert!((refit.mu - 0.2).abs() / 0.2 < 0.02, "mu={}", refit.mu);
        assert!((refit.sigma - 0.9).abs() / 0.9 < 0.02, "sigma={}", refit.sigma);

        // zeta lengths refit within 0.05
        let zeta = crate::ZetaParams::new(2.5).unwrap();
        let sessions: Vec<Session> = (0..50_000)
            .map(|i| {
                let k = sample_zeta(&mut rng, &zeta);
                let times: Vec<f64> = (0..k).map(|j| i as f64 * 1e6 + j as f64).collect();
                session(&format!("r{i}"), &times)
            })
            .collect();
        let lengths: Vec<u64> = sessions.iter().map(|s| s.len() as u64).collect();
        let refit = fit_zeta::<f64>(&lengths).unwrap();
        assert!((refit.s - 2.5).abs() < 0.05, "s={}", refit.s);
    }

    fn synthetic_trace(seed: u64, n: usize) -> Trace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = crate::ExponentialParams::new(0.5).unwrap();
        let logn = crate::LognormalParams::new(-1.0, 0.8).unwrap();
        let zeta = crate::ZetaParams::new(2.5).unwrap();
        let paths = ["/a/x.html", "/a/y.gif", "/b/z.pdf", "/index.html"];
        let mut requests = Vec::new();
        let mut t = 0.0;
        let mut robot = 0usize;
        while requests.len() < n {
            t += sample_exponential(&mut rng, &lambda);
            robot += 1;
            let a = agent(&format!("bot-{}", robot % 37));
            let k = sample_zeta(&mut rng, &zeta);
            let mut when = t;
            for j in 0..k.min(200) {
                if j > 0 {
                    when += sample_lognormal(&mut rng, &logn);
                }
                requests.push(Request {
                    agent: a.clone(),
                    time: when,
                    path: paths[rng.random_range(0..paths.len())].to_string(),
                });
                if requests.len() == n {
                    break;
                }
            }
        }
        Trace::new(requests, TraceOrigin::Observed)
    }

    #[test]
    fn compare_trace_with_itself_is_exact() {
        let trace = synthetic_trace(91, 4000);
        let opts = CompareOptions { timeout: 30.0, ..Default::default() };
        let bundle = compare(&trace, &trace, &opts).unwrap();
        for report in &bundle.reports {
            assert_eq!(report.ks_original_vs_generated, 0.0, "{}", report.metric);
            assert_eq!(report.fit_original, report.fit_generated);
        }
        // curve pairs identical
        for pair in bundle.curves.chunks(2) {
            assert_eq!(pair[0].curve.points, pair[1].curve.points);
        }
    }

    #[test]
    fn compare_is_symmetric_up_to_label_swap() {
        let a = synthetic_trace(92, 3000);
        let b = synthetic_trace(93, 3000);
        let opts = CompareOptions { timeout: 30.0, ..Default::default() };
        let ab = compare(&a, &b, &opts).unwrap();
        let ba = compare(&b, &a, &opts).unwrap();
        for (x, y) in ab.reports.iter().zip(&ba.reports) {
            assert_eq!(x.ks_original_vs_generated, y.ks_original_vs_generated);
            assert_eq!(x.fit_original, y.fit_generated);
            assert_eq!(x.ks_original_vs_fit, y.ks_generated_vs_fit);
        }
        assert_eq!(ab.inter_session.cdf_original, ba.inter_session.cdf_generated);
    }

    #[test]
    fn mismatched_rate_shows_larger_ks() {
        // same structure, halved inter-session rate on one side
        let matched_a = synthetic_trace(94, 3000);
        let matched_b = synthetic_trace(95, 3000);
        let mut slowed = synthetic_trace(96, 3000).into_requests();
        for r in &mut slowed {
            r.time *= 2.0; // doubles gaps => halves lambda
        }
        let slowed = Trace::new(slowed, TraceOrigin::Observed);

        let opts = CompareOptions { timeout: 60.0, policies: vec![], capacities: None };
        let matched = compare(&matched_a, &matched_b, &opts).unwrap();
        let mismatched = compare(&matched_a, &slowed, &opts).unwrap();
        let ks_matched = matched.reports[0].ks_original_vs_generated;
        let ks_mismatched = mismatched.reports[0].ks_original_vs_generated;
        assert!(
            ks_mismatched > ks_matched,
            "expected mismatch to dominate: {ks_mismatched} vs {ks_matched}"
        );
    }

    #[test]
    fn probability_outputs_are_normalized() {
        let trace = synthetic_trace(97, 3000);
        let opts = CompareOptions { timeout: 30.0, ..Default::default() };
        let bundle = compare(&trace, &trace, &opts).unwrap();
        let total: f64 = bundle.session_length.pmf_original.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        for w in bundle.inter_session.xs.windows(2) {
            assert!(w[0] < w[1]);
        }
        for col in [
            &bundle.inter_session.cdf_original,
            &bundle.inter_session.cdf_generated,
            &bundle.inter_session.cdf_fit_original,
        ] {
            assert!(col.windows(2).all(|w| w[0] <= w[1] + 1e-12), "cdf must be nondecreasing");
        }
    }

    #[test]
    fn bundle_writes_all_artifacts() {
        let trace = synthetic_trace(98, 2000);
        let opts = CompareOptions { timeout: 30.0, ..Default::default() };
        let bundle = compare(&trace, &trace, &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&bundle, dir.path(), &serde_json::json!({"timeout": 30.0})).unwrap();
        for name in [
            "inter_session_cdf.csv",
            "intra_session_iat_cdf.csv",
            "session_length_pmf.csv",
            "cache_curves.csv",
            "summary.json",
        ] {
            let path = dir.path().join(name);
            assert!(path.exists(), "{name} missing");
            assert!(fs::metadata(&path).unwrap().len() > 0, "{name} empty");
        }
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["reports"].as_object().unwrap().len(), 3);
    }
}
