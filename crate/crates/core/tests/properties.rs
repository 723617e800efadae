//! Property-based invariants across the pipeline.

use std::collections::BTreeMap;

use proptest::prelude::*;

use robotraffic_core::cache_sim::{hit_sequence, CachePolicy};
use robotraffic_core::distfit::{riemann_zeta, sample_categorical, CategoricalParams};
use robotraffic_core::generator::estimate_pool_size;
use robotraffic_core::ingest::sessionize;
use robotraffic_core::log_model::{AgentId, AgentIdMode, Request, Session};
use robotraffic_core::resource_model::{fit_map, DirichletHyperparams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn agent(i: u8) -> AgentId {
    AgentId::new(AgentIdMode::UserAgent, Some(format!("agent-{i}")), None).unwrap()
}

fn arb_requests() -> impl Strategy<Value = Vec<Request>> {
    prop::collection::vec((0u8..5, 0.0f64..500.0), 1..120).prop_map(|items| {
        items
            .into_iter()
            .map(|(a, t)| Request { agent: agent(a), time: t, path: format!("/p/{}.html", a) })
            .collect()
    })
}

proptest! {
    #[test]
    fn sessionize_partitions_the_input(requests in arb_requests(), timeout in 0.5f64..100.0) {
        let sessions = sessionize(requests.clone(), timeout).unwrap();

        // total length preserved
        let total: usize = sessions.iter().map(Session::len).sum();
        prop_assert_eq!(total, requests.len());

        // per-agent multiset of (time, path) preserved
        let key = |r: &Request| (r.agent.label(), r.time.to_bits(), r.path.clone());
        let mut original: Vec<_> = requests.iter().map(key).collect();
        let mut flattened: Vec<_> =
            sessions.iter().flat_map(|s| s.requests.iter().map(key)).collect();
        original.sort();
        flattened.sort();
        prop_assert_eq!(original, flattened);

        // within-session gaps bounded by the timeout, start time consistent
        for s in &sessions {
            prop_assert_eq!(s.start_time.to_bits(), s.requests[0].time.to_bits());
            for w in s.requests.windows(2) {
                prop_assert!(w[1].time >= w[0].time);
                prop_assert!(w[1].time - w[0].time <= timeout);
            }
        }
    }

    #[test]
    fn sessionize_infinite_timeout_one_session_per_agent(requests in arb_requests()) {
        let distinct_agents = {
            let mut labels: Vec<String> = requests.iter().map(|r| r.agent.label()).collect();
            labels.sort();
            labels.dedup();
            labels.len()
        };
        let sessions = sessionize(requests, f64::INFINITY).unwrap();
        prop_assert_eq!(sessions.len(), distinct_agents);
    }

    #[test]
    fn pool_size_matches_quadratic_oracle(
        starts in prop::collection::vec(0.0f64..200.0, 1..25),
        lens in prop::collection::vec(1usize..6, 25),
    ) {
        let sessions: Vec<Session> = starts
            .iter()
            .zip(&lens)
            .enumerate()
            .map(|(i, (&t0, &len))| {
                let a = agent(i as u8);
                let requests: Vec<Request> = (0..len)
                    .map(|j| Request { agent: a.clone(), time: t0 + j as f64, path: "/".into() })
                    .collect();
                Session { agent: a, start_time: t0, requests }
            })
            .collect();

        let mut total = 0u64;
        let mut count = 0u64;
        for s in &sessions {
            for r in &s.requests {
                total += sessions
                    .iter()
                    .filter(|x| x.start_time <= r.time && r.time <= x.end_time())
                    .count() as u64;
                count += 1;
            }
        }
        let expected = ((total as f64 / count as f64).round() as u32).max(1);
        prop_assert_eq!(estimate_pool_size(&sessions).unwrap(), expected);
    }

    #[test]
    fn zeta_stays_above_one_and_decreases(s in 1.001f64..30.0, delta in 0.01f64..5.0) {
        let lo = riemann_zeta(s).unwrap();
        let hi = riemann_zeta(s + delta).unwrap();
        prop_assert!(lo >= 1.0);
        prop_assert!(hi >= 1.0);
        prop_assert!(hi < lo);
    }

    #[test]
    fn categorical_never_emits_zero_mass(seed in 0u64..1000, zero_at in 0usize..4) {
        let mut weights = vec![1.0f64; 4];
        weights[zero_at] = 0.0;
        let params = CategoricalParams::from_weights(&weights).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            prop_assert_ne!(sample_categorical(&mut rng, &params), zero_at);
        }
    }

    #[test]
    fn map_vectors_are_distributions(
        counts in prop::collection::vec(0u64..40, 1..5),
        alpha_strength in 0.05f64..20.0,
        gamma_strength in 0.05f64..20.0,
        globals in prop::collection::vec(1u64..50, 1..5),
    ) {
        let k = counts.len().min(globals.len());
        let counts = &counts[..k];
        let globals = &globals[..k];
        let global_total: u64 = globals.iter().sum();

        let alpha: Vec<f64> =
            globals.iter().map(|&g| alpha_strength * g as f64 / global_total as f64).collect();
        // one resource per type keeps the gamma blocks simple
        let gamma: Vec<Vec<f64>> = (0..k).map(|_| vec![gamma_strength]).collect();
        let hyper = DirichletHyperparams {
            alpha,
            gamma,
            alpha_strength,
            gamma_strength,
        };
        let resource_counts: Vec<Vec<u64>> = counts.iter().map(|&c| vec![c]).collect();

        let model = fit_map(counts, &resource_counts, &hyper).unwrap();
        let total: f64 = model.type_probs.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(model.type_probs.probs().iter().all(|p| *p >= 0.0));
        for rp in &model.resource_probs {
            let total: f64 = rp.probs().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

/// Reference LRU that tracks the cached set step by step.
fn lru_sets(ids: &[u32], capacity: usize) -> Vec<Vec<u32>> {
    let mut recency: Vec<u32> = Vec::new();
    let mut sets = Vec::with_capacity(ids.len());
    for &id in ids {
        if let Some(pos) = recency.iter().position(|&x| x == id) {
            recency.remove(pos);
        } else if recency.len() == capacity {
            recency.remove(0);
        }
        recency.push(id);
        let mut set = recency.clone();
        set.sort_unstable();
        sets.push(set);
    }
    sets
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lru_inclusion_property(
        ids in prop::collection::vec(0u32..30, 1..300),
        capacity in 1usize..20,
    ) {
        // cached set at capacity c is contained in the set at c+1, step by step
        let small = lru_sets(&ids, capacity);
        let large = lru_sets(&ids, capacity + 1);
        for (s, l) in small.iter().zip(&large) {
            for id in s {
                prop_assert!(l.contains(id), "{id} missing at larger capacity");
            }
        }
    }

    #[test]
    fn cache_policies_match_reference(
        ids in prop::collection::vec(0u32..25, 1..250),
        capacity in 1usize..15,
    ) {
        let paths: Vec<String> = ids.iter().map(|i| format!("/r/{i}")).collect();

        // independent reference: recency-ordered vec with linear scans
        let mut cache: Vec<(String, u64)> = Vec::new();
        let mut expect_lru = Vec::new();
        for p in &paths {
            if let Some(pos) = cache.iter().position(|(q, _)| q == p) {
                let e = cache.remove(pos);
                cache.push(e);
                expect_lru.push(true);
            } else {
                if cache.len() == capacity {
                    cache.remove(0);
                }
                cache.push((p.clone(), 1));
                expect_lru.push(false);
            }
        }
        prop_assert_eq!(hit_sequence(&paths, capacity, CachePolicy::Lru).unwrap(), expect_lru);

        let mut cache: Vec<(String, u64)> = Vec::new();
        let mut expect_lfu = Vec::new();
        for p in &paths {
            if let Some(pos) = cache.iter().position(|(q, _)| q == p) {
                let (q, f) = cache.remove(pos);
                cache.push((q, f + 1));
                expect_lfu.push(true);
            } else {
                if cache.len() == capacity {
                    let min = cache.iter().map(|(_, f)| *f).min().unwrap();
                    let victim = cache.iter().position(|(_, f)| *f == min).unwrap();
                    cache.remove(victim);
                }
                cache.push((p.clone(), 1));
                expect_lfu.push(false);
            }
        }
        prop_assert_eq!(hit_sequence(&paths, capacity, CachePolicy::Lfu).unwrap(), expect_lfu);
    }

    #[test]
    fn cache_occupancy_counts_add_up(
        ids in prop::collection::vec(0u32..40, 1..200),
        capacity in 1usize..10,
    ) {
        let paths: Vec<String> = ids.iter().map(|i| format!("/r/{i}")).collect();
        for policy in [CachePolicy::Lru, CachePolicy::Lfu] {
            let outcomes = hit_sequence(&paths, capacity, policy).unwrap();
            prop_assert_eq!(outcomes.len(), paths.len());
            // an access can only hit if the path appeared before
            let mut seen: BTreeMap<&str, bool> = BTreeMap::new();
            for (p, hit) in paths.iter().zip(&outcomes) {
                if *hit {
                    prop_assert!(seen.contains_key(p.as_str()));
                }
                seen.insert(p, true);
            }
        }
    }
}
