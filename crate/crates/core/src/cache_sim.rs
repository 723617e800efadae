//! Single-level object cache simulation under LFU and LRU eviction, and
//! hit-rate-vs-capacity sweeps. Objects are unit-size; capacity counts
//! objects.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache capacity must be >= 1")]
    NonPositiveCapacity,
    #[error("capacity grid is empty")]
    EmptyCapacityGrid,
    #[error("capacity grid must be strictly increasing")]
    NonIncreasingCapacityGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    /// Evict the object with the fewest accesses; ties go to the least
    /// recently used among them. Counts include the inserting access and
    /// reset on eviction.
    Lfu,
    /// Evict the least recently accessed object.
    Lru,
}

impl std::fmt::Display for CachePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CachePolicy::Lfu => f.write_str("lfu"),
            CachePolicy::Lru => f.write_str("lru"),
        }
    }
}

impl FromStr for CachePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lfu" => Ok(CachePolicy::Lfu),
            "lru" => Ok(CachePolicy::Lru),
            other => Err(format!("unknown cache policy `{other}` (expected lfu or lru)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

/// Hit rate per capacity for one eviction policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRateCurve {
    pub policy: CachePolicy,
    pub points: Vec<(usize, f64)>,
}

fn intern<S: AsRef<str>>(paths: &[S]) -> Vec<u32> {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    paths
        .iter()
        .map(|p| {
            let next = ids.len() as u32;
            *ids.entry(p.as_ref()).or_insert(next)
        })
        .collect()
}

fn run(ids: &[u32], capacity: usize, policy: CachePolicy) -> Vec<bool> {
    let mut outcomes = Vec::with_capacity(ids.len());
    let mut stamp = 0u64;
    match policy {
        CachePolicy::Lru => {
            let mut stamps: HashMap<u32, u64> = HashMap::new();
            let mut by_age: BTreeMap<u64, u32> = BTreeMap::new();
            for &id in ids {
                stamp += 1;
                if let Some(old) = stamps.insert(id, stamp) {
                    by_age.remove(&old);
                    by_age.insert(stamp, id);
                    outcomes.push(true);
                    continue;
                }
                if stamps.len() > capacity {
                    let (_, victim) = by_age.pop_first().expect("cache is full");
                    stamps.remove(&victim);
                }
                by_age.insert(stamp, id);
                outcomes.push(false);
            }
        }
        CachePolicy::Lfu => {
            let mut state: HashMap<u32, (u64, u64)> = HashMap::new();
            let mut order: BTreeSet<(u64, u64, u32)> = BTreeSet::new();
            for &id in ids {
                stamp += 1;
                if let Some((freq, old)) = state.get(&id).copied() {
                    order.remove(&(freq, old, id));
                    state.insert(id, (freq + 1, stamp));
                    order.insert((freq + 1, stamp, id));
                    outcomes.push(true);
                    continue;
                }
                if state.len() == capacity {
                    let victim = *order.iter().next().expect("cache is full");
                    order.remove(&victim);
                    state.remove(&victim.2);
                }
                state.insert(id, (1, stamp));
                order.insert((1, stamp, id));
                outcomes.push(false);
            }
        }
    }
    outcomes
}

/// Replay `paths` through a cold cache; every access is a hit or a miss,
/// with misses inserting the object and evicting per policy when full.
pub fn simulate<S: AsRef<str>>(
    paths: &[S],
    capacity: usize,
    policy: CachePolicy,
) -> Result<CacheStats, CacheError> {
    let outcomes = hit_sequence(paths, capacity, policy)?;
    let hits = outcomes.iter().filter(|h| **h).count() as u64;
    Ok(CacheStats { hits, misses: outcomes.len() as u64 - hits })
}

/// Per-access hit/miss outcomes, for exact comparison against reference
/// implementations.
pub fn hit_sequence<S: AsRef<str>>(
    paths: &[S],
    capacity: usize,
    policy: CachePolicy,
) -> Result<Vec<bool>, CacheError> {
    if capacity == 0 {
        return Err(CacheError::NonPositiveCapacity);
    }
    Ok(run(&intern(paths), capacity, policy))
}

/// One cold-start simulation per capacity; capacities run in parallel.
pub fn sweep<S: AsRef<str> + Sync>(
    paths: &[S],
    capacities: &[usize],
    policy: CachePolicy,
) -> Result<HitRateCurve, CacheError> {
    if capacities.is_empty() {
        return Err(CacheError::EmptyCapacityGrid);
    }
    if capacities.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CacheError::NonIncreasingCapacityGrid);
    }
    if capacities[0] == 0 {
        return Err(CacheError::NonPositiveCapacity);
    }
    let ids = intern(paths);
    let points = capacities
        .par_iter()
        .map(|&cap| {
            let outcomes = run(&ids, cap, policy);
            let hits = outcomes.iter().filter(|h| **h).count() as u64;
            let stats = CacheStats { hits, misses: outcomes.len() as u64 - hits };
            (cap, stats.hit_rate())
        })
        .collect();
    Ok(HitRateCurve { policy, points })
}

/// 16 log-spaced capacities from 1 up to the distinct-object count.
pub fn default_capacity_grid(distinct: usize) -> Vec<usize> {
    let top = distinct.max(1);
    let mut grid: Vec<usize> = (0..16)
        .map(|i| {
            let f = (top as f64).ln() * i as f64 / 15.0;
            f.exp().round() as usize
        })
        .map(|c| c.clamp(1, top))
        .collect();
    grid.dedup();
    grid
}

pub fn distinct_paths<S: AsRef<str>>(paths: &[S]) -> usize {
    let mut seen: std::collections::HashSet<&str> = std::collections::HashSet::new();
    for p in paths {
        seen.insert(p.as_ref());
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n*c) reference: explicit recency list, linear victim scans.
    pub(crate) fn reference_hit_sequence(
        paths: &[&str],
        capacity: usize,
        policy: CachePolicy,
    ) -> Vec<bool> {
        // (path, frequency); index in vec == recency (older first)
        let mut cache: Vec<(String, u64)> = Vec::new();
        let mut outcomes = Vec::new();
        for &p in paths {
            if let Some(pos) = cache.iter().position(|(q, _)| q == p) {
                let (q, f) = cache.remove(pos);
                cache.push((q, f + 1));
                outcomes.push(true);
                continue;
            }
            if cache.len() == capacity {
                let victim = match policy {
                    CachePolicy::Lru => 0,
                    CachePolicy::Lfu => {
                        let min = cache.iter().map(|(_, f)| *f).min().unwrap();
                        cache.iter().position(|(_, f)| *f == min).unwrap()
                    }
                };
                cache.remove(victim);
            }
            cache.push((p.to_string(), 1));
            outcomes.push(false);
        }
        outcomes
    }

    #[test]
    fn lru_capacity_one() {
        let stats = simulate(&["a", "b", "a"], 1, CachePolicy::Lru).unwrap();
        assert_eq!(stats.hits, 0);
        assert_eq!(stats.misses, 3);
    }

    #[test]
    fn lru_capacity_two() {
        let stats = simulate(&["a", "b", "a"], 2, CachePolicy::Lru).unwrap();
        assert_eq!(stats.hits, 1);
        assert!((stats.hit_rate() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lfu_evicts_least_frequent() {
        // a hit once; b evicted by c as least-frequent; b's return misses
        let stats = simulate(&["a", "a", "b", "c", "b"], 2, CachePolicy::Lfu).unwrap();
        assert_eq!(stats.hits, 1);
        assert_eq!(stats.misses, 4);
    }

    #[test]
    fn rejects_zero_capacity() {
        assert!(matches!(
            simulate(&["a"], 0, CachePolicy::Lru),
            Err(CacheError::NonPositiveCapacity)
        ));
    }

    #[test]
    fn single_path_trace_has_one_compulsory_miss() {
        let paths = vec!["x"; 50];
        for cap in [1usize, 3, 10] {
            let stats = simulate(&paths, cap, CachePolicy::Lfu).unwrap();
            assert_eq!(stats.misses, 1);
            assert!((stats.hit_rate() - 49.0 / 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_capacity_leaves_only_compulsory_misses() {
        let paths = ["a", "b", "a", "c", "b", "a", "d", "c"];
        let distinct = distinct_paths(&paths);
        for policy in [CachePolicy::Lru, CachePolicy::Lfu] {
            let stats = simulate(&paths, distinct, policy).unwrap();
            assert_eq!(stats.misses as usize, distinct);
            let expected = 1.0 - distinct as f64 / paths.len() as f64;
            assert!((stats.hit_rate() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_reference_on_random_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..30 {
            let n = rng.random_range(1..400);
            let universe = rng.random_range(1..30);
            let cap = rng.random_range(1..=20);
            let paths: Vec<String> =
                (0..n).map(|_| format!("/p{}", rng.random_range(0..universe))).collect();
            let refs: Vec<&str> = paths.iter().map(String::as_str).collect();
            for policy in [CachePolicy::Lru, CachePolicy::Lfu] {
                assert_eq!(
                    hit_sequence(&paths, cap, policy).unwrap(),
                    reference_hit_sequence(&refs, cap, policy),
                    "n={n} universe={universe} cap={cap} policy={policy}"
                );
            }
        }
    }

    #[test]
    fn lru_inclusion_property_makes_hit_rate_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let paths: Vec<String> =
            (0..2000).map(|_| format!("/p{}", rng.random_range(0..100))).collect();
        let caps: Vec<usize> = (1..=40).collect();
        let curve = sweep(&paths, &caps, CachePolicy::Lru).unwrap();
        for w in curve.points.windows(2) {
            assert!(w[0].1 <= w[1].1 + 1e-12, "LRU hit rate decreased: {w:?}");
        }
    }

    #[test]
    fn sweep_validates_grid() {
        assert!(matches!(
            sweep(&["a"], &[], CachePolicy::Lru),
            Err(CacheError::EmptyCapacityGrid)
        ));
        assert!(matches!(
            sweep(&["a"], &[2, 2], CachePolicy::Lru),
            Err(CacheError::NonIncreasingCapacityGrid)
        ));
        assert!(matches!(
            sweep(&["a"], &[0, 1], CachePolicy::Lru),
            Err(CacheError::NonPositiveCapacity)
        ));
    }

    #[test]
    fn default_grid_is_strictly_increasing_and_bounded() {
        for distinct in [1usize, 2, 5, 16, 1000, 59_286] {
            let grid = default_capacity_grid(distinct);
            assert!(!grid.is_empty());
            assert_eq!(grid[0], 1);
            assert!(*grid.last().unwrap() <= distinct.max(1));
            assert!(grid.windows(2).all(|w| w[0] < w[1]));
            assert!(grid.len() <= 16);
        }
        assert_eq!(default_capacity_grid(1), vec![1]);
    }

    #[test]
    fn occupancy_never_exceeds_capacity() {
        // exercised indirectly: a trace with more distinct paths than
        // capacity must keep evicting, so hits can only come from re-use
        // inside the window
        let paths: Vec<String> = (0..100).map(|i| format!("/p{}", i % 10)).collect();
        let stats = simulate(&paths, 3, CachePolicy::Lru).unwrap();
        assert_eq!(stats.hits + stats.misses, 100);
        // cyclic scan over 10 objects with capacity 3 never hits
        assert_eq!(stats.hits, 0);
    }
}
