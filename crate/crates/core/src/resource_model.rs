//! Site resource catalog and the Bayesian subdirectory/type/resource request
//! model: subdirectories are drawn in proportion to their resource counts,
//! then a per-robot categorical over resource types and one over resources
//! of the drawn type, both MAP-estimated under Dirichlet priors built from
//! global (all-robot) request statistics.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::{sample_categorical, CategoricalParams, FitError};
use crate::log_model::Trace;
use crate::scalar::{from_count, Scalar};

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("trace has no requests")]
    EmptyTrace,
    #[error("catalog has no subdirectories")]
    EmptyCatalog,
    #[error("unknown subdirectory `{0}`")]
    UnknownSubdirectory(String),
    #[error("subdirectory `{0}` has no recorded requests; prior is undefined")]
    ZeroGlobalCounts(String),
    #[error("type {type_index}: type count {type_total} != sum of resource counts {resource_total}")]
    InconsistentCounts {
        type_index: usize,
        type_total: u64,
        resource_total: u64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("prior strength must be positive, got {0}")]
    InvalidStrength(f64),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Resource type for extensionless paths.
pub const TYPE_NONE: &str = "none";

/// Decompose a (query-stripped) path into its parent subdirectory and
/// resource type. The type is the lower-cased file extension of the final
/// segment, or `"none"` when there is no extension (including trailing-slash
/// and dot-file paths).
pub fn split_path(path: &str) -> (&str, String) {
    let slash = path.rfind('/').unwrap_or(0);
    let subdir = if slash == 0 { "/" } else { &path[..slash] };
    let segment = &path[slash + 1..];
    let ty = match segment.rfind('.') {
        Some(d) if d > 0 && d + 1 < segment.len() => segment[d + 1..].to_lowercase(),
        _ => TYPE_NONE.to_string(),
    };
    (subdir, ty)
}

/// One resource with its global (all-robot) request count `n_G`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub path: String,
    pub count: u64,
}

/// Resources of one type within a subdirectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeEntry {
    pub name: String,
    pub resources: Vec<ResourceEntry>,
}

impl TypeEntry {
    /// Global request count for the type: `m_G = sum of n_G`.
    pub fn global_count(&self) -> u64 {
        self.resources.iter().map(|r| r.count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdirEntry {
    pub path: String,
    pub types: Vec<TypeEntry>,
}

impl SubdirEntry {
    /// Number of distinct resources in the subdirectory (`R_i`).
    pub fn resource_count(&self) -> usize {
        self.types.iter().map(|t| t.resources.len()).sum()
    }

    pub fn request_count(&self) -> u64 {
        self.types.iter().map(|t| t.global_count()).sum()
    }
}

/// The site's resource universe, tallied from an observed trace. Every
/// level is sorted by name so lookups are binary searches and serialization
/// is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceCatalog {
    subdirs: Vec<SubdirEntry>,
}

impl ResourceCatalog {
    pub fn subdirs(&self) -> &[SubdirEntry] {
        &self.subdirs
    }

    pub fn is_empty(&self) -> bool {
        self.subdirs.is_empty()
    }

    pub fn subdir_index(&self, path: &str) -> Option<usize> {
        self.subdirs.binary_search_by(|s| s.path.as_str().cmp(path)).ok()
    }

    /// Locate a path as (subdir, type, resource) indices.
    pub fn locate(&self, path: &str) -> Option<(u32, u32, u32)> {
        let (subdir, ty) = split_path(path);
        let d = self.subdir_index(subdir)?;
        let entry = &self.subdirs[d];
        let t = entry.types.binary_search_by(|x| x.name.as_str().cmp(&ty)).ok()?;
        let r = entry.types[t]
            .resources
            .binary_search_by(|x| x.path.as_str().cmp(path))
            .ok()?;
        Some((d as u32, t as u32, r as u32))
    }

    pub fn resource_path(&self, subdir: u32, ty: u32, res: u32) -> &str {
        &self.subdirs[subdir as usize].types[ty as usize].resources[res as usize].path
    }

    pub fn distinct_resources(&self) -> usize {
        self.subdirs.iter().map(|s| s.resource_count()).sum()
    }

    /// Structural checks used when loading a model file: sorted levels,
    /// nonempty subdirectories, positive counts.
    pub fn check(&self) -> Result<(), ResourceError> {
        if self.subdirs.is_empty() {
            return Err(ResourceError::EmptyCatalog);
        }
        let sorted = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(ResourceError::DimensionMismatch(format!("catalog {what} not sorted/unique")))
            }
        };
        sorted(
            self.subdirs.windows(2).all(|w| w[0].path < w[1].path),
            "subdirectories",
        )?;
        for s in &self.subdirs {
            if s.resource_count() == 0 {
                return Err(ResourceError::DimensionMismatch(format!(
                    "subdirectory `{}` has no resources",
                    s.path
                )));
            }
            sorted(s.types.windows(2).all(|w| w[0].name < w[1].name), "types")?;
            for t in &s.types {
                sorted(
                    t.resources.windows(2).all(|w| w[0].path < w[1].path),
                    "resources",
                )?;
            }
        }
        Ok(())
    }
}

/// Tally the catalog from observed traffic. Paths are grouped by parent
/// subdirectory and file-extension type; per-resource counts are global
/// request counts across all robots.
pub fn build_catalog(trace: &Trace) -> Result<ResourceCatalog, ResourceError> {
    if trace.is_empty() {
        return Err(ResourceError::EmptyTrace);
    }
    let mut map: BTreeMap<&str, BTreeMap<String, BTreeMap<&str, u64>>> = BTreeMap::new();
    for req in trace.requests() {
        let (subdir, ty) = split_path(&req.path);
        *map.entry(subdir)
            .or_default()
            .entry(ty)
            .or_default()
            .entry(req.path.as_str())
            .or_insert(0) += 1;
    }
    let subdirs = map
        .into_iter()
        .map(|(path, types)| SubdirEntry {
            path: path.to_string(),
            types: types
                .into_iter()
                .map(|(name, resources)| TypeEntry {
                    name,
                    resources: resources
                        .into_iter()
                        .map(|(path, count)| ResourceEntry { path: path.to_string(), count })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    Ok(ResourceCatalog { subdirs })
}

/// Categorical over subdirectories, proportional to resource counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdirectoryDist<F> {
    pub probs: CategoricalParams<F>,
}

pub fn fit_subdirectory_dist<F: Scalar>(
    catalog: &ResourceCatalog,
) -> Result<SubdirectoryDist<F>, ResourceError> {
    if catalog.is_empty() {
        return Err(ResourceError::EmptyCatalog);
    }
    let weights: Vec<F> = catalog
        .subdirs()
        .iter()
        .map(|s| from_count(s.resource_count() as u64))
        .collect();
    Ok(SubdirectoryDist { probs: CategoricalParams::from_weights(&weights)? })
}

/// Prior strength settings. Constant strengths by default; the data-scaled
/// mode ties each subdirectory's strength to its global observation count,
/// so the prior carries the weight of the data behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorStrengths {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default)]
    pub data_scaled: bool,
}

impl Default for PriorStrengths {
    fn default() -> Self {
        PriorStrengths { alpha: 1.0, gamma: 1.0, data_scaled: false }
    }
}

/// Dirichlet hyperparameters for one subdirectory, proportional to global
/// request statistics: `alpha_j = alpha * mG_j / sum(mG)` over types and
/// `gamma_jl = gamma * nG_jl / sum_l(nG_jl)` over each type's resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletHyperparams<F> {
    pub alpha: Vec<F>,
    pub gamma: Vec<Vec<F>>,
    pub alpha_strength: F,
    pub gamma_strength: F,
}

pub fn fit_hyperparameters<F: Scalar>(
    catalog: &ResourceCatalog,
    subdir: &str,
    alpha_strength: F,
    gamma_strength: F,
) -> Result<DirichletHyperparams<F>, ResourceError> {
    let d = catalog
        .subdir_index(subdir)
        .ok_or_else(|| ResourceError::UnknownSubdirectory(subdir.to_string()))?;
    fit_hyperparameters_at(catalog, d, alpha_strength, gamma_strength)
}

fn fit_hyperparameters_at<F: Scalar>(
    catalog: &ResourceCatalog,
    subdir: usize,
    alpha_strength: F,
    gamma_strength: F,
) -> Result<DirichletHyperparams<F>, ResourceError> {
    if !(alpha_strength > F::zero()) || !alpha_strength.is_finite() {
        return Err(ResourceError::InvalidStrength(alpha_strength.to_f64().unwrap_or(f64::NAN)));
    }
    if !(gamma_strength > F::zero()) || !gamma_strength.is_finite() {
        return Err(ResourceError::InvalidStrength(gamma_strength.to_f64().unwrap_or(f64::NAN)));
    }
    let entry = &catalog.subdirs()[subdir];
    let type_totals: Vec<u64> = entry.types.iter().map(|t| t.global_count()).collect();
    let grand_total: u64 = type_totals.iter().sum();
    if grand_total == 0 {
        return Err(ResourceError::ZeroGlobalCounts(entry.path.clone()));
    }

    let alpha = type_totals
        .iter()
        .map(|&m| alpha_strength * from_count::<F>(m) / from_count(grand_total))
        .collect();
    let gamma = entry
        .types
        .iter()
        .zip(&type_totals)
        .map(|(t, &total)| {
            t.resources
                .iter()
                .map(|r| {
                    if total == 0 {
                        F::zero()
                    } else {
                        gamma_strength * from_count::<F>(r.count) / from_count(total)
                    }
                })
                .collect()
        })
        .collect();
    Ok(DirichletHyperparams { alpha, gamma, alpha_strength, gamma_strength })
}

/// MAP-estimated request distribution for one robot in one subdirectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSubdirModel<F> {
    /// Probability over the subdirectory's K resource types.
    pub type_probs: CategoricalParams<F>,
    /// Per-type probability over that type's resources.
    pub resource_probs: Vec<CategoricalParams<F>>,
}

/// Clamp-and-renormalize MAP numerators into a probability vector. The
/// conjugate-posterior numerators (prior + count - 1) can go negative when a
/// hyperparameter component is below one and the count is zero; the
/// Dirichlet mode then sits on the simplex boundary, so negatives clamp to
/// zero. An all-zero vector falls back to the prior proportions.
fn map_vector<F: Scalar>(prior: &[F], counts: &[u64]) -> Result<CategoricalParams<F>, FitError> {
    let numerators: Vec<F> = prior
        .iter()
        .zip(counts)
        .map(|(a, &c)| (*a + from_count::<F>(c) - F::one()).max(F::zero()))
        .collect();
    if numerators.iter().any(|x| *x > F::zero()) {
        return CategoricalParams::from_weights(&numerators);
    }
    if prior.iter().any(|x| *x > F::zero()) {
        return CategoricalParams::from_weights(prior);
    }
    // A type with zero prior mass everywhere has no global requests; keep
    // the vector valid with a uniform draw.
    CategoricalParams::from_weights(&vec![F::one(); prior.len()])
}

/// Analytic MAP estimate for one robot in one subdirectory, given the
/// robot's per-type request counts `m_j`, per-resource counts `n_jl`, and
/// the subdirectory hyperparameters.
pub fn fit_map<F: Scalar>(
    type_counts: &[u64],
    resource_counts: &[Vec<u64>],
    hyper: &DirichletHyperparams<F>,
) -> Result<RobotSubdirModel<F>, ResourceError> {
    let k = hyper.alpha.len();
    if type_counts.len() != k || resource_counts.len() != k || hyper.gamma.len() != k {
        return Err(ResourceError::DimensionMismatch(format!(
            "expected {k} types, got counts={} resources={} gamma={}",
            type_counts.len(),
            resource_counts.len(),
            hyper.gamma.len()
        )));
    }
    for (j, (counts, gammas)) in resource_counts.iter().zip(&hyper.gamma).enumerate() {
        if counts.len() != gammas.len() {
            return Err(ResourceError::DimensionMismatch(format!(
                "type {j}: {} resource counts vs {} gamma components",
                counts.len(),
                gammas.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total != type_counts[j] {
            return Err(ResourceError::InconsistentCounts {
                type_index: j,
                type_total: type_counts[j],
                resource_total: total,
            });
        }
    }

    let type_probs = map_vector(&hyper.alpha, type_counts)?;
    let resource_probs = resource_counts
        .iter()
        .zip(&hyper.gamma)
        .map(|(counts, gammas)| map_vector(gammas, counts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RobotSubdirModel { type_probs, resource_probs })
}

/// A robot's training-data request counts, keyed by catalog indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotHistory {
    pub subdirs: Vec<SubdirHistory>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdirHistory {
    pub subdir: u32,
    pub counts: Vec<ResourceCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCount {
    pub type_idx: u32,
    pub res_idx: u32,
    pub count: u64,
}

impl RobotHistory {
    /// Regroup a flat (subdir, type, resource) -> count table.
    pub fn from_counts(counts: BTreeMap<(u32, u32, u32), u64>) -> Self {
        let mut subdirs: Vec<SubdirHistory> = Vec::new();
        for ((d, t, r), count) in counts {
            match subdirs.last_mut() {
                Some(last) if last.subdir == d => {
                    last.counts.push(ResourceCount { type_idx: t, res_idx: r, count })
                }
                _ => subdirs.push(SubdirHistory {
                    subdir: d,
                    counts: vec![ResourceCount { type_idx: t, res_idx: r, count }],
                }),
            }
        }
        RobotHistory { subdirs }
    }

    pub fn subdir_counts(&self, subdir: u32) -> Option<&SubdirHistory> {
        self.subdirs
            .binary_search_by_key(&subdir, |s| s.subdir)
            .ok()
            .map(|i| &self.subdirs[i])
    }

    pub fn total_requests(&self) -> u64 {
        self.subdirs.iter().flat_map(|s| s.counts.iter().map(|c| c.count)).sum()
    }
}

/// The full request-path sampler: subdirectory draw, then the per-robot MAP
/// model for (robot, subdirectory). Per-pair models are computed lazily on
/// first use and memoized; the fill is idempotent under concurrent access.
pub struct PathModel<'a> {
    catalog: &'a ResourceCatalog,
    histories: &'a [RobotHistory],
    subdir_cumulative: Vec<f64>,
    hypers: Vec<DirichletHyperparams<f64>>,
    memo: Mutex<HashMap<(u32, u32), Arc<RobotSubdirModel<f64>>>>,
}

impl<'a> PathModel<'a> {
    pub fn new(
        catalog: &'a ResourceCatalog,
        histories: &'a [RobotHistory],
        strengths: PriorStrengths,
    ) -> Result<Self, ResourceError> {
        let dist: SubdirectoryDist<f64> = fit_subdirectory_dist(catalog)?;
        let mut subdir_cumulative = Vec::with_capacity(dist.probs.len());
        let mut acc = 0.0;
        for p in dist.probs.probs() {
            acc += *p;
            subdir_cumulative.push(acc);
        }
        let hypers = (0..catalog.subdirs().len())
            .map(|d| {
                let (alpha, gamma) = if strengths.data_scaled {
                    let observations = catalog.subdirs()[d].request_count() as f64;
                    (observations, observations)
                } else {
                    (strengths.alpha, strengths.gamma)
                };
                fit_hyperparameters_at(catalog, d, alpha, gamma)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PathModel {
            catalog,
            histories,
            subdir_cumulative,
            hypers,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn catalog(&self) -> &ResourceCatalog {
        self.catalog
    }

    /// MAP model for one (robot, subdirectory) pair, memoized.
    pub fn robot_model(&self, robot: u32, subdir: u32) -> Result<Arc<RobotSubdirModel<f64>>, ResourceError> {
        let mut memo = self.memo.lock().expect("memo lock");
        if let Some(model) = memo.get(&(robot, subdir)) {
            return Ok(Arc::clone(model));
        }
        let entry = &self.catalog.subdirs()[subdir as usize];
        let k = entry.types.len();
        let mut type_counts = vec![0u64; k];
        let mut resource_counts: Vec<Vec<u64>> =
            entry.types.iter().map(|t| vec![0u64; t.resources.len()]).collect();
        if let Some(history) = self.histories[robot as usize].subdir_counts(subdir) {
            for c in &history.counts {
                type_counts[c.type_idx as usize] += c.count;
                resource_counts[c.type_idx as usize][c.res_idx as usize] += c.count;
            }
        }
        let model = Arc::new(fit_map(&type_counts, &resource_counts, &self.hypers[subdir as usize])?);
        memo.insert((robot, subdir), Arc::clone(&model));
        Ok(model)
    }

    /// Draw subdirectory ~ sigma, type ~ theta, resource ~ P_t; return the
    /// resource's full path. Only catalogued paths can be emitted.
    pub fn sample_request_path<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        robot: u32,
    ) -> Result<&'a str, ResourceError> {
        let u = rng.random::<f64>();
        let d = self.subdir_cumulative.partition_point(|c| *c <= u).min(self.subdir_cumulative.len() - 1);
        let model = self.robot_model(robot, d as u32)?;
        let t = sample_categorical(rng, &model.type_probs);
        let r = sample_categorical(rng, &model.resource_probs[t]);
        Ok(self.catalog.resource_path(d as u32, t as u32, r as u32))
    }
}
