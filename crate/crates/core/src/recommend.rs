//! Preference-weighted recommendation over concept clusters.
//!
//! Clusters are weighted by how well their modes match the preference
//! profile, the N-item budget is apportioned by largest remainder, and each
//! cluster contributes its share by rank or by seeded draw. Without a
//! profile every cluster gets an equal share.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Gender};
use crate::clustering::ClusterModel;
use crate::error::{Error, Result};
use crate::model::{ModelStore, SliceModel};
use crate::space::{FeatureSpace, FeatureVector, PreferenceProfile, WeightConfig};

const REMAINDER_TIE: f64 = 1e-12;
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceMode {
    WithPreference,
    WithoutPreference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    DeterministicRank,
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationRequest {
    pub gender: Gender,
    pub occasion: String,
    pub n: usize,
    pub mode: PreferenceMode,
    pub profile: Option<PreferenceProfile>,
    pub sampling: Sampling,
    pub seed: u64,
    pub epsilon: f64,
}

impl RecommendationRequest {
    pub fn with_preference(
        gender: Gender,
        occasion: impl Into<String>,
        profile: PreferenceProfile,
    ) -> Self {
        RecommendationRequest {
            gender,
            occasion: occasion.into(),
            n: 10,
            mode: PreferenceMode::WithPreference,
            profile: Some(profile),
            sampling: Sampling::default(),
            seed: 0,
            epsilon: 0.01,
        }
    }

    pub fn without_preference(gender: Gender, occasion: impl Into<String>) -> Self {
        RecommendationRequest {
            gender,
            occasion: occasion.into(),
            n: 10,
            mode: PreferenceMode::WithoutPreference,
            profile: None,
            sampling: Sampling::default(),
            seed: 0,
            epsilon: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be a finite non-negative number, got {}",
                self.epsilon
            )));
        }
        match (self.mode, self.profile.is_some()) {
            (PreferenceMode::WithPreference, false) => Err(Error::InvalidArgument(
                "with_preference requires a preference profile".into(),
            )),
            (PreferenceMode::WithoutPreference, true) => Err(Error::InvalidArgument(
                "without_preference must not carry a preference profile".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedItem {
    pub record_id: String,
    pub cluster: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    /// Ordered by cluster index, then rank within the cluster. The order is
    /// fixed for reproducibility and carries no meaning.
    pub items: Vec<RecommendedItem>,
    pub cluster_weights: Vec<f64>,
    pub allocation: Vec<usize>,
    pub diversity: f64,
    pub relevance_proxy: Option<f64>,
}

/// Normalized cluster weights `(match_c + eps) / sum(match + eps)`.
/// Falls back to uniform weights when every term is zero.
pub fn weight_clusters(
    space: &FeatureSpace,
    profile: &PreferenceProfile,
    model: &ClusterModel,
    weights: WeightConfig,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let matches = model
        .modes
        .iter()
        .map(|m| space.profile_match(profile, m, weights))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize_matches(&matches, epsilon))
}

pub(crate) fn normalize_matches(matches: &[f64], epsilon: f64) -> Vec<f64> {
    let shifted: Vec<f64> = matches.iter().map(|m| m + epsilon).collect();
    let total: f64 = shifted.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / matches.len() as f64; matches.len()];
    }
    shifted.into_iter().map(|s| s / total).collect()
}

/// Largest-remainder apportionment of `n` seats.
///
/// Leftover seats go to the largest fractional remainders; equal remainders
/// go to the higher similarity, then the lower index.
pub fn allocate(weights: &[f64], n: usize, similarities: &[f64]) -> Vec<usize> {
    assert_eq!(
        weights.len(),
        similarities.len(),
        "one similarity per cluster"
    );
    if weights.is_empty() {
        return Vec::new();
    }
    let quotas: Vec<f64> = weights
        .iter()
        .map(|&w| {
            let q = n as f64 * w;
            if (q - q.round()).abs() < SNAP {
                q.round()
            } else {
                q
            }
        })
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor().max(0.0) as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        if (ra - rb).abs() > REMAINDER_TIE {
            rb.partial_cmp(&ra).unwrap_or(Ordering::Equal)
        } else {
            similarities[b]
                .partial_cmp(&similarities[a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        }
    });
    // weights summing slightly above 1 can overshoot by a seat
    while assigned > n {
        let &c = order
            .iter()
            .rev()
            .find(|&&c| counts[c] > 0)
            .expect("some cluster has seats");
        counts[c] -= 1;
        assigned -= 1;
    }
    let mut i = 0;
    while assigned < n {
        counts[order[i % order.len()]] += 1;
        assigned += 1;
        i += 1;
    }
    counts
}

/// Equal shares `floor(n / k)`; the remainder goes to the largest clusters
/// first (lower index on ties).
pub fn equal_allocation(cluster_sizes: &[usize], n: usize) -> Vec<usize> {
    let k = cluster_sizes.len();
    if k == 0 {
        return Vec::new();
    }
    let mut counts = vec![n / k; k];
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| cluster_sizes[b].cmp(&cluster_sizes[a]).then(a.cmp(&b)));
    for &c in order.iter().take(n % k) {
        counts[c] += 1;
    }
    counts
}

/// A cluster member eligible for sampling.
#[derive(Debug, Clone, Copy)]
pub struct Member<'a> {
    pub record_id: &'a str,
    pub vector: &'a FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSample {
    pub record_ids: Vec<String>,
    /// Seats that could not be filled from this cluster.
    pub surplus: usize,
}

/// Picks `count` members of one cluster.
///
/// With `DeterministicRank` and a profile, members are ranked by profile
/// match (descending, record id ascending on ties). Otherwise a seeded
/// uniform draw without replacement is used.
pub fn sample_cluster(
    space: &FeatureSpace,
    members: &[Member<'_>],
    profile: Option<&PreferenceProfile>,
    weights: WeightConfig,
    count: usize,
    sampling: Sampling,
    seed: u64,
) -> Result<ClusterSample> {
    let take = count.min(members.len());
    let surplus = count - take;
    let mut ordered: Vec<&Member<'_>> = members.iter().collect();
    match (sampling, profile) {
        (Sampling::DeterministicRank, Some(p)) => {
            let scores = members
                .iter()
                .map(|m| space.profile_match(p, m.vector, weights))
                .collect::<Result<Vec<_>>>()?;
            let mut idx: Vec<usize> = (0..members.len()).collect();
            idx.sort_by(|&a, &b| {
                scores[b]
                    .partial_cmp(&scores[a])
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| members[a].record_id.cmp(members[b].record_id))
            });
            ordered = idx.into_iter().map(|i| &members[i]).collect();
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..take {
                let j = rng.random_range(i as u64..ordered.len() as u64) as usize;
                ordered.swap(i, j);
            }
        }
    }
    Ok(ClusterSample {
        record_ids: ordered[..take]
            .iter()
            .map(|m| m.record_id.to_string())
            .collect(),
        surplus,
    })
}

/// Moves seats from clusters that are too small to the heaviest clusters
/// with spare members. `priority` lists clusters heaviest first.
fn redistribute(allocation: &mut [usize], sizes: &[usize], priority: &[usize]) {
    let mut surplus = 0;
    for (a, &s) in allocation.iter_mut().zip(sizes) {
        if *a > s {
            surplus += *a - s;
            *a = s;
        }
    }
    for &c in priority {
        if surplus == 0 {
            break;
        }
        let give = (sizes[c] - allocation[c]).min(surplus);
        allocation[c] += give;
        surplus -= give;
    }
}

fn cluster_seed(seed: u64, cluster: usize) -> u64 {
    seed ^ (cluster as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Mean pairwise plain-delta dissimilarity over the maximum possible score.
pub fn diversity(space: &FeatureSpace, vectors: &[&FeatureVector], weights: WeightConfig) -> f64 {
    let n = vectors.len();
    if n < 2 {
        return 0.0;
    }
    let max = space.max_score(weights);
    if max <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += space.plain_distance(vectors[i], vectors[j], weights);
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    total / pairs / max
}

/// Mean profile match over the maximum possible score.
pub fn relevance_proxy(
    space: &FeatureSpace,
    vectors: &[&FeatureVector],
    profile: &PreferenceProfile,
    weights: WeightConfig,
) -> Result<f64> {
    if vectors.is_empty() {
        return Ok(0.0);
    }
    let max = space.max_score(weights);
    let mut total = 0.0;
    for v in vectors {
        total += space.profile_match(profile, v, weights)?;
    }
    Ok(if max > 0.0 {
        total / vectors.len() as f64 / max
    } else {
        0.0
    })
}

/// End-to-end recommendation for one slice, building its cluster model in
/// `store` if needed.
pub fn recommend(
    request: &RecommendationRequest,
    catalog: &Catalog,
    store: &ModelStore,
) -> Result<Recommendation> {
    request.validate()?;
    let space = FeatureSpace::new(catalog.schema());
    let model = store.get_or_build(catalog, &space, request.gender, &request.occasion)?;
    recommend_with_model(request, catalog, &space, &model)
}

/// Recommendation against an explicit slice model.
pub fn recommend_with_model(
    request: &RecommendationRequest,
    catalog: &Catalog,
    space: &FeatureSpace,
    slice: &SliceModel,
) -> Result<Recommendation> {
    request.validate()?;
    if slice.gender != request.gender || slice.occasion != request.occasion {
        return Err(Error::InvalidArgument(format!(
            "model is for {}/{} but the request is for {}/{}",
            slice.gender, slice.occasion, request.gender, request.occasion
        )));
    }
    let records = slice
        .record_ids
        .iter()
        .map(|id| {
            catalog
                .get(id)
                .ok_or_else(|| Error::model(format!("assignments.{id}"), "record not in catalog"))
        })
        .collect::<Result<Vec<_>>>()?;
    if records.is_empty() {
        return Err(Error::EmptySlice {
            gender: request.gender.to_string(),
            occasion: request.occasion.clone(),
        });
    }
    let vectors: Vec<FeatureVector> = records.iter().map(|r| space.encode(r)).collect();
    let model = &slice.model;
    let w = slice.weights;
    let k = model.k;
    let sizes = model.cluster_sizes();
    let target = request.n.min(records.len());

    let (cluster_weights, mut allocation, priority) = match &request.profile {
        Some(profile) => {
            let sims = model
                .modes
                .iter()
                .map(|m| space.profile_match(profile, m, w))
                .collect::<Result<Vec<_>>>()?;
            let cw = normalize_matches(&sims, request.epsilon);
            let alloc = allocate(&cw, target, &sims);
            let mut priority: Vec<usize> = (0..k).collect();
            priority.sort_by(|&a, &b| {
                cw[b]
                    .partial_cmp(&cw[a])
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| sims[b].partial_cmp(&sims[a]).unwrap_or(Ordering::Equal))
                    .then(a.cmp(&b))
            });
            (cw, alloc, priority)
        }
        None => {
            let alloc = equal_allocation(&sizes, target);
            let mut priority: Vec<usize> = (0..k).collect();
            priority.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
            (vec![1.0 / k as f64; k], alloc, priority)
        }
    };
    redistribute(&mut allocation, &sizes, &priority);

    let mut items = Vec::with_capacity(target);
    let mut chosen: Vec<&FeatureVector> = Vec::with_capacity(target);
    for (c, &count) in allocation.iter().enumerate() {
        let idx = model.members(c);
        let members: Vec<Member<'_>> = idx
            .iter()
            .map(|&i| Member {
                record_id: &records[i].record_id,
                vector: &vectors[i],
            })
            .collect();
        let sample = sample_cluster(
            space,
            &members,
            request.profile.as_ref(),
            w,
            count,
            request.sampling,
            cluster_seed(request.seed, c),
        )?;
        debug_assert_eq!(sample.surplus, 0, "redistribution leaves no surplus");
        for id in sample.record_ids {
            let i = idx
                .iter()
                .copied()
                .find(|&i| records[i].record_id == id)
                .expect("sampled from members");
            chosen.push(&vectors[i]);
            items.push(RecommendedItem {
                image_ref: records[i].image_ref.clone(),
                record_id: id,
                cluster: c,
            });
        }
    }

    let diversity = diversity(space, &chosen, w);
    let relevance_proxy = match &request.profile {
        Some(p) => Some(relevance_proxy(space, &chosen, p, w)?),
        None => None,
    };
    Ok(Recommendation {
        items,
        cluster_weights,
        allocation,
        diversity,
        relevance_proxy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestDocument {
    pub gender: Gender,
    pub occasion: String,
    pub n: usize,
    pub mode: PreferenceMode,
    pub sampling: Sampling,
    pub seed: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Serialized form of a [`Recommendation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationDocument {
    pub request: RequestDocument,
    pub items: Vec<RecommendedItem>,
    pub cluster_weights: Vec<f64>,
    pub allocation: Vec<usize>,
    pub diversity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance_proxy: Option<f64>,
}

impl RecommendationDocument {
    pub fn new(
        request: &RecommendationRequest,
        weights: WeightConfig,
        rec: &Recommendation,
    ) -> Self {
        RecommendationDocument {
            request: RequestDocument {
                gender: request.gender,
                occasion: request.occasion.clone(),
                n: request.n,
                mode: request.mode,
                sampling: request.sampling,
                seed: request.seed,
                epsilon: request.epsilon,
                alpha: weights.alpha,
                beta: weights.beta,
            },
            items: rec.items.clone(),
            cluster_weights: rec.cluster_weights.clone(),
            allocation: rec.allocation.clone(),
            diversity: rec.diversity,
            relevance_proxy: rec.relevance_proxy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub items: usize,
    pub unique_items: usize,
    pub diversity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relevance_proxy: Option<f64>,
}

/// Recomputes the metrics of a recommendation document against a catalog.
pub fn evaluate(
    doc: &RecommendationDocument,
    catalog: &Catalog,
    profile: Option<&PreferenceProfile>,
) -> Result<EvaluationReport> {
    let space = FeatureSpace::new(catalog.schema());
    let weights = WeightConfig::new(doc.request.alpha, doc.request.beta)?;
    let vectors = doc
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            catalog
                .get(&item.record_id)
                .map(|r| space.encode(r))
                .ok_or_else(|| {
                    Error::catalog(
                        format!("items[{i}].record_id"),
                        format!("record {:?} not in catalog", item.record_id),
                    )
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&FeatureVector> = vectors.iter().collect();
    let unique = doc
        .items
        .iter()
        .map(|i| i.record_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    Ok(EvaluationReport {
        items: doc.items.len(),
        unique_items: unique,
        diversity: diversity(&space, &refs, weights),
        relevance_proxy: match profile {
            Some(p) => Some(relevance_proxy(&space, &refs, p, weights)?),
            None => None,
        },
    })
}
