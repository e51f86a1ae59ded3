//! Feature-weighted k-modes, the silhouette index and cluster-count selection.
//!
//! All functions are deterministic: initial modes come from a ChaCha stream
//! derived from `(seed, k, restart)`, ties in assignment go to the lowest
//! cluster index and ties in mode selection go to the smallest value id.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{FeatureSpace, FeatureVector, WeightConfig};

/// How a point is compared with a cluster mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Plain,
    #[default]
    FrequencyWeighted,
}

/// How initial modes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// `restarts` seeded draws of k distinct data points.
    #[default]
    Sample,
    /// Every k-subset of the vectors built from values observed per slot.
    /// Optimal modes are per-slot majorities, so one of these runs starts
    /// at a global optimum. Only feasible for tiny spaces.
    Exhaustive,
}

/// Upper bound on the number of runs [`InitMethod::Exhaustive`] may launch.
pub const EXHAUSTIVE_RUN_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct KModesConfig {
    pub weights: WeightConfig,
    pub delta_mode: DeltaMode,
    pub init: InitMethod,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub k_min: usize,
    /// Upper end of the k sweep; `None` means `min(10, n - 1)`.
    pub k_max: Option<usize>,
}

impl Default for KModesConfig {
    fn default() -> Self {
        KModesConfig {
            weights: WeightConfig::default(),
            delta_mode: DeltaMode::default(),
            init: InitMethod::default(),
            max_iterations: 100,
            restarts: 8,
            seed: 0,
            k_min: 2,
            k_max: None,
        }
    }
}

impl KModesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.k_min < 1 {
            return Err(Error::InvalidArgument("k_min must be at least 1".into()));
        }
        if let Some(k_max) = self.k_max {
            if k_max < self.k_min {
                return Err(Error::InvalidArgument(format!(
                    "k_max ({k_max}) is smaller than k_min ({})",
                    self.k_min
                )));
            }
        }
        WeightConfig::new(self.weights.alpha, self.weights.beta)?;
        Ok(())
    }
}

/// A clustering of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub modes: Vec<FeatureVector>,
    /// point index -> cluster index.
    pub assignments: Vec<usize>,
    /// cluster -> slot -> share of the cluster holding the mode value.
    pub mode_freqs: Vec<Vec<f64>>,
    pub cost: f64,
    /// `None` when the silhouette is undefined (single cluster).
    pub silhouette: Option<f64>,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    /// Point indices of one cluster, ascending.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Trace of a single k-modes run from one initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct KModesRun {
    pub modes: Vec<FeatureVector>,
    pub assignments: Vec<usize>,
    pub mode_freqs: Vec<Vec<f64>>,
    pub cost: f64,
    /// Cost after every accepted (assign, update) pair and every productive
    /// move pass; non-increasing.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn point_to_mode(
    space: &FeatureSpace,
    x: &FeatureVector,
    mode: &FeatureVector,
    freqs: &[f64],
    config: &KModesConfig,
) -> f64 {
    match config.delta_mode {
        DeltaMode::Plain => space.plain_distance(x, mode, config.weights),
        DeltaMode::FrequencyWeighted => {
            space.weighted_mode_distance(x, mode, freqs, config.weights)
        }
    }
}

/// Assigns each vector to the mode at minimum distance; ties go to the
/// lowest cluster index.
pub fn assign_step(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    modes: &[FeatureVector],
    mode_freqs: &[Vec<f64>],
    config: &KModesConfig,
) -> Vec<usize> {
    assert!(!modes.is_empty(), "assign_step needs at least one mode");
    vectors
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, (m, f)) in modes.iter().zip(mode_freqs).enumerate() {
                let d = point_to_mode(space, x, m, f, config);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Per-cluster, per-slot majority values and their within-cluster shares.
///
/// Value ties go to the smallest id. Empty clusters are repaired first: the
/// point farthest from its own cluster's mode (plain delta, lowest index on
/// ties, taken from clusters with at least two members) is moved into the
/// empty cluster. The repair rewrites `assignments`.
pub fn update_modes(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    assignments: &mut [usize],
    k: usize,
    weights: WeightConfig,
) -> (Vec<FeatureVector>, Vec<Vec<f64>>) {
    loop {
        let (modes, freqs, sizes) = majority_modes(space, vectors, assignments, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return (modes, freqs);
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, x) in vectors.iter().enumerate() {
            let c = assignments[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = space.plain_distance(x, &modes[c], weights);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        match far {
            Some((i, _)) => assignments[i] = empty,
            // fewer points than clusters; nothing left to move
            None => return (modes, freqs),
        }
    }
}

fn majority_modes(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    assignments: &[usize],
    k: usize,
) -> (Vec<FeatureVector>, Vec<Vec<f64>>, Vec<usize>) {
    let slots = space.slots();
    let mut counts: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|_| slots.iter().map(|s| vec![0; s.len()]).collect())
        .collect();
    let mut sizes = vec![0usize; k];
    for (x, &c) in vectors.iter().zip(assignments) {
        sizes[c] += 1;
        for (j, &v) in x.values().iter().enumerate() {
            counts[c][j][v as usize] += 1;
        }
    }
    let mut modes = Vec::with_capacity(k);
    let mut freqs = Vec::with_capacity(k);
    for (c, per_slot) in counts.iter().enumerate() {
        let mut values = Vec::with_capacity(slots.len());
        let mut f = Vec::with_capacity(slots.len());
        for slot_counts in per_slot {
            let mut best = 0usize;
            for (v, &n) in slot_counts.iter().enumerate() {
                if n > slot_counts[best] {
                    best = v;
                }
            }
            values.push(best as u32);
            f.push(if sizes[c] == 0 {
                0.0
            } else {
                slot_counts[best] as f64 / sizes[c] as f64
            });
        }
        modes.push(FeatureVector::new(values));
        freqs.push(f);
    }
    (modes, freqs, sizes)
}

/// Share of each cluster holding the given mode value, per slot.
pub fn mode_frequencies(
    vectors: &[FeatureVector],
    assignments: &[usize],
    modes: &[FeatureVector],
) -> Vec<Vec<f64>> {
    let k = modes.len();
    let slots = modes.first().map(FeatureVector::len).unwrap_or(0);
    let mut hits = vec![vec![0usize; slots]; k];
    let mut sizes = vec![0usize; k];
    for (x, &c) in vectors.iter().zip(assignments) {
        sizes[c] += 1;
        for (j, (&a, &b)) in x.values().iter().zip(modes[c].values()).enumerate() {
            if a == b {
                hits[c][j] += 1;
            }
        }
    }
    hits.into_iter()
        .zip(sizes)
        .map(|(h, n)| {
            h.into_iter()
                .map(|m| if n == 0 { 0.0 } else { m as f64 / n as f64 })
                .collect()
        })
        .collect()
}

/// Total point-to-mode dissimilarity under the configured delta mode.
pub fn clustering_cost(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    assignments: &[usize],
    modes: &[FeatureVector],
    mode_freqs: &[Vec<f64>],
    config: &KModesConfig,
) -> f64 {
    vectors
        .iter()
        .zip(assignments)
        .map(|(x, &c)| point_to_mode(space, x, &modes[c], &mode_freqs[c], config))
        .sum()
}

fn rng_for(seed: u64, k: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | restart as u64);
    rng
}

/// Indices of the first occurrence of every distinct vector.
fn distinct_indices(vectors: &[FeatureVector]) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    (0..vectors.len())
        .filter(|&i| seen.insert(&vectors[i]))
        .collect()
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All k-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Candidate modes for [`InitMethod::Exhaustive`]: the cartesian product
/// of observed values per slot, in ascending order.
fn observed_product(vectors: &[FeatureVector], limit: usize) -> Option<Vec<FeatureVector>> {
    let slots = vectors.first()?.len();
    let observed: Vec<Vec<u32>> = (0..slots)
        .map(|j| {
            let mut vals: Vec<u32> = vectors.iter().map(|v| v.values()[j]).collect();
            vals.sort_unstable();
            vals.dedup();
            vals
        })
        .collect();
    let mut total: usize = 1;
    for o in &observed {
        total = total.checked_mul(o.len()).filter(|&t| t <= limit)?;
    }
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; slots];
    loop {
        out.push(FeatureVector::new(
            idx.iter().zip(&observed).map(|(&i, o)| o[i]).collect(),
        ));
        let mut j = slots;
        loop {
            if j == 0 {
                return Some(out);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < observed[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Initial mode sets, one per restart.
///
/// Modes are drawn from distinct vectors when there are at least k of them.
/// When the restart budget covers every k-subset of candidates, all subsets
/// are enumerated instead of sampled.
fn initializations(vectors: &[FeatureVector], k: usize, config: &KModesConfig) -> Vec<Vec<usize>> {
    let distinct = distinct_indices(vectors);
    let candidates = if distinct.len() >= k {
        distinct
    } else {
        (0..vectors.len()).collect()
    };
    if let Some(total) = binomial(candidates.len(), k) {
        if total <= config.restarts {
            return combinations(candidates.len(), k)
                .into_iter()
                .map(|c| c.into_iter().map(|i| candidates[i]).collect())
                .collect();
        }
    }
    (0..config.restarts)
        .map(|r| {
            let mut rng = rng_for(config.seed, k, r);
            let mut pool = candidates.clone();
            for i in 0..k {
                let j = rng.random_range(i as u64..pool.len() as u64) as usize;
                pool.swap(i, j);
            }
            pool.truncate(k);
            pool
        })
        .collect()
}

/// One k-modes run from the given initial modes.
///
/// Alternates assignment and mode update while the exact cost strictly
/// drops, then tries single-point moves between clusters, accepting any move
/// that strictly lowers the exact cost with recomputed modes. The two phases
/// repeat until neither improves the partition or the iteration budget is
/// spent. Each assign/update pair and each move pass is one iteration.
///
/// Under the frequency-weighted delta a reassignment can raise the exact
/// cost, because moving points shifts the frequencies it was scored with.
/// Such a step is rolled back, so the cost history never increases in
/// either mode.
pub fn kmodes_run(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    initial_modes: Vec<FeatureVector>,
    config: &KModesConfig,
) -> KModesRun {
    let k = initial_modes.len();
    let mut modes = initial_modes;
    let mut freqs = vec![vec![1.0; space.len()]; k];
    let mut assignments = assign_step(space, vectors, &modes, &freqs, config);
    let mut accepted = assignments.clone();
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    'outer: while iterations < config.max_iterations {
        loop {
            iterations += 1;
            let (m, f) = update_modes(space, vectors, &mut assignments, k, config.weights);
            let cost = clustering_cost(space, vectors, &assignments, &m, &f, config);
            if let Some(&prev) = history.last() {
                if cost >= prev {
                    if cost > prev {
                        assignments.clone_from(&accepted);
                    }
                    break;
                }
            }
            modes = m;
            freqs = f;
            history.push(cost);
            accepted.clone_from(&assignments);
            let next = assign_step(space, vectors, &modes, &freqs, config);
            if next == assignments {
                break;
            }
            if iterations >= config.max_iterations {
                break 'outer;
            }
            assignments = next;
        }
        if iterations >= config.max_iterations {
            break;
        }
        iterations += 1;
        if !move_pass(space, vectors, &mut assignments, k, config) {
            converged = true;
            break;
        }
        let (m, f) = update_modes(space, vectors, &mut assignments, k, config.weights);
        modes = m;
        freqs = f;
        history.push(clustering_cost(
            space,
            vectors,
            &assignments,
            &modes,
            &freqs,
            config,
        ));
        accepted.clone_from(&assignments);
        let next = assign_step(space, vectors, &modes, &freqs, config);
        if next == assignments {
            // a move-stable partition can still admit moves after the
            // update; loop again and let the move pass decide
            continue;
        }
        assignments = next;
    }
    let (m, f) = update_modes(space, vectors, &mut assignments, k, config.weights);
    modes = m;
    freqs = f;
    let cost = clustering_cost(space, vectors, &assignments, &modes, &freqs, config);
    KModesRun {
        modes,
        assignments,
        mode_freqs: freqs,
        cost,
        cost_history: history,
        iterations,
        converged,
    }
}

/// Exact cost of one cluster from its per-slot value counts, with the
/// majority value as mode.
fn cluster_cost(
    counts: &[Vec<usize>],
    size: usize,
    space: &FeatureSpace,
    config: &KModesConfig,
) -> f64 {
    if size == 0 {
        return 0.0;
    }
    let mut cat = 0.0;
    let mut attr = 0.0;
    for (j, c) in counts.iter().enumerate() {
        let top = *c.iter().max().unwrap_or(&0) as f64;
        let s = size as f64;
        let d = match config.delta_mode {
            DeltaMode::Plain => s - top,
            DeltaMode::FrequencyWeighted => s - top * top / s,
        };
        if space.is_category_slot(j) {
            cat += d;
        } else {
            attr += d;
        }
    }
    config.weights.alpha * cat + config.weights.beta * attr
}

/// One sweep of single-point moves. Returns whether any point moved.
fn move_pass(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    assignments: &mut [usize],
    k: usize,
    config: &KModesConfig,
) -> bool {
    let mut counts: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|_| space.slots().iter().map(|s| vec![0; s.len()]).collect())
        .collect();
    let mut sizes = vec![0usize; k];
    for (x, &c) in vectors.iter().zip(assignments.iter()) {
        sizes[c] += 1;
        for (j, &v) in x.values().iter().enumerate() {
            counts[c][j][v as usize] += 1;
        }
    }
    let mut costs: Vec<f64> = (0..k)
        .map(|c| cluster_cost(&counts[c], sizes[c], space, config))
        .collect();
    let apply = |counts: &mut Vec<Vec<Vec<usize>>>, c: usize, x: &FeatureVector, add: bool| {
        for (j, &v) in x.values().iter().enumerate() {
            let n = &mut counts[c][j][v as usize];
            if add {
                *n += 1;
            } else {
                *n -= 1;
            }
        }
    };
    let mut moved = false;
    for (i, x) in vectors.iter().enumerate() {
        let from = assignments[i];
        if sizes[from] < 2 {
            continue;
        }
        apply(&mut counts, from, x, false);
        let from_cost = cluster_cost(&counts[from], sizes[from] - 1, space, config);
        let mut best: Option<(usize, f64, f64)> = None;
        for to in (0..k).filter(|&c| c != from) {
            apply(&mut counts, to, x, true);
            let to_cost = cluster_cost(&counts[to], sizes[to] + 1, space, config);
            apply(&mut counts, to, x, false);
            let gain = costs[from] + costs[to] - from_cost - to_cost;
            if gain > 1e-9 && best.is_none_or(|(_, g, _)| gain > g) {
                best = Some((to, gain, to_cost));
            }
        }
        match best {
            Some((to, _, to_cost)) => {
                apply(&mut counts, to, x, true);
                sizes[from] -= 1;
                sizes[to] += 1;
                costs[from] = from_cost;
                costs[to] = to_cost;
                assignments[i] = to;
                moved = true;
            }
            None => apply(&mut counts, from, x, true),
        }
    }
    moved
}

/// Every restart of k-modes for a fixed k, in restart order.
pub fn kmodes_runs(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    k: usize,
    config: &KModesConfig,
) -> Result<Vec<KModesRun>> {
    config.validate()?;
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > vectors.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the number of points ({})",
            vectors.len()
        )));
    }
    for v in vectors {
        space.check_vector(v)?;
    }
    let (pool, inits) = match config.init {
        InitMethod::Sample => (vectors.to_vec(), initializations(vectors, k, config)),
        InitMethod::Exhaustive => {
            let too_many = || {
                Error::InvalidArgument(format!(
                    "exhaustive initialization for k = {k} exceeds {EXHAUSTIVE_RUN_LIMIT} runs"
                ))
            };
            let pool = observed_product(vectors, EXHAUSTIVE_RUN_LIMIT).ok_or_else(too_many)?;
            if pool.len() < k {
                // fewer candidate modes than clusters: every point is identical
                (vectors.to_vec(), initializations(vectors, k, config))
            } else {
                match binomial(pool.len(), k) {
                    Some(t) if t <= EXHAUSTIVE_RUN_LIMIT => {}
                    _ => return Err(too_many()),
                }
                let inits = combinations(pool.len(), k);
                (pool, inits)
            }
        }
    };
    Ok(inits
        .into_par_iter()
        .map(|idx| {
            let modes = idx.iter().map(|&i| pool[i].clone()).collect();
            kmodes_run(space, vectors, modes, config)
        })
        .collect())
}

/// Best-of-restarts k-modes (lowest cost, earliest restart on ties).
pub fn kmodes(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    k: usize,
    config: &KModesConfig,
) -> Result<ClusterModel> {
    let runs = kmodes_runs(space, vectors, k, config)?;
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.cost < best.cost { run } else { best })
        .expect("at least one restart");
    Ok(ClusterModel {
        k,
        modes: best.modes,
        assignments: best.assignments,
        mode_freqs: best.mode_freqs,
        cost: best.cost,
        silhouette: None,
    })
}

/// Mean silhouette over all points using plain-delta weighted distances.
///
/// Points in singleton clusters score 0, as do points with `a = b = 0`.
pub fn silhouette(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    assignments: &[usize],
    weights: WeightConfig,
) -> Result<f64> {
    if vectors.len() != assignments.len() {
        return Err(Error::InvalidArgument(format!(
            "{} vectors but {} assignments",
            vectors.len(),
            assignments.len()
        )));
    }
    let k = assignments.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in assignments {
        sizes[c] += 1;
    }
    let populated = sizes.iter().filter(|&&s| s > 0).count();
    if populated < 2 {
        return Err(Error::InvalidArgument(format!(
            "silhouette needs at least 2 clusters, got {populated}"
        )));
    }
    let n = vectors.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[assignments[j]] += space.plain_distance(&vectors[i], &vectors[j], weights);
            }
        }
        let own = assignments[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Runs k-modes over the configured k range and keeps the model with the
/// highest silhouette (smaller k on ties). Slices with fewer than 4 points
/// get a single cluster with an undefined silhouette.
pub fn select_k(
    space: &FeatureSpace,
    vectors: &[FeatureVector],
    config: &KModesConfig,
) -> Result<ClusterModel> {
    config.validate()?;
    let n = vectors.len();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot cluster an empty slice".into(),
        ));
    }
    if n < 4 {
        return kmodes(space, vectors, 1, config);
    }
    let upper = config.k_max.unwrap_or(10).min(n - 1);
    if config.k_min > upper {
        return Err(Error::InvalidArgument(format!(
            "k range [{}, {upper}] is empty for {n} points",
            config.k_min
        )));
    }
    let candidates: Vec<ClusterModel> = (config.k_min..=upper)
        .into_par_iter()
        .map(|k| {
            let mut model = kmodes(space, vectors, k, config)?;
            if k >= 2 {
                model.silhouette = Some(silhouette(
                    space,
                    vectors,
                    &model.assignments,
                    config.weights,
                )?);
            }
            Ok(model)
        })
        .collect::<Result<_>>()?;
    let score = |m: &ClusterModel| m.silhouette.unwrap_or(f64::NEG_INFINITY);
    Ok(candidates
        .into_iter()
        .reduce(|best, m| if score(&m) > score(&best) { m } else { best })
        .expect("non-empty k range"))
}
