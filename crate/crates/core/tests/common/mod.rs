#![allow(dead_code)]

use outfitter_core::{load_schema, FeatureSpace, FeatureVector, WeightConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `cat` category slots and `attr` attribute slots, each with `values`
/// real values plus the absent marker.
pub fn grid_space(cat: usize, attr: usize, values: usize) -> FeatureSpace {
    let regions: Vec<String> = (0..cat).map(|r| format!("\"r{r}\"")).collect();
    let mut cats = Vec::new();
    for r in 0..cat {
        for v in 0..values {
            cats.push(format!(
                r#"{{"id": {}, "name": "c{r}_{v}", "region": "r{r}"}}"#,
                cats.len()
            ));
        }
    }
    let attrs: Vec<String> = (0..attr)
        .map(|a| {
            let vals: Vec<String> = (0..values).map(|v| format!("\"v{v}\"")).collect();
            format!(
                r#"{{"id": {a}, "name": "a{a}", "values": [{}], "applies_to": [0]}}"#,
                vals.join(",")
            )
        })
        .collect();
    let doc = format!(
        r#"{{"occasions": ["o"], "body_regions": [{}], "categories": [{}], "attribute_types": [{}]}}"#,
        regions.join(","),
        cats.join(","),
        attrs.join(",")
    );
    FeatureSpace::new(&load_schema(&doc).unwrap())
}

pub fn random_vector(space: &FeatureSpace, rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector::new(
        space
            .slots()
            .iter()
            .map(|s| rng.random_range(0..s.len() as u32))
            .collect(),
    )
}

/// Slot weight: alpha for category slots, beta for attribute slots.
pub fn slot_weight(space: &FeatureSpace, j: usize, w: WeightConfig) -> f64 {
    if space.is_category_slot(j) {
        w.alpha
    } else {
        w.beta
    }
}

/// Plain weighted mismatch count, computed slot by slot.
pub fn brute_distance(
    space: &FeatureSpace,
    x: &FeatureVector,
    y: &FeatureVector,
    w: WeightConfig,
) -> f64 {
    let mut cat = 0.0;
    let mut attr = 0.0;
    for j in 0..space.len() {
        if x.values()[j] != y.values()[j] {
            if space.is_category_slot(j) {
                cat += 1.0;
            } else {
                attr += 1.0;
            }
        }
    }
    w.alpha * cat + w.beta * attr
}

/// Exhaustive optimum over all 2-partitions with per-cluster optimal modes.
pub fn best_two_partition_cost(
    space: &FeatureSpace,
    pts: &[FeatureVector],
    w: WeightConfig,
) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    // point 0 fixed in cluster 0 to skip mirrored partitions
    for mask in 0u32..(1 << (n - 1)) {
        let side = |i: usize| {
            if i == 0 {
                false
            } else {
                mask >> (i - 1) & 1 == 1
            }
        };
        let ones = (0..n).filter(|&i| side(i)).count();
        if ones == 0 || ones == n {
            continue;
        }
        let mut cost = 0.0;
        for cluster in [false, true] {
            let members: Vec<&FeatureVector> = (0..n)
                .filter(|&i| side(i) == cluster)
                .map(|i| &pts[i])
                .collect();
            for j in 0..space.len() {
                let mut counts = vec![0usize; space.slots()[j].len()];
                for m in &members {
                    counts[m.values()[j] as usize] += 1;
                }
                let top = *counts.iter().max().unwrap();
                cost += slot_weight(space, j, w) * (members.len() - top) as f64;
            }
        }
        best = best.min(cost);
    }
    best
}

/// Silhouette from an explicit pairwise matrix.
pub fn brute_silhouette(
    space: &FeatureSpace,
    pts: &[FeatureVector],
    labels: &[usize],
    w: WeightConfig,
) -> f64 {
    let n = pts.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = brute_distance(space, &pts[i], &pts[j], w);
        }
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n)
            .filter(|&j| j != i && labels[j] == labels[i])
            .collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| dist[i][j]).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c == labels[i] {
                continue;
            }
            let other: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            if other.is_empty() {
                continue;
            }
            b = b.min(other.iter().map(|&j| dist[i][j]).sum::<f64>() / other.len() as f64);
        }
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}
