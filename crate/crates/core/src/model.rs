//! Per-slice cluster models, their document form, and an in-memory store
//! that builds models on demand.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Gender, OutfitRecord};
use crate::clustering::{mode_frequencies, select_k, ClusterModel, DeltaMode, KModesConfig};
use crate::error::{Error, Result};
use crate::space::{FeatureSpace, FeatureVector, WeightConfig};

/// A cluster model bound to the records of one (gender, occasion) slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceModel {
    pub gender: Gender,
    pub occasion: String,
    pub weights: WeightConfig,
    pub delta_mode: DeltaMode,
    pub seed: u64,
    /// Slice records in catalog order; aligned with `model.assignments`.
    pub record_ids: Vec<String>,
    pub model: ClusterModel,
}

/// Serialized form of a [`SliceModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub gender: Gender,
    pub occasion: String,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta_mode: DeltaMode,
    pub seed: u64,
    pub modes: Vec<serde_json::Map<String, serde_json::Value>>,
    pub assignments: serde_json::Map<String, serde_json::Value>,
    pub cost: f64,
    pub silhouette: Option<f64>,
}

/// Encodes the records of a slice.
pub fn slice_vectors(space: &FeatureSpace, records: &[&OutfitRecord]) -> Vec<FeatureVector> {
    records.iter().map(|r| space.encode(r)).collect()
}

impl SliceModel {
    /// Clusters one slice, choosing k by silhouette.
    pub fn build(
        catalog: &Catalog,
        space: &FeatureSpace,
        gender: Gender,
        occasion: &str,
        config: &KModesConfig,
    ) -> Result<SliceModel> {
        let records = catalog.slice(gender, occasion)?;
        if records.is_empty() {
            return Err(Error::EmptySlice {
                gender: gender.to_string(),
                occasion: occasion.to_string(),
            });
        }
        let vectors = slice_vectors(space, &records);
        let model = select_k(space, &vectors, config)?;
        log::info!(
            "clustered {gender}/{occasion}: n={} k={} cost={} silhouette={:?}",
            vectors.len(),
            model.k,
            model.cost,
            model.silhouette
        );
        Ok(SliceModel {
            gender,
            occasion: occasion.to_string(),
            weights: config.weights,
            delta_mode: config.delta_mode,
            seed: config.seed,
            record_ids: records.iter().map(|r| r.record_id.clone()).collect(),
            model,
        })
    }

    pub fn to_document(&self, space: &FeatureSpace) -> ModelDocument {
        ModelDocument {
            gender: self.gender,
            occasion: self.occasion.clone(),
            k: self.model.k,
            alpha: self.weights.alpha,
            beta: self.weights.beta,
            delta_mode: self.delta_mode,
            seed: self.seed,
            modes: self
                .model
                .modes
                .iter()
                .map(|m| space.vector_to_map(m))
                .collect(),
            assignments: self
                .record_ids
                .iter()
                .zip(&self.model.assignments)
                .map(|(id, &c)| (id.clone(), c.into()))
                .collect(),
            cost: self.model.cost,
            silhouette: self.model.silhouette,
        }
    }

    /// Rebuilds a slice model from its document, checking it against the
    /// catalog. Mode frequencies are recomputed from the assignments.
    pub fn from_document(
        doc: &ModelDocument,
        catalog: &Catalog,
        space: &FeatureSpace,
    ) -> Result<SliceModel> {
        let weights = WeightConfig::new(doc.alpha, doc.beta)?;
        if doc.k < 1 || doc.modes.len() != doc.k {
            return Err(Error::model(
                "modes",
                format!("{} modes for k = {}", doc.modes.len(), doc.k),
            ));
        }
        let modes = doc
            .modes
            .iter()
            .enumerate()
            .map(|(c, m)| space.vector_from_map(m, &format!("modes[{c}]")))
            .collect::<Result<Vec<_>>>()?;
        let records = catalog.slice(doc.gender, &doc.occasion)?;
        if records.len() != doc.assignments.len() {
            return Err(Error::model(
                "assignments",
                format!(
                    "model covers {} records but the catalog slice has {}",
                    doc.assignments.len(),
                    records.len()
                ),
            ));
        }
        let mut assignments = Vec::with_capacity(records.len());
        for r in &records {
            let path = format!("assignments.{}", r.record_id);
            let c = doc
                .assignments
                .get(&r.record_id)
                .ok_or_else(|| Error::model(&path, "record missing from model"))?
                .as_u64()
                .ok_or_else(|| Error::model(&path, "cluster index must be an integer"))?
                as usize;
            if c >= doc.k {
                return Err(Error::model(path, format!("cluster {c} out of range")));
            }
            assignments.push(c);
        }
        let mut sizes = vec![0usize; doc.k];
        for &c in &assignments {
            sizes[c] += 1;
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::model(
                format!("modes[{c}]"),
                "cluster has no members",
            ));
        }
        let vectors = slice_vectors(space, &records);
        let mode_freqs = mode_frequencies(&vectors, &assignments, &modes);
        Ok(SliceModel {
            gender: doc.gender,
            occasion: doc.occasion.clone(),
            weights,
            delta_mode: doc.delta_mode,
            seed: doc.seed,
            record_ids: records.iter().map(|r| r.record_id.clone()).collect(),
            model: ClusterModel {
                k: doc.k,
                modes,
                assignments,
                mode_freqs,
                cost: doc.cost,
                silhouette: doc.silhouette,
            },
        })
    }
}

type SliceKey = (Gender, String);
/// Built at most once; `None` until the first build finishes.
type SliceCell = Arc<Mutex<Option<Arc<SliceModel>>>>;

/// Cluster models keyed by slice. Models missing from the store are built
/// with the store's configuration on first use; concurrent requests for the
/// same slice build it once.
#[derive(Debug, Default)]
pub struct ModelStore {
    config: KModesConfig,
    models: Mutex<BTreeMap<SliceKey, SliceCell>>,
}

impl ModelStore {
    pub fn new(config: KModesConfig) -> Self {
        ModelStore {
            config,
            models: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn config(&self) -> &KModesConfig {
        &self.config
    }

    pub fn insert(&self, model: SliceModel) {
        let key = (model.gender, model.occasion.clone());
        self.models
            .lock()
            .expect("model store lock")
            .insert(key, Arc::new(Mutex::new(Some(Arc::new(model)))));
    }

    pub fn get(&self, gender: Gender, occasion: &str) -> Option<Arc<SliceModel>> {
        let cell = self
            .models
            .lock()
            .expect("model store lock")
            .get(&(gender, occasion.to_string()))
            .cloned()?;
        let guard = cell.lock().expect("slice lock");
        guard.clone()
    }

    pub fn get_or_build(
        &self,
        catalog: &Catalog,
        space: &FeatureSpace,
        gender: Gender,
        occasion: &str,
    ) -> Result<Arc<SliceModel>> {
        let cell = self
            .models
            .lock()
            .expect("model store lock")
            .entry((gender, occasion.to_string()))
            .or_default()
            .clone();
        let mut slot = cell.lock().expect("slice lock");
        if let Some(m) = slot.as_ref() {
            return Ok(m.clone());
        }
        let built = Arc::new(SliceModel::build(
            catalog,
            space,
            gender,
            occasion,
            &self.config,
        )?);
        *slot = Some(built.clone());
        Ok(built)
    }
}
