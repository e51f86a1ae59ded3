//! The categorical semantic space.
//!
//! Every outfit becomes a fixed-length vector of value ids: one category slot
//! per body region (domain: that region's categories, then `NONE`) followed by
//! one attribute slot per attribute type (domain: its values, then `NA`).
//! The absent marker is always the last value id of a slot.

use std::fmt;

use crate::catalog::OutfitRecord;
use crate::concept::RegionAnnotation;
use crate::error::{Error, Result};
use crate::schema::{AttributeTypeId, CategoryId, Schema};

pub const NONE_CATEGORY: &str = "NONE";
pub const NA_ATTRIBUTE: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotClass {
    Category,
    Attribute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: String,
    pub class: SlotClass,
    /// Value names; the last entry is the absent marker.
    pub values: Vec<String>,
}

impl Slot {
    pub fn absent(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Slot layout derived deterministically from a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    schema: Schema,
    slots: Vec<Slot>,
    category_slots: usize,
    /// category id -> value id inside its region's slot.
    category_value: Vec<u32>,
}

/// An outfit in the semantic space: one value id per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureVector(Vec<u32>);

impl FeatureVector {
    pub fn new(values: Vec<u32>) -> Self {
        FeatureVector(values)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Raised by [`FeatureSpace::pool_image`] when two regions fill the same slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolWarning {
    pub slot: String,
    pub kept_region: usize,
    pub dropped_region: usize,
}

impl fmt::Display for PoolWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "slot {:?} claimed by regions #{} and #{}; keeping the first",
            self.slot, self.kept_region, self.dropped_region
        )
    }
}

/// Weights of category and attribute slots in the dissimilarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            alpha: 2.0,
            beta: 1.0,
        }
    }
}

impl WeightConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0) || !(alpha + beta).is_finite() {
            return Err(Error::InvalidArgument(format!(
                "weights must be non-negative and finite with a positive sum, got alpha={alpha} beta={beta}"
            )));
        }
        Ok(WeightConfig { alpha, beta })
    }

    pub fn scaled(self, c: f64) -> Self {
        WeightConfig {
            alpha: self.alpha * c,
            beta: self.beta * c,
        }
    }
}

pub fn build_space(schema: &Schema) -> FeatureSpace {
    FeatureSpace::new(schema)
}

impl FeatureSpace {
    pub fn new(schema: &Schema) -> Self {
        let mut slots = Vec::new();
        let mut category_value = vec![0u32; schema.categories().len()];
        for (r, region) in schema.body_regions().iter().enumerate() {
            let mut values = Vec::new();
            for cat in schema.categories().iter().filter(|c| c.region == r) {
                category_value[cat.id.0 as usize] = values.len() as u32;
                values.push(cat.name.clone());
            }
            values.push(NONE_CATEGORY.to_string());
            slots.push(Slot {
                name: region.clone(),
                class: SlotClass::Category,
                values,
            });
        }
        let category_slots = slots.len();
        for at in schema.attribute_types() {
            let mut values = at.values.clone();
            values.push(NA_ATTRIBUTE.to_string());
            slots.push(Slot {
                name: at.name.clone(),
                class: SlotClass::Attribute,
                values,
            });
        }
        FeatureSpace {
            schema: schema.clone(),
            slots,
            category_slots,
            category_value,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn category_slot_count(&self) -> usize {
        self.category_slots
    }

    pub fn attribute_slot_count(&self) -> usize {
        self.slots.len() - self.category_slots
    }

    pub fn is_category_slot(&self, slot: usize) -> bool {
        slot < self.category_slots
    }

    fn attribute_slot(&self, id: AttributeTypeId) -> usize {
        self.category_slots
            + self
                .schema
                .attribute_position(id)
                .expect("attribute type from this schema")
    }

    /// The all-absent vector.
    pub fn empty_vector(&self) -> FeatureVector {
        FeatureVector(self.slots.iter().map(Slot::absent).collect())
    }

    /// Largest value of [`FeatureSpace::profile_match`] and of plain-delta
    /// dissimilarity: `alpha * |category slots| + beta * |attribute slots|`.
    pub fn max_score(&self, w: WeightConfig) -> f64 {
        w.alpha * self.category_slots as f64 + w.beta * self.attribute_slot_count() as f64
    }

    /// Encodes a validated record. Regions are taken in body-region order.
    pub fn encode(&self, record: &OutfitRecord) -> FeatureVector {
        let mut regions: Vec<&RegionAnnotation> = record.regions.iter().collect();
        regions.sort_by_key(|a| a.region);
        let (v, warnings) = self.fill(regions.into_iter());
        for w in warnings {
            log::debug!("record {}: {w}", record.record_id);
        }
        v
    }

    /// Pools a free-standing region list into one vector. When two regions
    /// claim the same slot the first in list order wins and a warning is
    /// returned.
    pub fn pool_image(
        &self,
        regions: &[RegionAnnotation],
    ) -> Result<(FeatureVector, Vec<PoolWarning>)> {
        for (i, ann) in regions.iter().enumerate() {
            ann.check(&self.schema)
                .map_err(|m| Error::annotation(format!("regions[{i}]"), m))?;
        }
        Ok(self.fill(regions.iter()))
    }

    fn fill<'a>(
        &self,
        regions: impl Iterator<Item = &'a RegionAnnotation>,
    ) -> (FeatureVector, Vec<PoolWarning>) {
        let mut values = self.empty_vector().0;
        let mut owner: Vec<Option<usize>> = vec![None; values.len()];
        let mut warnings = Vec::new();
        let mut claim = |slot: usize, value: u32, i: usize, values: &mut Vec<u32>| match owner[slot]
        {
            Some(kept) => warnings.push(PoolWarning {
                slot: self.slots[slot].name.clone(),
                kept_region: kept,
                dropped_region: i,
            }),
            None => {
                owner[slot] = Some(i);
                values[slot] = value;
            }
        };
        for (i, ann) in regions.enumerate() {
            claim(
                ann.region,
                self.category_value[ann.category.0 as usize],
                i,
                &mut values,
            );
            for (&tid, &v) in &ann.attributes {
                claim(self.attribute_slot(tid), v, i, &mut values);
            }
        }
        (FeatureVector(values), warnings)
    }

    /// Recovers region annotations from a vector. Each attribute value is
    /// attached to the first present region whose category it applies to.
    pub fn decode(&self, v: &FeatureVector) -> Result<Vec<RegionAnnotation>> {
        self.check_vector(v)?;
        let mut out: Vec<RegionAnnotation> = Vec::new();
        for r in 0..self.category_slots {
            let value = v.0[r];
            if value == self.slots[r].absent() {
                continue;
            }
            let cat = self
                .schema
                .categories()
                .iter()
                .filter(|c| c.region == r)
                .nth(value as usize)
                .expect("value in domain");
            out.push(RegionAnnotation {
                region: r,
                category: cat.id,
                attributes: Default::default(),
                confidence: None,
            });
        }
        for (pos, at) in self.schema.attribute_types().iter().enumerate() {
            let slot = self.category_slots + pos;
            let value = v.0[slot];
            if value == self.slots[slot].absent() {
                continue;
            }
            if let Some(ann) = out.iter_mut().find(|a| at.applies_to.contains(&a.category)) {
                ann.attributes.insert(at.id, value);
            }
        }
        Ok(out)
    }

    pub fn category_of(&self, v: &FeatureVector, region: usize) -> Option<CategoryId> {
        let value = *v.0.get(region)?;
        if region >= self.category_slots || value == self.slots[region].absent() {
            return None;
        }
        self.schema
            .categories()
            .iter()
            .filter(|c| c.region == region)
            .nth(value as usize)
            .map(|c| c.id)
    }

    pub fn check_vector(&self, v: &FeatureVector) -> Result<()> {
        if v.0.len() != self.slots.len() {
            return Err(Error::SpaceMismatch(format!(
                "vector has {} slots, space has {}",
                v.0.len(),
                self.slots.len()
            )));
        }
        for (s, (&value, slot)) in v.0.iter().zip(&self.slots).enumerate() {
            if value as usize >= slot.len() {
                return Err(Error::SpaceMismatch(format!(
                    "value id {value} outside domain of slot {s} ({:?})",
                    slot.name
                )));
            }
        }
        Ok(())
    }

    fn check_profile(&self, p: &PreferenceProfile) -> Result<()> {
        if p.distributions.len() != self.slots.len()
            || p.distributions
                .iter()
                .zip(&self.slots)
                .any(|(d, s)| d.len() != s.len())
        {
            return Err(Error::SpaceMismatch(
                "profile layout does not match the feature space".to_string(),
            ));
        }
        Ok(())
    }

    /// Weighted dissimilarity between `x` and `y`.
    ///
    /// With `mode_freqs` absent each slot contributes plain `delta`. With
    /// `mode_freqs` present `y` is a cluster mode and each slot contributes
    /// `delta_freq(x_j, y_j, mode_freqs[j])`.
    pub fn dissimilarity(
        &self,
        x: &FeatureVector,
        y: &FeatureVector,
        w: WeightConfig,
        mode_freqs: Option<&[f64]>,
    ) -> Result<f64> {
        self.check_vector(x)?;
        self.check_vector(y)?;
        match mode_freqs {
            None => Ok(self.plain_distance(x, y, w)),
            Some(freqs) => {
                if freqs.len() != self.slots.len() {
                    return Err(Error::SpaceMismatch(format!(
                        "{} mode frequencies for {} slots",
                        freqs.len(),
                        self.slots.len()
                    )));
                }
                if let Some(f) = freqs.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                    return Err(Error::InvalidArgument(format!(
                        "mode frequency {f} outside [0, 1]"
                    )));
                }
                Ok(self.weighted_mode_distance(x, y, freqs, w))
            }
        }
    }

    /// Plain-delta dissimilarity without validation.
    pub(crate) fn plain_distance(
        &self,
        x: &FeatureVector,
        y: &FeatureVector,
        w: WeightConfig,
    ) -> f64 {
        let (cat, attr) = x.0.split_at(self.category_slots);
        let (ycat, yattr) = y.0.split_at(self.category_slots);
        let cat_mis = cat.iter().zip(ycat).filter(|(a, b)| a != b).count();
        let attr_mis = attr.iter().zip(yattr).filter(|(a, b)| a != b).count();
        w.alpha * cat_mis as f64 + w.beta * attr_mis as f64
    }

    /// Frequency-weighted point-to-mode dissimilarity without validation.
    pub(crate) fn weighted_mode_distance(
        &self,
        x: &FeatureVector,
        mode: &FeatureVector,
        freqs: &[f64],
        w: WeightConfig,
    ) -> f64 {
        let mut cat = 0.0;
        let mut attr = 0.0;
        for (j, ((&a, &b), &f)) in x.0.iter().zip(&mode.0).zip(freqs).enumerate() {
            let d = if a == b { 1.0 - f } else { 1.0 };
            if j < self.category_slots {
                cat += d;
            } else {
                attr += d;
            }
        }
        w.alpha * cat + w.beta * attr
    }

    /// Weighted expected agreement between a profile and a vector.
    pub fn profile_match(
        &self,
        p: &PreferenceProfile,
        x: &FeatureVector,
        w: WeightConfig,
    ) -> Result<f64> {
        self.check_profile(p)?;
        self.check_vector(x)?;
        Ok(self.profile_match_unchecked(p, x, w))
    }

    pub(crate) fn profile_match_unchecked(
        &self,
        p: &PreferenceProfile,
        x: &FeatureVector,
        w: WeightConfig,
    ) -> f64 {
        let mut cat = 0.0;
        let mut attr = 0.0;
        for (j, (dist, &v)) in p.distributions.iter().zip(&x.0).enumerate() {
            if j < self.category_slots {
                cat += dist[v as usize];
            } else {
                attr += dist[v as usize];
            }
        }
        w.alpha * cat + w.beta * attr
    }

    /// Slot-name -> value-name view of a vector, in slot order.
    pub fn vector_to_map(&self, v: &FeatureVector) -> serde_json::Map<String, serde_json::Value> {
        self.slots
            .iter()
            .zip(&v.0)
            .map(|(s, &value)| (s.name.clone(), s.values[value as usize].clone().into()))
            .collect()
    }

    /// Inverse of [`FeatureSpace::vector_to_map`]. Every slot must be present.
    pub fn vector_from_map(
        &self,
        map: &serde_json::Map<String, serde_json::Value>,
        path: &str,
    ) -> Result<FeatureVector> {
        if map.len() != self.slots.len() {
            return Err(Error::SpaceMismatch(format!(
                "{path}: {} entries for {} slots",
                map.len(),
                self.slots.len()
            )));
        }
        let mut values = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            let name = map
                .get(&slot.name)
                .and_then(|v| v.as_str())
                .ok_or_else(|| Error::model(format!("{path}.{}", slot.name), "missing slot"))?;
            let id = slot.values.iter().position(|v| v == name).ok_or_else(|| {
                Error::model(
                    format!("{path}.{}", slot.name),
                    format!("unknown value {name:?}"),
                )
            })?;
            values.push(id as u32);
        }
        Ok(FeatureVector(values))
    }
}

/// Simple matching indicator: 0 when equal, 1 otherwise.
pub fn delta(x: u32, y: u32) -> u32 {
    u32::from(x != y)
}

/// Frequency-weighted matching: a mismatch costs 1, a match with the mode
/// value costs `1 - freq` where `freq` is that value's share of the cluster.
pub fn delta_freq(x: u32, mode_value: u32, value_freq_in_cluster: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&value_freq_in_cluster) {
        return Err(Error::InvalidArgument(format!(
            "frequency {value_freq_in_cluster} outside [0, 1]"
        )));
    }
    Ok(if x == mode_value {
        1.0 - value_freq_in_cluster
    } else {
        1.0
    })
}

/// Per-slot value-frequency distributions pooled from a user's images.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceProfile {
    distributions: Vec<Vec<f64>>,
    image_count: usize,
}

pub fn build_profile(
    space: &FeatureSpace,
    image_vectors: &[FeatureVector],
) -> Result<PreferenceProfile> {
    PreferenceProfile::from_vectors(space, image_vectors)
}

impl PreferenceProfile {
    /// Empirical per-slot frequencies. Domain sizes are taken from `space`.
    pub fn from_vectors(space: &FeatureSpace, vectors: &[FeatureVector]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidArgument(
                "a preference profile needs at least one image".to_string(),
            ));
        }
        for v in vectors {
            space.check_vector(v)?;
        }
        let n = vectors.len() as f64;
        let mut counts: Vec<Vec<usize>> = space.slots().iter().map(|s| vec![0; s.len()]).collect();
        for v in vectors {
            for (c, &value) in counts.iter_mut().zip(&v.0) {
                c[value as usize] += 1;
            }
        }
        let distributions = counts
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 / n).collect())
            .collect();
        Ok(PreferenceProfile {
            distributions,
            image_count: vectors.len(),
        })
    }

    /// Point-mass profile on a single vector.
    pub fn point_mass(space: &FeatureSpace, v: &FeatureVector) -> Result<Self> {
        Self::from_vectors(space, std::slice::from_ref(v))
    }

    /// Builds a profile from explicit distributions; each must sum to 1.
    pub fn from_distributions(
        space: &FeatureSpace,
        distributions: Vec<Vec<f64>>,
        image_count: usize,
    ) -> Result<Self> {
        let p = PreferenceProfile {
            distributions,
            image_count,
        };
        space.check_profile(&p)?;
        if image_count < 1 {
            return Err(Error::InvalidArgument(
                "image_count must be at least 1".to_string(),
            ));
        }
        for (j, d) in p.distributions.iter().enumerate() {
            let sum: f64 = d.iter().sum();
            if d.iter().any(|x| x.is_nan() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "slot {j} distribution is not a probability vector (sum {sum})"
                )));
            }
        }
        Ok(p)
    }

    pub fn distributions(&self) -> &[Vec<f64>] {
        &self.distributions
    }

    pub fn distribution(&self, slot: usize) -> &[f64] {
        &self.distributions[slot]
    }

    pub fn image_count(&self) -> usize {
        self.image_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::load_schema;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn minimal_schema() -> Schema {
        load_schema(
            r#"{
                "occasions": ["Office"],
                "body_regions": ["upper_body"],
                "categories": [{"id": 0, "name": "shirt", "region": "upper_body"}],
                "attribute_types": [
                    {"id": 0, "name": "sleeve", "values": ["short", "long"], "applies_to": ["shirt"]}
                ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_layout() {
        let space = build_space(&minimal_schema());
        assert_eq!(space.len(), 2);
        assert_eq!(space.slots()[0].len(), 2);
        assert_eq!(space.slots()[1].len(), 3);
        assert_eq!(space, build_space(&minimal_schema()));
    }

    #[test]
    fn default_layout() {
        let schema = Schema::default_schema();
        let space = build_space(&schema);
        assert_eq!(
            space.len(),
            schema.body_regions().len() + schema.attribute_types().len()
        );
        assert!(space.slots().iter().all(|s| s.len() >= 2));
    }

    fn tshirt_short(schema: &Schema) -> RegionAnnotation {
        let cat = schema.category_by_name("t-shirt").unwrap();
        let sleeve = schema.attribute_type_by_name("sleeve_length").unwrap();
        RegionAnnotation {
            region: cat.region,
            category: cat.id,
            attributes: BTreeMap::from([(sleeve.id, sleeve.value_id("short").unwrap())]),
            confidence: None,
        }
    }

    #[test]
    fn encode_single_region() {
        let schema = Schema::default_schema();
        let space = build_space(&schema);
        let rec = OutfitRecord {
            record_id: "x".into(),
            gender: crate::Gender::Male,
            age_group: None,
            occasion: "Travel".into(),
            regions: vec![tshirt_short(&schema)],
            image_ref: None,
        };
        let v = space.encode(&rec);
        let m = space.vector_to_map(&v);
        assert_eq!(m["upper_body"], "t-shirt");
        assert_eq!(m["lower_body"], NONE_CATEGORY);
        assert_eq!(m["sleeve_length"], "short");
        assert_eq!(m["neckline"], NA_ATTRIBUTE);
        let (pooled, warnings) = space.pool_image(&rec.regions).unwrap();
        assert_eq!(pooled, v);
        assert!(warnings.is_empty());
        assert_eq!(space.vector_from_map(&m, "m").unwrap(), v);

        let empty = OutfitRecord {
            regions: vec![],
            ..rec
        };
        assert_eq!(space.encode(&empty), space.empty_vector());
        assert_eq!(space.pool_image(&[]).unwrap().0, space.empty_vector());
    }

    #[test]
    fn pool_conflict_keeps_first() {
        let schema = Schema::default_schema();
        let space = build_space(&schema);
        let first = tshirt_short(&schema);
        let shirt = schema.category_by_name("shirt").unwrap();
        let second = RegionAnnotation {
            region: shirt.region,
            category: shirt.id,
            attributes: BTreeMap::new(),
            confidence: None,
        };
        let (v, warnings) = space.pool_image(&[first, second]).unwrap();
        assert_eq!(space.vector_to_map(&v)["upper_body"], "t-shirt");
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].slot, "upper_body");
    }

    #[test]
    fn pool_rejects_out_of_domain() {
        let schema = Schema::default_schema();
        let space = build_space(&schema);
        let mut bad = tshirt_short(&schema);
        bad.region = 1;
        assert!(space.pool_image(&[bad]).is_err());
    }

    #[test]
    fn delta_cases() {
        assert_eq!(delta(1, 1), 0);
        assert_eq!(delta(1, 2), 1);
        let na = 3;
        assert_eq!(delta(na, na), 0);
        assert_eq!(delta_freq(1, 2, 0.3).unwrap(), 1.0);
        assert_eq!(delta_freq(1, 1, 1.0).unwrap(), 0.0);
        assert!((delta_freq(1, 1, 0.6).unwrap() - 0.4).abs() < 1e-15);
        assert!(delta_freq(1, 1, 1.2).is_err());
        assert!(delta_freq(1, 1, -0.1).is_err());
    }

    #[test]
    fn weighted_dissimilarity_example() {
        let space = build_space(&Schema::default_schema());
        let x = space.empty_vector();
        let mut y = x.clone();
        y.0[0] = 0;
        let a = space.category_slot_count();
        y.0[a] = 0;
        y.0[a + 1] = 0;
        let w = WeightConfig::default();
        assert_eq!(space.dissimilarity(&x, &y, w, None).unwrap(), 4.0);
        assert_eq!(space.dissimilarity(&x, &x, w, None).unwrap(), 0.0);
        let short = FeatureVector(vec![0; 3]);
        assert!(matches!(
            space.dissimilarity(&x, &short, w, None),
            Err(Error::SpaceMismatch(_))
        ));
        let freqs = vec![1.0; space.len()];
        assert_eq!(space.dissimilarity(&x, &x, w, Some(&freqs)).unwrap(), 0.0);
        assert!(space.dissimilarity(&x, &x, w, Some(&freqs[1..])).is_err());
    }

    #[test]
    fn profile_examples() {
        let space = build_space(&Schema::default_schema());
        let w = WeightConfig::default();
        let x = space.empty_vector();
        let p = PreferenceProfile::point_mass(&space, &x).unwrap();
        assert_eq!(space.profile_match(&p, &x, w).unwrap(), space.max_score(w));
        let mut other = x.clone();
        for (v, s) in other.0.iter_mut().zip(space.slots()) {
            *v = s.absent() - 1;
        }
        assert_eq!(space.profile_match(&p, &other, w).unwrap(), 0.0);

        let mut y = x.clone();
        y.0[3] = 0;
        let p2 = PreferenceProfile::from_vectors(&space, &[x.clone(), y]).unwrap();
        assert_eq!(p2.image_count(), 2);
        assert_eq!(p2.distribution(0)[x.0[0] as usize], 1.0);
        assert_eq!(p2.distribution(3)[0], 0.5);
        assert_eq!(p2.distribution(3)[x.0[3] as usize], 0.5);
        assert!(PreferenceProfile::from_vectors(&space, &[]).is_err());
        assert!(build_profile(&space, &[]).is_err());
    }

    #[test]
    fn profile_match_formula() {
        let schema = load_schema(
            r#"{
                "occasions": ["Office"],
                "body_regions": ["upper_body"],
                "categories": [{"id": 0, "name": "shirt", "region": "upper_body"}],
                "attribute_types": [
                    {"id": 0, "name": "sleeve", "values": ["short", "long"], "applies_to": ["shirt"]},
                    {"id": 1, "name": "collar", "values": ["yes", "no"], "applies_to": ["shirt"]}
                ]
            }"#,
        )
        .unwrap();
        let space = build_space(&schema);
        let p = PreferenceProfile::from_distributions(
            &space,
            vec![vec![0.5, 0.5], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            2,
        )
        .unwrap();
        let x = FeatureVector(vec![0, 0, 0]);
        let got = space
            .profile_match(&p, &x, WeightConfig::default())
            .unwrap();
        assert!((got - 2.0).abs() < 1e-12);
        assert!(PreferenceProfile::from_distributions(&space, vec![vec![0.5, 0.4]; 3], 1).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(WeightConfig::new(0.0, 0.0).is_err());
        assert!(WeightConfig::new(-1.0, 1.0).is_err());
        assert!(WeightConfig::new(0.0, 1.0).is_ok());
    }

    fn arb_vec(len: usize, dom: u32) -> impl Strategy<Value = FeatureVector> {
        proptest::collection::vec(0..dom, len).prop_map(FeatureVector)
    }

    fn small_space() -> FeatureSpace {
        build_space(&Schema::default_schema())
    }

    proptest! {
        #[test]
        fn plain_distance_is_a_metric(a in arb_vec(17, 3), b in arb_vec(17, 3), c in arb_vec(17, 3),
                                      alpha in 0.1f64..4.0, beta in 0.1f64..4.0) {
            let space = small_space();
            let w = WeightConfig::new(alpha, beta).unwrap();
            let ab = space.plain_distance(&a, &b, w);
            let ba = space.plain_distance(&b, &a, w);
            let bc = space.plain_distance(&b, &c, w);
            let ac = space.plain_distance(&a, &c, w);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0.0, a == b);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn scaling_weights_scales_scores(a in arb_vec(17, 3), b in arb_vec(17, 3), c in 0.1f64..10.0) {
            let space = small_space();
            let w = WeightConfig::default();
            let d = space.plain_distance(&a, &b, w);
            prop_assert!((space.plain_distance(&a, &b, w.scaled(c)) - c * d).abs() < 1e-9);
            let p = PreferenceProfile::from_vectors(&space, &[a.clone(), b.clone()]).unwrap();
            let m = space.profile_match(&p, &a, w).unwrap();
            prop_assert!((space.profile_match(&p, &a, w.scaled(c)).unwrap() - c * m).abs() < 1e-9);
        }

        #[test]
        fn delta_freq_is_bounded(x in 0u32..4, y in 0u32..4, f in 0.0f64..=1.0) {
            let d = delta_freq(x, y, f).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d == 0.0, x == y && f == 1.0);
        }

        #[test]
        fn profile_is_permutation_invariant(vs in proptest::collection::vec(arb_vec(17, 3), 1..8)) {
            let space = small_space();
            let p = PreferenceProfile::from_vectors(&space, &vs).unwrap();
            let mut rev = vs.clone();
            rev.reverse();
            prop_assert_eq!(p.clone(), PreferenceProfile::from_vectors(&space, &rev).unwrap());
            for d in p.distributions() {
                prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
