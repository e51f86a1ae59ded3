//! Turning user images into labelled clothing regions.
//!
//! Region detection and classification are behind the [`ConceptExtractor`]
//! trait. [`FixtureExtractor`] serves annotations from a document keyed by
//! image id. [`cumulative_loss`] is the weighted multi-task objective used by
//! training harnesses that produce real extractors.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::schema::{AttributeTypeId, CategoryId, RegionDoc, Schema};
use crate::space::{FeatureSpace, PoolWarning, PreferenceProfile};

/// One labelled clothing region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionAnnotation {
    /// Index into the schema's body regions.
    pub region: usize,
    pub category: CategoryId,
    /// attribute type -> value id within that type's domain.
    pub attributes: BTreeMap<AttributeTypeId, u32>,
    pub confidence: Option<f64>,
}

impl RegionAnnotation {
    /// Checks the annotation against a schema.
    pub fn check(&self, schema: &Schema) -> std::result::Result<(), String> {
        let cat = schema
            .category(self.category)
            .ok_or_else(|| format!("unknown category id {}", self.category))?;
        if cat.region != self.region {
            return Err(format!(
                "category {:?} does not belong to region index {}",
                cat.name, self.region
            ));
        }
        for (&tid, &v) in &self.attributes {
            let at = schema
                .attribute_type(tid)
                .ok_or_else(|| format!("unknown attribute type id {tid}"))?;
            if !at.applies_to.contains(&self.category) {
                return Err(format!(
                    "attribute type {:?} is not applicable to category {:?}",
                    at.name, cat.name
                ));
            }
            if v as usize >= at.values.len() {
                return Err(format!("value id {v} out of domain for {:?}", at.name));
            }
        }
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(format!("confidence {c} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Weights of the category and attribute terms in the multi-task loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda1: 2.0,
            lambda2: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1 + lambda2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "loss weights must be non-negative with a positive sum, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(LossWeights { lambda1, lambda2 })
    }
}

/// `lambda1 * l_category + lambda2 * sum(l_attributes)`.
///
/// The attribute losses are summed in list order before weighting.
pub fn cumulative_loss(l_category: f64, l_attributes: &[f64], w: LossWeights) -> f64 {
    let attr_sum: f64 = l_attributes.iter().sum();
    w.lambda1 * l_category + w.lambda2 * attr_sum
}

/// Source of labelled regions for user images.
pub trait ConceptExtractor {
    fn extract(&self, image_id: &str) -> Result<Vec<RegionAnnotation>>;
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SidecarDoc {
    annotations: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreferenceDoc {
    images: Vec<PreferenceImage>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreferenceImage {
    image_id: String,
    regions: Vec<RegionDoc>,
}

/// Extractor backed by stored annotations.
///
/// Annotations are validated against the schema on every `extract` call.
#[derive(Debug, Clone)]
pub struct FixtureExtractor {
    schema: Schema,
    images: Vec<(String, Vec<RegionDoc>)>,
    min_confidence: Option<f64>,
}

impl FixtureExtractor {
    /// Loads a side-car document: `{"annotations": {image_id: [regions...]}}`.
    pub fn from_sidecar(document: &str, schema: &Schema) -> Result<Self> {
        let doc: SidecarDoc = serde_json::from_str(document)?;
        let mut images = Vec::with_capacity(doc.annotations.len());
        for (id, value) in doc.annotations {
            let regions: Vec<RegionDoc> = serde_json::from_value(value)
                .map_err(|e| Error::annotation(format!("annotations.{id}"), e.to_string()))?;
            images.push((id, regions));
        }
        Ok(Self::new(schema, images))
    }

    /// Loads a preference document: `{"images": [{image_id, regions}]}`.
    pub fn from_preferences(document: &str, schema: &Schema) -> Result<Self> {
        let doc: PreferenceDoc = serde_json::from_str(document)?;
        let mut images: Vec<(String, Vec<RegionDoc>)> = Vec::with_capacity(doc.images.len());
        for (i, img) in doc.images.into_iter().enumerate() {
            if images.iter().any(|(id, _)| *id == img.image_id) {
                return Err(Error::annotation(
                    format!("images[{i}].image_id"),
                    format!("duplicate image_id {:?}", img.image_id),
                ));
            }
            images.push((img.image_id, img.regions));
        }
        Ok(Self::new(schema, images))
    }

    /// Accepts either document shape, chosen by its top-level key.
    pub fn from_document(document: &str, schema: &Schema) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(document)?;
        if value.get("annotations").is_some() {
            Self::from_sidecar(document, schema)
        } else {
            Self::from_preferences(document, schema)
        }
    }

    fn new(schema: &Schema, images: Vec<(String, Vec<RegionDoc>)>) -> Self {
        FixtureExtractor {
            schema: schema.clone(),
            images,
            min_confidence: None,
        }
    }

    /// Drops regions whose confidence is below `threshold`. Regions without a
    /// confidence are always kept.
    pub fn with_min_confidence(mut self, threshold: f64) -> Self {
        self.min_confidence = Some(threshold);
        self
    }

    /// Image ids in stored order.
    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.images.iter().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

impl ConceptExtractor for FixtureExtractor {
    fn extract(&self, image_id: &str) -> Result<Vec<RegionAnnotation>> {
        let (_, regions) = self
            .images
            .iter()
            .find(|(id, _)| id == image_id)
            .ok_or_else(|| Error::ImageNotFound(image_id.to_string()))?;
        let mut out = Vec::with_capacity(regions.len());
        for (j, doc) in regions.iter().enumerate() {
            let ann = self
                .schema
                .resolve_region(doc, &format!("{image_id}.regions[{j}]"))?;
            match (self.min_confidence, ann.confidence) {
                (Some(t), Some(c)) if c < t => continue,
                _ => out.push(ann),
            }
        }
        Ok(out)
    }
}

/// Extracts every listed image, pools each into a vector and builds the
/// preference profile.
pub fn profile_from_images<'a, E, I>(
    extractor: &E,
    image_ids: I,
    space: &FeatureSpace,
) -> Result<(PreferenceProfile, Vec<PoolWarning>)>
where
    E: ConceptExtractor + ?Sized,
    I: IntoIterator<Item = &'a str>,
{
    let mut vectors = Vec::new();
    let mut warnings = Vec::new();
    for id in image_ids {
        let regions = extractor.extract(id)?;
        let (v, w) = space.pool_image(&regions)?;
        for warning in &w {
            log::warn!("image {id}: {warning}");
        }
        warnings.extend(w);
        vectors.push(v);
    }
    Ok((PreferenceProfile::from_vectors(space, &vectors)?, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loss_examples() {
        let w = LossWeights::default();
        assert!((cumulative_loss(0.5, &[0.7, 0.5], w) - 2.2).abs() < 1e-12);
        assert_eq!(
            cumulative_loss(0.3, &[9.0, 4.0], LossWeights::new(1.0, 0.0).unwrap()),
            0.3
        );
        assert_eq!(cumulative_loss(0.0, &[0.0, 0.0, 0.0], w), 0.0);
        assert_eq!(cumulative_loss(0.4, &[], w), 0.8);
    }

    #[test]
    fn loss_weights_validation() {
        assert!(LossWeights::new(0.0, 0.0).is_err());
        assert!(LossWeights::new(-1.0, 2.0).is_err());
        assert!(LossWeights::new(f64::NAN, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn loss_is_linear(lc in 0.0f64..10.0, la in proptest::collection::vec(0.0f64..10.0, 0..6),
                          l1 in 0.0f64..5.0, l2 in 0.01f64..5.0, c in 0.1f64..4.0) {
            let w = LossWeights::new(l1, l2).unwrap();
            let base = cumulative_loss(lc, &la, w);
            let scaled: Vec<f64> = la.iter().map(|x| x * c).collect();
            let lhs = cumulative_loss(lc * c, &scaled, w);
            prop_assert!((lhs - c * base).abs() <= 1e-9 * (1.0 + base.abs() * c));
            let mut rev = la.clone();
            rev.reverse();
            prop_assert!((cumulative_loss(lc, &rev, w) - base).abs() <= 1e-9 * (1.0 + base));
        }
    }

    fn sidecar() -> &'static str {
        r#"{"annotations": {
            "img_7": [
                {"region": "upper_body", "category": "blouse", "attributes": {"sleeve_length": "sleeveless"}},
                {"region": "lower_body", "category": "skirt", "confidence": 0.2}
            ],
            "img_8": [{"region": "upper_body", "category": "cape"}]
        }}"#
    }

    #[test]
    fn fixture_passthrough_and_errors() {
        let schema = Schema::default_schema();
        let ex = FixtureExtractor::from_sidecar(sidecar(), &schema).unwrap();
        assert_eq!(ex.image_ids().collect::<Vec<_>>(), ["img_7", "img_8"]);
        let regions = ex.extract("img_7").unwrap();
        assert_eq!(regions.len(), 2);
        assert_eq!(schema.category(regions[0].category).unwrap().name, "blouse");
        assert_eq!(schema.category(regions[1].category).unwrap().name, "skirt");
        let err = ex.extract("img_x").unwrap_err();
        assert!(err.to_string().contains("image not found"), "{err}");
        assert!(matches!(ex.extract("img_8"), Err(Error::Annotation { .. })));
    }

    #[test]
    fn confidence_threshold_drops_regions() {
        let schema = Schema::default_schema();
        let ex = FixtureExtractor::from_sidecar(sidecar(), &schema)
            .unwrap()
            .with_min_confidence(0.5);
        assert_eq!(ex.extract("img_7").unwrap().len(), 1);
    }

    #[test]
    fn document_shape_detection() {
        let schema = Schema::default_schema();
        let prefs = r#"{"images": [{"image_id": "a", "regions": []}]}"#;
        let ex = FixtureExtractor::from_document(prefs, &schema).unwrap();
        assert_eq!(ex.len(), 1);
        assert!(ex.extract("a").unwrap().is_empty());
        let dup =
            r#"{"images": [{"image_id": "a", "regions": []}, {"image_id": "a", "regions": []}]}"#;
        assert!(FixtureExtractor::from_preferences(dup, &schema).is_err());
    }
}
