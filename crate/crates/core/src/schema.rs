//! The fashion taxonomy: occasions, body regions, garment categories and
//! attribute types with their value domains.
//!
//! The taxonomy is data-driven. [`Schema::default_schema`] ships a taxonomy
//! with 7 occasions, 5 body regions, 20 categories and 12 attribute types
//! whose value domains hold 39 values in total.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::RegionAnnotation;
use crate::error::{Error, Result};

const DEFAULT_SCHEMA: &str = include_str!("../data/default_schema.json");

/// Dense category identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CategoryId(pub u32);

/// Dense attribute-type identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeTypeId(pub u32);

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for AttributeTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: CategoryId,
    pub name: String,
    /// Index into [`Schema::body_regions`].
    pub region: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeType {
    pub id: AttributeTypeId,
    pub name: String,
    pub values: Vec<String>,
    pub applies_to: BTreeSet<CategoryId>,
}

impl AttributeType {
    pub fn value_id(&self, name: &str) -> Option<u32> {
        self.values.iter().position(|v| v == name).map(|i| i as u32)
    }
}

/// A category given either by dense id or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CategoryRef {
    Id(u32),
    Name(String),
}

impl fmt::Display for CategoryRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CategoryRef::Id(id) => write!(f, "{id}"),
            CategoryRef::Name(name) => write!(f, "{name:?}"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    occasions: Vec<String>,
    body_regions: Vec<String>,
    categories: Vec<CategoryDoc>,
    attribute_types: Vec<AttributeTypeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryDoc {
    id: u32,
    name: String,
    region: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeTypeDoc {
    id: u32,
    name: String,
    values: Vec<String>,
    applies_to: Vec<CategoryRef>,
}

/// One region entry in the shared region grammar used by catalog records,
/// preference documents and side-car annotation documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDoc {
    pub region: String,
    pub category: CategoryRef,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// Validated taxonomy. Immutable after load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    occasions: Vec<String>,
    body_regions: Vec<String>,
    /// Indexed by category id.
    categories: Vec<Category>,
    /// Document order.
    attribute_types: Vec<AttributeType>,
    /// attribute type id -> position in `attribute_types`.
    attribute_index: Vec<usize>,
}

/// Parses and validates a schema document.
pub fn load_schema(document: &str) -> Result<Schema> {
    let doc: SchemaDoc = serde_json::from_str(document)?;
    Schema::from_doc(doc)
}

impl Schema {
    /// The taxonomy bundled with the library.
    pub fn default_schema() -> Schema {
        load_schema(DEFAULT_SCHEMA).expect("bundled schema is valid")
    }

    /// Raw text of the bundled schema document.
    pub fn default_document() -> &'static str {
        DEFAULT_SCHEMA
    }

    fn from_doc(doc: SchemaDoc) -> Result<Schema> {
        let mut seen = HashSet::new();
        for (i, occ) in doc.occasions.iter().enumerate() {
            let path = format!("occasions[{i}]");
            if occ.trim().is_empty() {
                return Err(Error::schema(path, "empty occasion name"));
            }
            if !seen.insert(occ.as_str()) {
                return Err(Error::schema(path, format!("duplicate occasion {occ:?}")));
            }
        }
        if doc.body_regions.is_empty() {
            return Err(Error::schema("body_regions", "no body regions"));
        }
        let mut region_index = HashMap::new();
        for (i, region) in doc.body_regions.iter().enumerate() {
            let path = format!("body_regions[{i}]");
            if region.trim().is_empty() {
                return Err(Error::schema(path, "empty region name"));
            }
            if region_index.insert(region.as_str(), i).is_some() {
                return Err(Error::schema(path, format!("duplicate region {region:?}")));
            }
        }

        let n_cat = doc.categories.len();
        let mut categories: Vec<Option<Category>> = vec![None; n_cat];
        let mut cat_names = HashSet::new();
        for (i, cat) in doc.categories.iter().enumerate() {
            let path = format!("categories[{i}]");
            let id = cat.id as usize;
            if id >= n_cat {
                return Err(Error::schema(
                    format!("{path}.id"),
                    format!("category id {id} is not dense (expected ids 0..{n_cat})"),
                ));
            }
            if categories[id].is_some() {
                return Err(Error::schema(
                    format!("{path}.id"),
                    format!("duplicate category id {id}"),
                ));
            }
            if cat.name.trim().is_empty() {
                return Err(Error::schema(format!("{path}.name"), "empty category name"));
            }
            if !cat_names.insert(cat.name.as_str()) {
                return Err(Error::schema(
                    format!("{path}.name"),
                    format!("duplicate category name {:?}", cat.name),
                ));
            }
            let region = *region_index.get(cat.region.as_str()).ok_or_else(|| {
                Error::schema(
                    format!("{path}.region"),
                    format!("unknown region {:?}", cat.region),
                )
            })?;
            categories[id] = Some(Category {
                id: CategoryId(cat.id),
                name: cat.name.clone(),
                region,
            });
        }
        let categories: Vec<Category> = categories.into_iter().flatten().collect();

        let n_attr = doc.attribute_types.len();
        let mut attribute_index = vec![usize::MAX; n_attr];
        let mut attr_names = HashSet::new();
        let mut attribute_types = Vec::with_capacity(n_attr);
        for (i, at) in doc.attribute_types.iter().enumerate() {
            let path = format!("attribute_types[{i}]");
            let id = at.id as usize;
            if id >= n_attr {
                return Err(Error::schema(
                    format!("{path}.id"),
                    format!("attribute type id {id} is not dense (expected ids 0..{n_attr})"),
                ));
            }
            if attribute_index[id] != usize::MAX {
                return Err(Error::schema(
                    format!("{path}.id"),
                    format!("duplicate attribute type id {id}"),
                ));
            }
            if at.name.trim().is_empty() {
                return Err(Error::schema(
                    format!("{path}.name"),
                    "empty attribute type name",
                ));
            }
            if !attr_names.insert(at.name.as_str()) {
                return Err(Error::schema(
                    format!("{path}.name"),
                    format!("duplicate attribute type name {:?}", at.name),
                ));
            }
            if at.values.is_empty() {
                return Err(Error::schema(
                    format!("{path}.values"),
                    "empty value domain",
                ));
            }
            if at.values.len() < 2 {
                return Err(Error::schema(
                    format!("{path}.values"),
                    "attribute type needs at least 2 values",
                ));
            }
            let mut vals = HashSet::new();
            for (j, v) in at.values.iter().enumerate() {
                if v.trim().is_empty() {
                    return Err(Error::schema(
                        format!("{path}.values[{j}]"),
                        "empty value name",
                    ));
                }
                if !vals.insert(v.as_str()) {
                    return Err(Error::schema(
                        format!("{path}.values[{j}]"),
                        format!("duplicate value {v:?}"),
                    ));
                }
            }
            let mut applies_to = BTreeSet::new();
            for (j, cref) in at.applies_to.iter().enumerate() {
                let cid = resolve_category(&categories, cref).ok_or_else(|| {
                    Error::schema(
                        format!("{path}.applies_to[{j}]"),
                        format!("unknown category {cref}"),
                    )
                })?;
                applies_to.insert(cid);
            }
            attribute_index[id] = i;
            attribute_types.push(AttributeType {
                id: AttributeTypeId(at.id),
                name: at.name.clone(),
                values: at.values.clone(),
                applies_to,
            });
        }

        Ok(Schema {
            occasions: doc.occasions,
            body_regions: doc.body_regions,
            categories,
            attribute_types,
            attribute_index,
        })
    }

    pub fn occasions(&self) -> &[String] {
        &self.occasions
    }

    pub fn has_occasion(&self, name: &str) -> bool {
        self.occasions.iter().any(|o| o == name)
    }

    pub fn body_regions(&self) -> &[String] {
        &self.body_regions
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.body_regions.iter().position(|r| r == name)
    }

    /// Categories ordered by id.
    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category(&self, id: CategoryId) -> Option<&Category> {
        self.categories.get(id.0 as usize)
    }

    pub fn category_by_name(&self, name: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Attribute types in document order.
    pub fn attribute_types(&self) -> &[AttributeType] {
        &self.attribute_types
    }

    pub fn attribute_type(&self, id: AttributeTypeId) -> Option<&AttributeType> {
        self.attribute_index
            .get(id.0 as usize)
            .map(|&i| &self.attribute_types[i])
    }

    /// Position of an attribute type in document order.
    pub fn attribute_position(&self, id: AttributeTypeId) -> Option<usize> {
        self.attribute_index.get(id.0 as usize).copied()
    }

    pub fn attribute_type_by_name(&self, name: &str) -> Option<&AttributeType> {
        self.attribute_types.iter().find(|a| a.name == name)
    }

    /// Total number of attribute values across all attribute types.
    pub fn attribute_value_count(&self) -> usize {
        self.attribute_types.iter().map(|a| a.values.len()).sum()
    }

    /// Validates one entry of the region grammar. `path` prefixes error paths.
    pub fn resolve_region(&self, doc: &RegionDoc, path: &str) -> Result<RegionAnnotation> {
        let region = self.region_index(&doc.region).ok_or_else(|| {
            Error::annotation(
                format!("{path}.region"),
                format!("unknown region {:?}", doc.region),
            )
        })?;
        let category = resolve_category(&self.categories, &doc.category).ok_or_else(|| {
            Error::annotation(
                format!("{path}.category"),
                format!("unknown category {}", doc.category),
            )
        })?;
        let cat = &self.categories[category.0 as usize];
        if cat.region != region {
            return Err(Error::annotation(
                format!("{path}.category"),
                format!(
                    "category {:?} belongs to region {:?}, not {:?}",
                    cat.name, self.body_regions[cat.region], doc.region
                ),
            ));
        }
        let mut attributes = BTreeMap::new();
        for (type_name, value_name) in &doc.attributes {
            let apath = format!("{path}.attributes.{type_name}");
            let at = self.attribute_type_by_name(type_name).ok_or_else(|| {
                Error::annotation(
                    apath.clone(),
                    format!("unknown attribute type {type_name:?}"),
                )
            })?;
            if !at.applies_to.contains(&category) {
                return Err(Error::annotation(
                    apath,
                    format!(
                        "attribute type {type_name:?} is not applicable to category {:?}",
                        cat.name
                    ),
                ));
            }
            let value = at.value_id(value_name).ok_or_else(|| {
                Error::annotation(
                    apath.clone(),
                    format!("unknown value {value_name:?} for attribute type {type_name:?}"),
                )
            })?;
            attributes.insert(at.id, value);
        }
        if let Some(c) = doc.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::annotation(
                    format!("{path}.confidence"),
                    format!("confidence {c} outside [0, 1]"),
                ));
            }
        }
        Ok(RegionAnnotation {
            region,
            category,
            attributes,
            confidence: doc.confidence,
        })
    }

    /// Inverse of [`Schema::resolve_region`].
    pub fn region_doc(&self, annotation: &RegionAnnotation) -> RegionDoc {
        let cat = &self.categories[annotation.category.0 as usize];
        let attributes = annotation
            .attributes
            .iter()
            .map(|(id, &v)| {
                let at = self
                    .attribute_type(*id)
                    .expect("attribute id from this schema");
                (at.name.clone(), at.values[v as usize].clone())
            })
            .collect();
        RegionDoc {
            region: self.body_regions[annotation.region].clone(),
            category: CategoryRef::Name(cat.name.clone()),
            attributes,
            confidence: annotation.confidence,
        }
    }
}

fn resolve_category(categories: &[Category], cref: &CategoryRef) -> Option<CategoryId> {
    match cref {
        CategoryRef::Id(id) => categories.get(*id as usize).map(|c| c.id),
        CategoryRef::Name(name) => categories.iter().find(|c| &c.name == name).map(|c| c.id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "occasions": ["Office"],
            "body_regions": ["upper_body"],
            "categories": [{"id": 0, "name": "shirt", "region": "upper_body"}],
            "attribute_types": [
                {"id": 0, "name": "sleeve", "values": ["short", "long"], "applies_to": ["shirt"]}
            ]
        }"#
    }

    #[test]
    fn default_schema_counts() {
        let s = Schema::default_schema();
        assert_eq!(s.occasions().len(), 7);
        assert_eq!(s.categories().len(), 20);
        assert_eq!(s.attribute_value_count(), 39);
        for occ in [
            "Travel", "Sports", "Dating", "Wedding", "Party", "Office", "Prom",
        ] {
            assert!(s.has_occasion(occ), "{occ}");
        }
    }

    #[test]
    fn minimal_schema_is_valid() {
        let s = load_schema(minimal()).unwrap();
        assert_eq!(s.body_regions(), ["upper_body"]);
        assert_eq!(s.attribute_types()[0].values.len(), 2);
    }

    #[test]
    fn duplicate_category_id() {
        let doc = r#"{
            "occasions": ["Office"],
            "body_regions": ["upper_body"],
            "categories": [
                {"id": 0, "name": "shirt", "region": "upper_body"},
                {"id": 0, "name": "tee", "region": "upper_body"}
            ],
            "attribute_types": []
        }"#;
        let err = load_schema(doc).unwrap_err().to_string();
        assert!(err.contains("duplicate category id"), "{err}");
        assert!(err.contains("categories[1].id"), "{err}");
    }

    #[test]
    fn unknown_region_and_empty_domain() {
        let doc = minimal().replace(r#""region": "upper_body""#, r#""region": "head""#);
        let err = load_schema(&doc).unwrap_err().to_string();
        assert!(err.contains("categories[0].region"), "{err}");

        let doc = minimal().replace(r#"["short", "long"]"#, "[]");
        let err = load_schema(&doc).unwrap_err().to_string();
        assert!(err.contains("empty value domain"), "{err}");

        let doc = minimal().replace(r#"["short", "long"]"#, r#"["short"]"#);
        assert!(load_schema(&doc).is_err());

        let doc = minimal().replace(r#"["short", "long"]"#, r#"["short", "short"]"#);
        let err = load_schema(&doc).unwrap_err().to_string();
        assert!(err.contains("duplicate value"), "{err}");
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(load_schema("{"), Err(Error::Parse(_))));
        assert!(matches!(
            load_schema(r#"{"occasions": []}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn duplicate_and_empty_occasions() {
        let doc = minimal().replace(r#"["Office"]"#, r#"["Office", "Office"]"#);
        assert!(load_schema(&doc)
            .unwrap_err()
            .to_string()
            .contains("occasions[1]"));
        let doc = minimal().replace(r#"["Office"]"#, r#"[""]"#);
        assert!(load_schema(&doc).is_err());
    }

    #[test]
    fn region_grammar_validation() {
        let s = load_schema(minimal()).unwrap();
        let ok: RegionDoc = serde_json::from_str(
            r#"{"region": "upper_body", "category": "shirt", "attributes": {"sleeve": "long"}}"#,
        )
        .unwrap();
        let ann = s.resolve_region(&ok, "r").unwrap();
        assert_eq!(ann.attributes[&AttributeTypeId(0)], 1);
        assert_eq!(s.region_doc(&ann), ok);

        let by_id: RegionDoc =
            serde_json::from_str(r#"{"region": "upper_body", "category": 0}"#).unwrap();
        assert_eq!(
            s.resolve_region(&by_id, "r").unwrap().category,
            CategoryId(0)
        );

        let bad: RegionDoc = serde_json::from_str(
            r#"{"region": "upper_body", "category": "shirt", "attributes": {"sleeve": "cap"}}"#,
        )
        .unwrap();
        let err = s.resolve_region(&bad, "r").unwrap_err().to_string();
        assert!(err.contains("r.attributes.sleeve"), "{err}");

        let bad_conf: RegionDoc = serde_json::from_str(
            r#"{"region": "upper_body", "category": "shirt", "confidence": 1.5}"#,
        )
        .unwrap();
        assert!(s.resolve_region(&bad_conf, "r").is_err());
    }
}
