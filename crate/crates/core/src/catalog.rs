//! Outfit catalog ingestion and the gender/occasion content filter.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::concept::RegionAnnotation;
use crate::error::{Error, Result};
use crate::schema::{RegionDoc, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            other => Err(Error::InvalidArgument(format!(
                "unknown gender {other:?} (expected male or female)"
            ))),
        }
    }
}

/// A labelled outfit. Region annotations keep document order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutfitRecord {
    pub record_id: String,
    pub gender: Gender,
    pub age_group: Option<String>,
    pub occasion: String,
    pub regions: Vec<RegionAnnotation>,
    pub image_ref: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDoc {
    records: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordDoc {
    pub record_id: String,
    pub gender: Gender,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_group: Option<String>,
    pub occasion: String,
    pub regions: Vec<RegionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

/// One validation problem found while ingesting a catalog document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Validated outfit collection with a (gender, occasion) index.
#[derive(Debug, Clone)]
pub struct Catalog {
    schema: Schema,
    records: Vec<OutfitRecord>,
    index: BTreeMap<(Gender, String), Vec<usize>>,
    by_id: BTreeMap<String, usize>,
}

/// Parses a catalog document, failing on the first invalid record.
pub fn load_catalog(document: &str, schema: &Schema) -> Result<Catalog> {
    let (records, mut errors) = ingest(document, schema);
    if !errors.is_empty() {
        return Err(errors.swap_remove(0));
    }
    Ok(Catalog::from_records(schema.clone(), records)
        .expect("ingest already enforced record invariants"))
}

/// Validates a catalog document and reports every problem found.
pub fn validate_catalog(document: &str, schema: &Schema) -> Vec<Finding> {
    ingest(document, schema)
        .1
        .into_iter()
        .map(|e| match e {
            Error::Catalog { path, message } => Finding { path, message },
            other => Finding {
                path: "$".to_string(),
                message: other.to_string(),
            },
        })
        .collect()
}

fn ingest(document: &str, schema: &Schema) -> (Vec<OutfitRecord>, Vec<Error>) {
    let doc: CatalogDoc = match serde_json::from_str(document) {
        Ok(doc) => doc,
        Err(e) => return (Vec::new(), vec![Error::Parse(e)]),
    };
    let mut records = Vec::with_capacity(doc.records.len());
    let mut errors = Vec::new();
    let mut ids = HashSet::new();
    for (i, value) in doc.records.into_iter().enumerate() {
        let path = format!("records[{i}]");
        let rec: RecordDoc = match serde_json::from_value(value) {
            Ok(r) => r,
            Err(e) => {
                errors.push(Error::catalog(path, e.to_string()));
                continue;
            }
        };
        if !ids.insert(rec.record_id.clone()) {
            errors.push(Error::catalog(
                format!("{path}.record_id"),
                format!("duplicate record_id {:?}", rec.record_id),
            ));
            continue;
        }
        match validate_record(rec, schema, &path) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    (records, errors)
}

fn validate_record(rec: RecordDoc, schema: &Schema, path: &str) -> Result<OutfitRecord> {
    let id = &rec.record_id;
    if id.trim().is_empty() {
        return Err(Error::catalog(
            format!("{path}.record_id"),
            "empty record_id",
        ));
    }
    if !schema.has_occasion(&rec.occasion) {
        return Err(Error::catalog(
            format!("{path}.occasion"),
            format!("record {id:?}: unknown occasion {:?}", rec.occasion),
        ));
    }
    let mut regions = Vec::with_capacity(rec.regions.len());
    let mut seen_regions = HashSet::new();
    for (j, rdoc) in rec.regions.iter().enumerate() {
        let rpath = format!("{path}.regions[{j}]");
        let ann = schema.resolve_region(rdoc, &rpath).map_err(|e| match e {
            Error::Annotation { path, message } => {
                Error::catalog(path, format!("record {id:?}: {message}"))
            }
            other => other,
        })?;
        if !seen_regions.insert(ann.region) {
            return Err(Error::catalog(
                format!("{rpath}.region"),
                format!(
                    "record {id:?}: more than one annotation for region {:?}",
                    rdoc.region
                ),
            ));
        }
        regions.push(ann);
    }
    Ok(OutfitRecord {
        record_id: rec.record_id,
        gender: rec.gender,
        age_group: rec.age_group,
        occasion: rec.occasion,
        regions,
        image_ref: rec.image_ref,
    })
}

impl Catalog {
    /// Builds a catalog from already-resolved records, re-checking record invariants.
    pub fn from_records(schema: Schema, records: Vec<OutfitRecord>) -> Result<Catalog> {
        let mut index: BTreeMap<(Gender, String), Vec<usize>> = BTreeMap::new();
        let mut by_id = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.record_id.clone(), i).is_some() {
                return Err(Error::catalog(
                    format!("records[{i}].record_id"),
                    format!("duplicate record_id {:?}", r.record_id),
                ));
            }
            if !schema.has_occasion(&r.occasion) {
                return Err(Error::catalog(
                    format!("records[{i}].occasion"),
                    format!(
                        "record {:?}: unknown occasion {:?}",
                        r.record_id, r.occasion
                    ),
                ));
            }
            let mut seen = HashSet::new();
            for (j, ann) in r.regions.iter().enumerate() {
                let path = format!("records[{i}].regions[{j}]");
                ann.check(&schema)
                    .map_err(|m| Error::catalog(&path, format!("record {:?}: {m}", r.record_id)))?;
                if !seen.insert(ann.region) {
                    return Err(Error::catalog(
                        path,
                        format!(
                            "record {:?}: more than one annotation per region",
                            r.record_id
                        ),
                    ));
                }
            }
            index
                .entry((r.gender, r.occasion.clone()))
                .or_default()
                .push(i);
        }
        Ok(Catalog {
            schema,
            records,
            index,
            by_id,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[OutfitRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, record_id: &str) -> Option<&OutfitRecord> {
        self.by_id.get(record_id).map(|&i| &self.records[i])
    }

    /// Record ids matching both gender and occasion, in catalog order.
    pub fn filter(&self, gender: Gender, occasion: &str) -> Result<Vec<&str>> {
        Ok(self
            .slice(gender, occasion)?
            .into_iter()
            .map(|r| r.record_id.as_str())
            .collect())
    }

    /// Records matching both gender and occasion, in catalog order.
    pub fn slice(&self, gender: Gender, occasion: &str) -> Result<Vec<&OutfitRecord>> {
        if !self.schema.has_occasion(occasion) {
            return Err(Error::UnknownOccasion(occasion.to_string()));
        }
        Ok(self
            .index
            .get(&(gender, occasion.to_string()))
            .map(|idx| idx.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default())
    }

    /// Record counts for every (gender, occasion) pair, including empty ones.
    pub fn counts(&self) -> Vec<(Gender, String, usize)> {
        let mut out = Vec::new();
        for g in Gender::ALL {
            for occ in self.schema.occasions() {
                let n = self.index.get(&(g, occ.clone())).map(Vec::len).unwrap_or(0);
                out.push((g, occ.clone(), n));
            }
        }
        out
    }

    pub fn to_record_doc(&self, record: &OutfitRecord) -> RecordDoc {
        RecordDoc {
            record_id: record.record_id.clone(),
            gender: record.gender,
            age_group: record.age_group.clone(),
            occasion: record.occasion.clone(),
            regions: record
                .regions
                .iter()
                .map(|a| self.schema.region_doc(a))
                .collect(),
            image_ref: record.image_ref.clone(),
        }
    }
}
