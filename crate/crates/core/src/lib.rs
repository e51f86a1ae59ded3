//! Cold-start outfit recommendation.
//!
//! A labelled outfit catalog is filtered by gender and occasion, each slice is
//! clustered into concept clusters with feature-weighted k-modes (k chosen by
//! silhouette), and a recommendation set is drawn from the clusters in
//! proportion to their similarity with a preference profile pooled from a
//! handful of labelled user images.
//!
//! ```
//! use outfitter_core::{FeatureSpace, Schema};
//!
//! let schema = Schema::default_schema();
//! let space = FeatureSpace::new(&schema);
//! assert_eq!(space.len(), schema.body_regions().len() + schema.attribute_types().len());
//! ```

pub mod catalog;
pub mod clustering;
pub mod concept;
pub mod error;
pub mod model;
pub mod recommend;
pub mod schema;
pub mod space;

pub use catalog::{load_catalog, validate_catalog, Catalog, Finding, Gender, OutfitRecord};
pub use clustering::{
    assign_step, kmodes, select_k, silhouette, update_modes, ClusterModel, DeltaMode, InitMethod,
    KModesConfig,
};
pub use concept::{
    cumulative_loss, ConceptExtractor, FixtureExtractor, LossWeights, RegionAnnotation,
};
pub use error::{Error, Result};
pub use model::{ModelDocument, ModelStore, SliceModel};
pub use recommend::{
    allocate, recommend, weight_clusters, PreferenceMode, Recommendation, RecommendationDocument,
    RecommendationRequest, Sampling,
};
pub use schema::{load_schema, AttributeTypeId, CategoryId, Schema};
pub use space::{
    build_profile, build_space, delta, delta_freq, FeatureSpace, FeatureVector, PreferenceProfile,
    WeightConfig,
};
