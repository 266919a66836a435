//! Ontology model, query expansion and the feature-based annotator.

mod features;
mod ontology;

pub(crate) use features::is_raster_file;
pub use features::{
    annotate_image, extract_features, hsv_bin, record_for_class, rgb_to_hsv, train_centroids, CentroidTable,
    FeatureVector, FEATURE_LEN, HISTOGRAM_LEN,
};
pub use ontology::{expand_query, expand_query_with, ExpandedQuery, ExpansionWeights, Ontology};

/// The ten COREL semantic classes.
pub const COREL_CLASSES: [&str; 10] =
    ["beach", "buildings", "buses", "dinosaurs", "elephants", "flowers", "food", "horses", "mountains", "people"];
