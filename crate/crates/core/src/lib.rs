//! Hyperdimensional aggregation of local image features.
//!
//! Local descriptors are bound to hypervector encodings of their image
//! positions and bundled into one fixed-size holistic vector per image.
//! Comparing two such vectors with a single cosine approximates an
//! exhaustive, position-aware comparison of all local feature pairs.
//!
//! ```
//! use hdagg::{Feature, FeatureSet, EncoderMeta, LocalEncoder, compare};
//!
//! let mut meta = EncoderMeta::new(7);
//! meta.dim = 1024;
//! let encoder = LocalEncoder::new(meta, 3).unwrap();
//!
//! let mut image = FeatureSet::new("a", 640.0, 480.0);
//! for (i, d) in [[1.0, 0.0, 0.2], [0.0, 1.0, 0.1], [0.3, 0.3, 1.0]].iter().enumerate() {
//!     image.features.push(Feature { descriptor: d.to_vec(), x: 100.0 * i as f64 + 1.0, y: 50.0, score: 1.0 });
//! }
//! let a = encoder.encode(&image).unwrap();
//! let b = encoder.encode(&image).unwrap();
//! assert!((compare(&a, &b).unwrap() - 1.0).abs() < 1e-12);
//! ```

pub mod aggregate;
pub mod baseline;
pub mod config;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod features;
pub mod hypervector;
pub mod io;
pub mod position;
pub mod preprocess;
pub mod seed;
pub mod synth;

pub use aggregate::{
    aggregate_local, aggregate_local_counted, bundle_holistic, compare, recover_typed, typed_bundle, DescriptorKind,
    EncoderMeta, HolisticDescriptor, LocalEncoder, OpCounts,
};
pub use baseline::{exhaustive_similarity, mutual_matches, position_weight, Grid, Match, MatchSet, WeightMode};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use eval::{average_precision, recall_at_k, similarity_matrix, EvalReport, GroundTruth, PrPoint, SimilarityMatrix};
pub use features::{Feature, FeatureSet};
pub use hypervector::{bind, bundle, cosine, random_symbol, HdVector, SymbolTable};
pub use position::{encode_pose, encode_scalar, make_basis_bank, Axis, BasisBank, PoseEncoding};
pub use preprocess::{
    l2_normalize, mean_center_set, project, standardize_per_image, CenteringMode, PreparedFeatures, ProjectionSpec,
};
