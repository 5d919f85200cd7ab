//! Age-friendliness index over occupations.
//!
//! The pipeline embeds occupational descriptor texts and amenity definitions,
//! combines them into per-occupation vectors, and scores each occupation by its
//! cosine similarity to a preference-weighted amenity embedding. Supporting
//! modules backcast descriptor panels, aggregate scores over employment, fit
//! robust regressions and validate rankings against survey responses.

pub mod analytics;
pub mod catalog;
pub mod econ;
pub mod embedder;
pub mod index;
pub mod survey;
pub mod timeseries;

mod linalg;

pub use catalog::{AmenitySpec, DescriptorCatalog, EmploymentPanel};
pub use embedder::EmbeddingMatrix;
pub use index::{AfiTable, AgeFriendlinessEmbedding, OccupationVectors, WeightMode};
