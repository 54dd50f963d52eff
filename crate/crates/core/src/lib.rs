//! Exact k-nearest-neighbor refinement with progressively tightened
//! Cauchy–Schwarz distance bounds over an energy-compacting orthogonal
//! transform.
//!
//! Vectors are rotated by a learned [`TransformModel`] so most of their
//! energy lands in the leading coordinates. Candidates are then refined
//! level by level, and discarded as soon as their lower bound exceeds the
//! current k-th best distance.

pub mod analytics;
pub mod bench;
pub mod bounds;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod heap;
pub mod index;
pub mod io;
pub mod kmeans;
pub mod layout;
pub mod persist;
pub mod synth;
pub mod transform;
pub mod vectors;

pub use bounds::{LevelSpec, RefineState, TransformedVector, VectorRef};
pub use dataset::TransformedDataset;
pub use engine::{EngineConfig, Refiner, Variant, WorkCounter};
pub use error::{Error, Result};
pub use heap::{EntryKind, ResultHeap};
pub use index::{FlatIndex, HnswIndex, IvfFlatIndex, Neighbor, SearchMode, SearchOutput};
pub use layout::LevelMajorBatch;
pub use transform::{TrainConfig, TransformModel};
pub use vectors::{VectorId, VectorSet};
