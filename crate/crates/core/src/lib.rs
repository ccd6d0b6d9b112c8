//! Online balanced k-means with centroid-based inference of a point's
//! missing last coordinate.
//!
//! The pieces:
//!
//! * [`model`]: the streaming assign / update / reweight cycle
//! * [`inference`]: seven estimators reading only the trained centroids
//! * [`datagen`]: seeded synthetic datasets and the named preset catalog
//! * [`eval`]: windowed training runs, inference error and sweeps
//! * [`vde`]: Voronoi density estimation with Monte Carlo cell volumes
//! * [`snapshot`], [`csv_io`]: the JSON and CSV file formats

pub mod csv_io;
pub mod datagen;
pub mod distance;
pub mod error;
pub mod eval;
pub mod inference;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod snapshot;
pub mod vde;

pub use distance::DistanceMode;
pub use error::{Error, Result};
pub use eval::{RunRecord, SweepAxis, SweepBase, SweepSpec, WindowStats};
pub use inference::{Estimate, InferenceParams, Method};
pub use matrix::Matrix;
pub use model::{Assignment, ClusterModel, Hyperparams};
pub use snapshot::ModelSnapshot;
