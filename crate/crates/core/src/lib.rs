//! Discretized versus regression-based defect classifiers: dataset handling,
//! feature prefiltering, learners, bootstrap validation and the statistics
//! used to compare them.

pub mod corpus;
pub mod error;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod matrix;
pub mod prefilter;
pub mod seed;
pub mod stats;
pub mod study;
pub mod synthetic;

pub use corpus::{DatasetManifest, DefectDataset, EpvMode, ManifestEntry};
pub use error::{Error, Result};
pub use learners::{Family, Hyperparameters, LearnerSpec, Mode, TrainedModel};
pub use matrix::Matrix;
