//! Objective seam-pucker grading.
//!
//! Grayscale images of a horizontal seam are transformed with a 2D DFT, the
//! amplitude spectrum is block-averaged into a fixed-size feature vector, and a
//! Kohonen self-organizing map assigns one of five quality grades
//! (5 = smooth, 1 = heavily puckered).
//!
//! - [`image`]: rasters, PNG / binary PGM codecs, luma conversion
//! - [`otsu`]: histogram threshold selection and binarization
//! - [`spectral`]: forward/inverse DFT, amplitude/phase, feature vectors
//! - [`som`]: map training, labeling and classification
//! - [`model_file`]: binary model persistence
//! - [`metrics`]: thickness/length SP indicators
//! - [`synth`]: synthetic obliquely-lit seam samples
//! - [`pipeline`]: configuration, training, classification and evaluation

pub mod image;
pub mod metrics;
pub mod model_file;
pub mod otsu;
pub mod pipeline;
pub mod som;
pub mod spectral;
pub mod synth;

pub use image::{GrayImage, RgbImage};
pub use pipeline::{PipelineConfig, PipelineError, TrainedModel};
pub use som::{ClassifyMode, Grade, SomModel, TrainingSchedule};
pub use spectral::{FeatureVector, Spectrum};
