//! End-to-end grading: grayscale image → (optional Otsu binarization) →
//! square resample → DFT → amplitude → down-sampled feature vector → SOM.

pub mod config;
pub mod dataset;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::image::{GrayImage, ImageError};
use crate::metrics::MetricsError;
use crate::model_file::{self, ModelFileError};
use crate::otsu::{self, OtsuError};
use crate::som::{Classification, ClassifyMode, Grade, SomError, SomModel};
use crate::spectral::{self, FeatureVector, SpectralError};

pub use config::{ConfigError, PipelineConfig};
pub use dataset::LabeledImage;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no training image for grade {0}")]
    MissingGrade(Grade),
    #[error("configuration does not match the model: {0}")]
    ConfigMismatch(String),
    #[error("no images to evaluate")]
    EmptyTestSet,
    #[error("labels: {0}")]
    Labels(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Som(#[from] SomError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit code: 2 for usage, 4 for configuration or model mismatches, 3 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 2,
            PipelineError::ConfigMismatch(_) | PipelineError::Config(_) => 4,
            _ => 3,
        }
    }
}

/// The feature vector an image contributes under `config`. Training and
/// classification both go through here.
pub fn feature_vector(
    img: &GrayImage,
    config: &PipelineConfig,
) -> Result<FeatureVector, PipelineError> {
    let binarized;
    let source = if config.binarize {
        match otsu::otsu_threshold(&otsu::histogram(img)) {
            Ok(t) => {
                binarized = otsu::binarize(img, t).to_gray();
                &binarized
            }
            // A single-intensity image is already "binary".
            Err(OtsuError::DegenerateHistogram(_)) => img,
            Err(e) => unreachable!("histogram of a non-empty image: {e}"),
        }
    } else {
        img
    };
    let square = spectral::prepare_square(source, config.transform_size)?;
    let spec = spectral::dft2(&square)?;
    let amps = spectral::amplitude(&spec);
    Ok(spectral::extract_features(
        &amps,
        config.feature_side,
        config.include_dc,
    )?)
}

/// A trained, labeled map together with the resolved config it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: SomModel,
    pub config: PipelineConfig,
}

impl TrainedModel {
    /// PKSM0002 bytes with the config embedded.
    pub fn to_bytes(&self) -> Vec<u8> {
        model_file::encode(&self.model, Some(&self.config.to_text()))
    }

    /// Decodes a model file. PKSM0001 files carry no config, so `fallback`
    /// supplies the preprocessing parameters.
    pub fn from_bytes(bytes: &[u8], fallback: &PipelineConfig) -> Result<Self, PipelineError> {
        let file = model_file::decode(bytes)?;
        let config = match file.config {
            Some(text) => PipelineConfig::parse(&text)?,
            None => fallback.clone(),
        };
        Ok(Self {
            model: file.model,
            config,
        })
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(
        path: impl AsRef<std::path::Path>,
        fallback: &PipelineConfig,
    ) -> Result<Self, PipelineError> {
        Self::from_bytes(&std::fs::read(path)?, fallback)
    }

    fn check_compatible(&self) -> Result<(), PipelineError> {
        self.config.validate()?;
        if self.model.dim() != self.config.feature_dim() {
            return Err(PipelineError::ConfigMismatch(format!(
                "model input dimension {} but feature_side {} gives {}",
                self.model.dim(),
                self.config.feature_side,
                self.config.feature_dim()
            )));
        }
        Ok(())
    }
}

fn features_of(
    images: &[LabeledImage],
    config: &PipelineConfig,
) -> Result<Vec<FeatureVector>, PipelineError> {
    images
        .par_iter()
        .map(|li| feature_vector(&li.image, config))
        .collect()
}

/// Trains a map on the images in the given order, then labels every node
/// with the grade of the nearest per-grade mean feature vector.
pub fn run_train(
    config: &PipelineConfig,
    images: &[LabeledImage],
) -> Result<TrainedModel, PipelineError> {
    config.validate()?;
    if let Some(&missing) = Grade::ALL
        .iter()
        .find(|g| !images.iter().any(|li| li.grade == **g))
    {
        return Err(PipelineError::MissingGrade(missing));
    }
    let features = features_of(images, config)?;
    let config = config.resolved(features.len());
    let mut model = SomModel::new(
        config.som_rows,
        config.som_cols,
        config.feature_dim(),
        config.seed,
    )?;
    model.set_classify_mode(config.classify_mode);
    let samples: Vec<&[f64]> = features.iter().map(FeatureVector::data).collect();
    model.train(&samples, &config.schedule(samples.len()))?;

    let prototypes: Vec<(Vec<f64>, Grade)> = Grade::ALL
        .iter()
        .map(|&grade| {
            let members: Vec<&[f64]> = images
                .iter()
                .zip(&samples)
                .filter(|(li, _)| li.grade == grade)
                .map(|(_, s)| *s)
                .collect();
            let mut mean = vec![0.0; config.feature_dim()];
            for m in &members {
                for (acc, v) in mean.iter_mut().zip(m.iter()) {
                    *acc += v;
                }
            }
            mean.iter_mut().for_each(|v| *v /= members.len() as f64);
            (mean, grade)
        })
        .collect();
    model.label_nodes(&prototypes)?;
    Ok(TrainedModel { model, config })
}

pub fn run_classify(
    trained: &TrainedModel,
    image: &GrayImage,
) -> Result<Classification, PipelineError> {
    trained.check_compatible()?;
    let fv = feature_vector(image, &trained.config)?;
    Ok(trained.model.classify(fv.data())?)
}

/// Same as [`run_classify`] with an explicit classification mode.
pub fn run_classify_with(
    trained: &TrainedModel,
    image: &GrayImage,
    mode: ClassifyMode,
) -> Result<Classification, PipelineError> {
    trained.check_compatible()?;
    let fv = feature_vector(image, &trained.config)?;
    Ok(trained.model.classify_with(fv.data(), mode)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRow {
    pub name: String,
    pub truth: Grade,
    pub predicted: Grade,
    pub row: usize,
    pub col: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// One row per image, sorted by file name.
    pub rows: Vec<EvaluationRow>,
    /// `confusion[truth][predicted]`, zero-based grade indices.
    pub confusion: [[usize; 5]; 5],
    pub accuracy: f64,
}

impl EvaluationReport {
    fn from_rows(mut rows: Vec<EvaluationRow>) -> Self {
        rows.sort_by(|a, b| a.name.cmp(&b.name));
        let mut confusion = [[0usize; 5]; 5];
        for r in &rows {
            confusion[r.truth.index()][r.predicted.index()] += 1;
        }
        let correct: usize = (0..5).map(|i| confusion[i][i]).sum();
        let accuracy = 100.0 * correct as f64 / rows.len() as f64;
        Self {
            rows,
            confusion,
            accuracy,
        }
    }

    pub fn correct(&self) -> usize {
        (0..5).map(|i| self.confusion[i][i]).sum()
    }

    pub fn total(&self) -> usize {
        self.rows.len()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("file\ttrue\tpredicted\tnode_row\tnode_col\tdistance\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}",
                r.name, r.truth, r.predicted, r.row, r.col, r.distance
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  true  pred   node      distance", "file");
        for r in &self.rows {
            let mark = if r.truth == r.predicted { ' ' } else { '*' };
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>4}{} {:>7}  {:>10.6}",
                r.name,
                r.truth.value(),
                r.predicted.value(),
                mark,
                format!("({},{})", r.row, r.col),
                r.distance
            );
        }
        let _ = writeln!(out, "\nconfusion (rows = true grade, cols = predicted)");
        let _ = writeln!(out, "     1   2   3   4   5");
        for (i, row) in self.confusion.iter().enumerate() {
            let _ = write!(out, "  {}", i + 1);
            for c in row {
                let _ = write!(out, "{c:>4}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\naccuracy: {:.2}% ({}/{})",
            self.accuracy,
            self.correct(),
            self.total()
        );
        out
    }
}

/// Classifies every image concurrently and assembles a report keyed by name.
pub fn run_evaluate(
    trained: &TrainedModel,
    images: &[LabeledImage],
) -> Result<EvaluationReport, PipelineError> {
    if images.is_empty() {
        return Err(PipelineError::EmptyTestSet);
    }
    trained.check_compatible()?;
    let rows = images
        .par_iter()
        .map(|li| {
            let c = run_classify(trained, &li.image)?;
            Ok(EvaluationRow {
                name: li.name.clone(),
                truth: li.grade,
                predicted: c.grade,
                row: c.row,
                col: c.col,
                distance: c.distance,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(EvaluationReport::from_rows(rows))
}

/// Per-grade counts, for summaries.
pub fn grade_counts(images: &[LabeledImage]) -> BTreeMap<Grade, usize> {
    let mut counts = BTreeMap::new();
    for li in images {
        *counts.entry(li.grade).or_insert(0) += 1;
    }
    counts
}
