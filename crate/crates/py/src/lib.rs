//! Python bindings: images, Otsu, spectra, the SOM, the trained pipeline and
//! the synthetic sample generator.

use std::fmt::Display;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyFileNotFoundError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use puckergrade::image::{self, GrayImage, ImageError};
use puckergrade::metrics;
use puckergrade::otsu::{self, OtsuError};
use puckergrade::pipeline::{self, dataset, PipelineConfig, PipelineError, TrainedModel};
use puckergrade::som::{self, ClassifyMode, Grade, SomModel, TrainingSchedule};
use puckergrade::spectral::{self, Spectrum};
use puckergrade::synth::{self, DatasetSpec};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn image_err(e: ImageError) -> PyErr {
    match e {
        ImageError::FileNotFound(_) => PyFileNotFoundError::new_err(e.to_string()),
        ImageError::Io(_) => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn pipeline_err(e: PipelineError) -> PyErr {
    match e {
        PipelineError::Image(inner) => image_err(inner),
        PipelineError::Io(_) => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn grade(value: u8) -> PyResult<Grade> {
    Grade::new(value).map_err(value_err)
}

fn mode(name: Option<&str>) -> PyResult<Option<ClassifyMode>> {
    name.map(|n| n.parse::<ClassifyMode>().map_err(value_err))
        .transpose()
}

/// 8-bit grayscale raster, row-major.
#[pyclass(
    name = "GrayImage",
    module = "puckergrade_py",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyGrayImage(GrayImage);

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<u8>) -> PyResult<Self> {
        GrayImage::new(width, height, pixels)
            .map(Self)
            .map_err(image_err)
    }

    /// Loads a PNG or binary PGM, converting color to luma.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        image::load_image(path)
            .map(|l| Self(l.into_gray()))
            .map_err(image_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.pixels())
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(value_err(format!("pixel ({x}, {y}) outside the image")));
        }
        Ok(self.0.get(x, y))
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        image::save_png(&self.0, path).map_err(image_err)
    }

    fn save_pgm(&self, path: PathBuf) -> PyResult<()> {
        image::save_pgm(&self.0, path).map_err(image_err)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.0.width(), self.0.height())
    }
}

/// Forward-normalized 2D spectrum; `get(k, l)` has `k` as the row frequency.
#[pyclass(name = "Spectrum", module = "puckergrade_py", frozen)]
struct PySpectrum(Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn get(&self, k: usize, l: usize) -> PyResult<Complex64> {
        if k >= self.0.n() || l >= self.0.n() {
            return Err(value_err(format!("bin ({k}, {l}) outside the spectrum")));
        }
        Ok(self.0.get(k, l))
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.values().to_vec()
    }

    fn amplitude(&self) -> Vec<f64> {
        spectral::amplitude(&self.0).values().to_vec()
    }

    fn phase(&self) -> Vec<f64> {
        spectral::phase(&self.0).values().to_vec()
    }

    /// Real part of the inverse transform.
    fn inverse(&self) -> PyResult<Vec<f64>> {
        spectral::idft2(&self.0)
            .map(|f| f.real())
            .map_err(value_err)
    }
}

/// Preprocessing, map and schedule settings; parsed from `key = value` text.
#[pyclass(
    name = "PipelineConfig",
    module = "puckergrade_py",
    skip_from_py_object
)]
#[derive(Clone)]
struct PyConfig(PipelineConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text = None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        match text {
            Some(t) => PipelineConfig::parse(t).map(Self).map_err(value_err),
            None => Ok(Self(PipelineConfig::default())),
        }
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn transform_size(&self) -> usize {
        self.0.transform_size
    }

    #[setter]
    fn set_transform_size(&mut self, v: usize) {
        self.0.transform_size = v;
    }

    #[getter]
    fn feature_side(&self) -> usize {
        self.0.feature_side
    }

    #[setter]
    fn set_feature_side(&mut self, v: usize) {
        self.0.feature_side = v;
    }

    #[getter]
    fn include_dc(&self) -> bool {
        self.0.include_dc
    }

    #[setter]
    fn set_include_dc(&mut self, v: bool) {
        self.0.include_dc = v;
    }

    #[getter]
    fn binarize(&self) -> bool {
        self.0.binarize
    }

    #[setter]
    fn set_binarize(&mut self, v: bool) {
        self.0.binarize = v;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.0.seed = v;
    }

    #[getter]
    fn classify_mode(&self) -> &'static str {
        self.0.classify_mode.as_str()
    }

    #[setter]
    fn set_classify_mode(&mut self, v: &str) -> PyResult<()> {
        self.0.classify_mode = v.parse().map_err(value_err)?;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("PipelineConfig({:?})", self.0.to_text())
    }
}

fn config_or_default(config: Option<PyRef<'_, PyConfig>>) -> PipelineConfig {
    config.map_or_else(PipelineConfig::default, |c| c.0.clone())
}

#[pyclass(name = "Classification", module = "puckergrade_py", frozen, get_all)]
struct PyClassification {
    grade: u8,
    row: usize,
    col: usize,
    distance: f64,
    score: f64,
    mode: &'static str,
}

impl From<som::Classification> for PyClassification {
    fn from(c: som::Classification) -> Self {
        Self {
            grade: c.grade.value(),
            row: c.row,
            col: c.col,
            distance: c.distance,
            score: c.score,
            mode: c.mode.as_str(),
        }
    }
}

#[pymethods]
impl PyClassification {
    fn __repr__(&self) -> String {
        format!(
            "Classification(grade={}, node=({}, {}), distance={:.6}, mode={})",
            self.grade, self.row, self.col, self.distance, self.mode
        )
    }
}

/// Kohonen map with seeded uniform initialization.
#[pyclass(name = "SomModel", module = "puckergrade_py", skip_from_py_object)]
#[derive(Clone)]
struct PySomModel(SomModel);

#[pymethods]
impl PySomModel {
    #[new]
    #[pyo3(signature = (rows, cols, dim, seed = 42))]
    fn new(rows: usize, cols: usize, dim: usize, seed: u64) -> PyResult<Self> {
        SomModel::new(rows, cols, dim, seed)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn rows(&self) -> usize {
        self.0.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.0.cols()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn weight(&self, row: usize, col: usize) -> PyResult<Vec<f64>> {
        if row >= self.0.rows() || col >= self.0.cols() {
            return Err(value_err(format!("node ({row}, {col}) outside the map")));
        }
        Ok(self.0.weight(row, col).to_vec())
    }

    /// `(row, col, distance)` of the best-matching unit.
    fn bmu(&self, x: Vec<f64>) -> PyResult<(usize, usize, f64)> {
        let b = self.0.bmu(&x).map_err(value_err)?;
        Ok((b.row, b.col, b.distance))
    }

    fn update(
        &mut self,
        x: Vec<f64>,
        winner: (usize, usize),
        alpha: f64,
        radius: f64,
    ) -> PyResult<()> {
        self.0.update(&x, winner, alpha, radius).map_err(value_err)
    }

    /// Trains with the linear schedule; `d0` and `iterations` default to the
    /// grid-derived radius and 200 steps per sample.
    #[pyo3(signature = (samples, alpha0 = som::DEFAULT_ALPHA0, d0 = None, iterations = None))]
    fn train(
        &mut self,
        py: Python<'_>,
        samples: Vec<Vec<f64>>,
        alpha0: f64,
        d0: Option<f64>,
        iterations: Option<u64>,
    ) -> PyResult<()> {
        let defaults = TrainingSchedule::default_for(self.0.rows(), self.0.cols(), samples.len());
        let schedule = TrainingSchedule::new(
            alpha0,
            d0.unwrap_or(defaults.d0()),
            iterations.unwrap_or(defaults.iterations()),
        )
        .map_err(value_err)?;
        let model = &mut self.0;
        py.detach(|| model.train(&samples, &schedule))
            .map_err(value_err)
    }

    /// Labels every node with the grade of its nearest `(vector, grade)` prototype.
    fn label_nodes(&mut self, prototypes: Vec<(Vec<f64>, u8)>) -> PyResult<()> {
        let protos = prototypes
            .into_iter()
            .map(|(v, g)| grade(g).map(|g| (v, g)))
            .collect::<PyResult<Vec<_>>>()?;
        self.0.label_nodes(&protos).map_err(value_err)
    }

    fn labels(&self) -> Vec<Option<u8>> {
        self.0
            .labels()
            .iter()
            .map(|l| l.map(Grade::value))
            .collect()
    }

    #[pyo3(signature = (x, mode = None))]
    fn classify(&self, x: Vec<f64>, mode: Option<&str>) -> PyResult<PyClassification> {
        let m = self::mode(mode)?.unwrap_or(self.0.classify_mode());
        self.0
            .classify_with(&x, m)
            .map(Into::into)
            .map_err(value_err)
    }

    fn quantization_error(&self, samples: Vec<Vec<f64>>) -> PyResult<f64> {
        self.0.quantization_error(&samples).map_err(value_err)
    }

    /// PKSM0001 bytes (no embedded config).
    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &puckergrade::model_file::encode(&self.0, None))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        puckergrade::model_file::decode(data)
            .map(|f| Self(f.model))
            .map_err(value_err)
    }
}

/// A labeled map plus the config it was trained with.
#[pyclass(name = "TrainedModel", module = "puckergrade_py", frozen)]
struct PyTrainedModel(TrainedModel);

#[pymethods]
impl PyTrainedModel {
    /// Trains on `<dir>/labels.tsv` (or `labels`), optionally keeping only `_<role>_` names.
    #[staticmethod]
    #[pyo3(signature = (dir, config = None, labels = None, role = None))]
    fn train(
        py: Python<'_>,
        dir: PathBuf,
        config: Option<PyRef<'_, PyConfig>>,
        labels: Option<PathBuf>,
        role: Option<String>,
    ) -> PyResult<Self> {
        let cfg = config_or_default(config);
        py.detach(|| {
            let images = dataset::load_labeled_dir(&dir, labels.as_deref(), role.as_deref())?;
            pipeline::run_train(&cfg, &images)
        })
        .map(Self)
        .map_err(pipeline_err)
    }

    /// Reads a PKSM file; `config` is only used for files without an embedded one.
    #[staticmethod]
    #[pyo3(signature = (path, config = None))]
    fn load(path: PathBuf, config: Option<PyRef<'_, PyConfig>>) -> PyResult<Self> {
        TrainedModel::read(path, &config_or_default(config))
            .map(Self)
            .map_err(pipeline_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.write(path).map_err(pipeline_err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    #[getter]
    fn config(&self) -> PyConfig {
        PyConfig(self.0.config.clone())
    }

    #[getter]
    fn som(&self) -> PySomModel {
        PySomModel(self.0.model.clone())
    }

    #[pyo3(signature = (image, mode = None))]
    fn classify(&self, image: &PyGrayImage, mode: Option<&str>) -> PyResult<PyClassification> {
        let m = self::mode(mode)?.unwrap_or(self.0.model.classify_mode());
        pipeline::run_classify_with(&self.0, &image.0, m)
            .map(Into::into)
            .map_err(pipeline_err)
    }

    /// Returns `(accuracy_percent, rows)` with rows `(file, true, predicted, row, col, distance)`.
    #[pyo3(signature = (dir, labels = None, role = None))]
    #[allow(clippy::type_complexity)]
    fn evaluate(
        &self,
        py: Python<'_>,
        dir: PathBuf,
        labels: Option<PathBuf>,
        role: Option<String>,
    ) -> PyResult<(f64, Vec<(String, u8, u8, usize, usize, f64)>)> {
        let report = py
            .detach(|| {
                let images = dataset::load_labeled_dir(&dir, labels.as_deref(), role.as_deref())?;
                pipeline::run_evaluate(&self.0, &images)
            })
            .map_err(pipeline_err)?;
        let rows = report
            .rows
            .into_iter()
            .map(|r| {
                (
                    r.name,
                    r.truth.value(),
                    r.predicted.value(),
                    r.row,
                    r.col,
                    r.distance,
                )
            })
            .collect();
        Ok((report.accuracy, rows))
    }
}

/// Otsu threshold, or `None` for a single-intensity image.
#[pyfunction]
fn otsu_threshold(image: &PyGrayImage) -> PyResult<Option<u8>> {
    match otsu::otsu_threshold(&otsu::histogram(&image.0)) {
        Ok(t) => Ok(Some(t)),
        Err(OtsuError::DegenerateHistogram(_)) => Ok(None),
        Err(e) => Err(value_err(e)),
    }
}

/// 0/255 image with 255 where the pixel is above `threshold`.
#[pyfunction]
fn binarize(image: &PyGrayImage, threshold: u8) -> PyGrayImage {
    PyGrayImage(otsu::binarize(&image.0, threshold).to_gray())
}

/// Forward DFT of a square image.
#[pyfunction]
fn dft2(image: &PyGrayImage) -> PyResult<PySpectrum> {
    spectral::dft2(&image.0).map(PySpectrum).map_err(value_err)
}

/// Center-crops and resamples to `n x n`.
#[pyfunction]
fn prepare_square(image: &PyGrayImage, n: usize) -> PyResult<PyGrayImage> {
    spectral::prepare_square(&image.0, n)
        .map(PyGrayImage)
        .map_err(value_err)
}

/// The L2-normalized feature vector the pipeline feeds to the map.
#[pyfunction]
#[pyo3(signature = (image, config = None))]
fn feature_vector(image: &PyGrayImage, config: Option<PyRef<'_, PyConfig>>) -> PyResult<Vec<f64>> {
    pipeline::feature_vector(&image.0, &config_or_default(config))
        .map(|f| f.into_data())
        .map_err(pipeline_err)
}

/// Seam thickness over two fabric plies, percent growth.
#[pyfunction]
fn sp_thickness(seam_thickness: f64, fabric_thickness: f64) -> PyResult<f64> {
    metrics::sp_thickness(seam_thickness, fabric_thickness).map_err(value_err)
}

/// Unraveled over sewn length, percent growth.
#[pyfunction]
fn sp_length(unraveled_length: f64, sewn_length: f64) -> PyResult<f64> {
    metrics::sp_length(unraveled_length, sewn_length).map_err(value_err)
}

/// One synthetic obliquely-lit seam image.
#[pyfunction]
#[pyo3(signature = (grade, seed, size = 256))]
fn generate_sample(grade: u8, seed: u64, size: usize) -> PyResult<PyGrayImage> {
    let g = self::grade(grade)?;
    if size == 0 {
        return Err(value_err("size must be >= 1"));
    }
    Ok(PyGrayImage(synth::generate_sample(g, seed, size)))
}

/// Writes a labeled synthetic dataset (PNGs plus `labels.tsv`) to `out`.
#[pyfunction]
#[pyo3(signature = (out, train = 5, test = 21, seed = 42, size = 256))]
fn write_dataset(
    py: Python<'_>,
    out: PathBuf,
    train: usize,
    test: usize,
    seed: u64,
    size: usize,
) -> PyResult<()> {
    if size == 0 {
        return Err(value_err("size must be >= 1"));
    }
    let spec = DatasetSpec::from_totals(train, test, seed, size);
    py.detach(|| synth::generate_dataset(&spec).write_to(&out))
        .map_err(image_err)
}

#[pymodule]
pub fn puckergrade_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyClassification>()?;
    m.add_class::<PySomModel>()?;
    m.add_class::<PyTrainedModel>()?;
    m.add_function(wrap_pyfunction!(otsu_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(binarize, m)?)?;
    m.add_function(wrap_pyfunction!(dft2, m)?)?;
    m.add_function(wrap_pyfunction!(prepare_square, m)?)?;
    m.add_function(wrap_pyfunction!(feature_vector, m)?)?;
    m.add_function(wrap_pyfunction!(sp_thickness, m)?)?;
    m.add_function(wrap_pyfunction!(sp_length, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sample, m)?)?;
    m.add_function(wrap_pyfunction!(write_dataset, m)?)?;
    Ok(())
}
