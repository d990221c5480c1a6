//! Kohonen self-organizing map with a square neighborhood window and linearly
//! decaying learning step and radius.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const DEFAULT_ROWS: usize = 10;
pub const DEFAULT_COLS: usize = 10;
pub const DEFAULT_ALPHA0: f64 = 0.35;
/// Default iterations per training sample.
pub const DEFAULT_ITERATIONS_PER_SAMPLE: u64 = 200;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SomError {
    #[error("invalid map dimensions {rows}x{cols} with input dimension {dim}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("expected vectors of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("iteration {t} outside 0..={total}")]
    IterationOutOfRange { t: u64, total: u64 },
    #[error("invalid training schedule: {0}")]
    InvalidSchedule(String),
    #[error("learning step {0} outside [0, 1]")]
    InvalidLearningRate(f64),
    #[error("node ({row}, {col}) outside the map")]
    NodeOutOfRange { row: usize, col: usize },
    #[error("no training samples")]
    EmptyTrainingSet,
    #[error("no labeling prototypes")]
    EmptyPrototypes,
    #[error("model has unlabeled nodes; run label_nodes first")]
    UnlabeledModel,
    #[error("grade {0} outside 1..=5")]
    InvalidGrade(u8),
    #[error("unknown classify mode {0:?}")]
    UnknownMode(String),
}

/// Seam quality grade, 5 (best) down to 1 (worst).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grade(u8);

impl Grade {
    pub const ALL: [Grade; 5] = [Grade(1), Grade(2), Grade(3), Grade(4), Grade(5)];

    pub fn new(value: u8) -> Result<Self, SomError> {
        if (1..=5).contains(&value) {
            Ok(Grade(value))
        } else {
            Err(SomError::InvalidGrade(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based position, handy for 5-slot tables.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl TryFrom<u8> for Grade {
    type Error = SomError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Grade::new(value)
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How a labeled map picks the node whose grade is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassifyMode {
    /// Label of the best-matching unit (smallest Euclidean distance).
    #[default]
    BmuDistance,
    /// Label of the node with the largest scalar product with the input.
    DotProduct,
}

impl ClassifyMode {
    pub fn tag(self) -> u8 {
        match self {
            ClassifyMode::BmuDistance => 0,
            ClassifyMode::DotProduct => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ClassifyMode::BmuDistance),
            1 => Some(ClassifyMode::DotProduct),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifyMode::BmuDistance => "bmu-distance",
            ClassifyMode::DotProduct => "dot-product",
        }
    }
}

impl fmt::Display for ClassifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassifyMode {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bmu-distance" => Ok(ClassifyMode::BmuDistance),
            "dot-product" => Ok(ClassifyMode::DotProduct),
            other => Err(SomError::UnknownMode(other.to_string())),
        }
    }
}

/// Learning step `alpha0`, initial radius `d0` (grid cells) and total iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSchedule {
    alpha0: f64,
    d0: f64,
    iterations: u64,
}

impl TrainingSchedule {
    pub fn new(alpha0: f64, d0: f64, iterations: u64) -> Result<Self, SomError> {
        if !(0.0..=1.0).contains(&alpha0) {
            return Err(SomError::InvalidSchedule(format!(
                "alpha0 {alpha0} outside [0, 1]"
            )));
        }
        if !d0.is_finite() || d0 < 0.0 {
            return Err(SomError::InvalidSchedule(format!("d0 {d0} must be >= 0")));
        }
        if iterations == 0 {
            return Err(SomError::InvalidSchedule("iterations must be >= 1".into()));
        }
        Ok(Self {
            alpha0,
            d0,
            iterations,
        })
    }

    /// Three quarters of the half-span of the larger grid side, rounded up.
    pub fn default_radius(rows: usize, cols: usize) -> f64 {
        (0.75 * rows.max(cols) as f64 / 2.0).ceil()
    }

    pub fn default_for(rows: usize, cols: usize, num_samples: usize) -> Self {
        Self {
            alpha0: DEFAULT_ALPHA0,
            d0: Self::default_radius(rows, cols),
            iterations: DEFAULT_ITERATIONS_PER_SAMPLE * num_samples.max(1) as u64,
        }
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    fn decay(&self, t: u64) -> Result<f64, SomError> {
        if t > self.iterations {
            return Err(SomError::IterationOutOfRange {
                t,
                total: self.iterations,
            });
        }
        Ok(1.0 - t as f64 / self.iterations as f64)
    }

    /// `alpha0 * (1 - t/T)`.
    pub fn learning_rate(&self, t: u64) -> Result<f64, SomError> {
        Ok(self.alpha0 * self.decay(t)?)
    }

    /// `d0 * (1 - t/T)`.
    pub fn neighborhood_radius(&self, t: u64) -> Result<f64, SomError> {
        Ok(self.d0 * self.decay(t)?)
    }
}

/// Square-window membership: strictly inside `radius` on both axes, and the
/// winner is always a member even once the radius drops below one cell.
pub fn in_neighborhood(node: (usize, usize), winner: (usize, usize), radius: f64) -> bool {
    if node == winner {
        return true;
    }
    let dr = node.0.abs_diff(winner.0) as f64;
    let dc = node.1.abs_diff(winner.1) as f64;
    dr < radius && dc < radius
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bmu {
    pub row: usize,
    pub col: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub grade: Grade,
    pub row: usize,
    pub col: usize,
    /// Euclidean distance between the input and the chosen node.
    pub distance: f64,
    /// Scalar product between the input and the chosen node.
    pub score: f64,
    pub mode: ClassifyMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomModel {
    rows: usize,
    cols: usize,
    dim: usize,
    seed: u64,
    weights: Vec<f64>,
    labels: Vec<Option<Grade>>,
    mode: ClassifyMode,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SomModel {
    /// Fresh map with weights drawn uniformly from `[0, 1)` by a seeded generator.
    pub fn new(rows: usize, cols: usize, dim: usize, seed: u64) -> Result<Self, SomError> {
        if rows == 0 || cols == 0 || dim == 0 {
            return Err(SomError::InvalidDimensions { rows, cols, dim });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..rows * cols * dim)
            .map(|_| rng.random::<f64>())
            .collect();
        Ok(Self {
            rows,
            cols,
            dim,
            seed,
            weights,
            labels: vec![None; rows * cols],
            mode: ClassifyMode::default(),
        })
    }

    /// Reassembles a model from stored parts.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        dim: usize,
        seed: u64,
        weights: Vec<f64>,
        labels: Vec<Option<Grade>>,
        mode: ClassifyMode,
    ) -> Result<Self, SomError> {
        if rows == 0 || cols == 0 || dim == 0 {
            return Err(SomError::InvalidDimensions { rows, cols, dim });
        }
        if weights.len() != rows * cols * dim {
            return Err(SomError::DimensionMismatch {
                expected: rows * cols * dim,
                found: weights.len(),
            });
        }
        if labels.len() != rows * cols {
            return Err(SomError::DimensionMismatch {
                expected: rows * cols,
                found: labels.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            dim,
            seed,
            weights,
            labels,
            mode,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[Option<Grade>] {
        &self.labels
    }

    pub fn label(&self, row: usize, col: usize) -> Option<Grade> {
        self.labels[row * self.cols + col]
    }

    pub fn classify_mode(&self) -> ClassifyMode {
        self.mode
    }

    pub fn set_classify_mode(&mut self, mode: ClassifyMode) {
        self.mode = mode;
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    pub fn weight(&self, row: usize, col: usize) -> &[f64] {
        let i = (row * self.cols + col) * self.dim;
        &self.weights[i..i + self.dim]
    }

    fn node_weights(&self, node: usize) -> &[f64] {
        &self.weights[node * self.dim..(node + 1) * self.dim]
    }

    pub fn set_weight(&mut self, row: usize, col: usize, w: &[f64]) -> Result<(), SomError> {
        self.check_node(row, col)?;
        self.check_dim(w)?;
        let i = (row * self.cols + col) * self.dim;
        self.weights[i..i + self.dim].copy_from_slice(w);
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SomError> {
        if x.len() != self.dim {
            return Err(SomError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_node(&self, row: usize, col: usize) -> Result<(), SomError> {
        if row >= self.rows || col >= self.cols {
            return Err(SomError::NodeOutOfRange { row, col });
        }
        Ok(())
    }

    /// Node with the smallest Euclidean distance to `x`; ties go to the first
    /// node in row-major order.
    pub fn bmu(&self, x: &[f64]) -> Result<Bmu, SomError> {
        self.check_dim(x)?;
        let mut best = (0usize, f64::INFINITY);
        for node in 0..self.node_count() {
            let w = self.node_weights(node);
            // Partial sums only grow, so a node can be dropped as soon as it
            // is strictly worse than the incumbent.
            let mut acc = 0.0;
            let mut pruned = false;
            for (chunk_x, chunk_w) in x.chunks(64).zip(w.chunks(64)) {
                acc += squared_distance(chunk_x, chunk_w);
                if acc > best.1 {
                    pruned = true;
                    break;
                }
            }
            if !pruned && acc < best.1 {
                best = (node, acc);
            }
        }
        Ok(Bmu {
            row: best.0 / self.cols,
            col: best.0 % self.cols,
            distance: best.1.sqrt(),
        })
    }

    /// Moves every node inside the window around `winner` toward `x`:
    /// `w <- (1 - alpha) w + alpha x`. Nodes outside the window are untouched.
    pub fn update(
        &mut self,
        x: &[f64],
        winner: (usize, usize),
        alpha: f64,
        radius: f64,
    ) -> Result<(), SomError> {
        self.check_dim(x)?;
        self.check_node(winner.0, winner.1)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SomError::InvalidLearningRate(alpha));
        }
        let keep = 1.0 - alpha;
        for r in 0..self.rows {
            for c in 0..self.cols {
                if !in_neighborhood((r, c), winner, radius) {
                    continue;
                }
                let i = (r * self.cols + c) * self.dim;
                for (w, &xj) in self.weights[i..i + self.dim].iter_mut().zip(x) {
                    *w = keep * *w + alpha * xj;
                }
            }
        }
        Ok(())
    }

    /// Presents samples in fixed cyclic order for `schedule.iterations()` steps.
    pub fn train<S: AsRef<[f64]>>(
        &mut self,
        samples: &[S],
        schedule: &TrainingSchedule,
    ) -> Result<(), SomError> {
        if samples.is_empty() {
            return Err(SomError::EmptyTrainingSet);
        }
        for s in samples {
            self.check_dim(s.as_ref())?;
        }
        for t in 0..schedule.iterations() {
            let x = samples[(t % samples.len() as u64) as usize].as_ref();
            let alpha = schedule.learning_rate(t)?;
            let radius = schedule.neighborhood_radius(t)?;
            let win = self.bmu(x)?;
            self.update(x, (win.row, win.col), alpha, radius)?;
        }
        Ok(())
    }

    /// Gives every node the grade of its nearest prototype; ties go to the
    /// earliest prototype.
    pub fn label_nodes<S: AsRef<[f64]>>(
        &mut self,
        prototypes: &[(S, Grade)],
    ) -> Result<(), SomError> {
        if prototypes.is_empty() {
            return Err(SomError::EmptyPrototypes);
        }
        for (p, _) in prototypes {
            self.check_dim(p.as_ref())?;
        }
        let labels = (0..self.node_count())
            .map(|node| {
                let w = self.node_weights(node);
                let mut best = (prototypes[0].1, f64::INFINITY);
                for (p, grade) in prototypes {
                    let d = squared_distance(w, p.as_ref());
                    if d < best.1 {
                        best = (*grade, d);
                    }
                }
                Some(best.0)
            })
            .collect();
        self.labels = labels;
        Ok(())
    }

    /// Classifies with the model's stored mode.
    pub fn classify(&self, x: &[f64]) -> Result<Classification, SomError> {
        self.classify_with(x, self.mode)
    }

    pub fn classify_with(&self, x: &[f64], mode: ClassifyMode) -> Result<Classification, SomError> {
        self.check_dim(x)?;
        if !self.is_labeled() {
            return Err(SomError::UnlabeledModel);
        }
        let node = match mode {
            ClassifyMode::BmuDistance => {
                let b = self.bmu(x)?;
                b.row * self.cols + b.col
            }
            ClassifyMode::DotProduct => {
                let mut best = (0usize, f64::NEG_INFINITY);
                for node in 0..self.node_count() {
                    let s = dot(x, self.node_weights(node));
                    if s > best.1 {
                        best = (node, s);
                    }
                }
                best.0
            }
        };
        let w = self.node_weights(node);
        Ok(Classification {
            grade: self.labels[node].ok_or(SomError::UnlabeledModel)?,
            row: node / self.cols,
            col: node % self.cols,
            distance: squared_distance(x, w).sqrt(),
            score: dot(x, w),
            mode,
        })
    }

    /// Mean distance from each sample to its best-matching unit.
    pub fn quantization_error<S: AsRef<[f64]>>(&self, samples: &[S]) -> Result<f64, SomError> {
        if samples.is_empty() {
            return Err(SomError::EmptyTrainingSet);
        }
        let mut total = 0.0;
        for s in samples {
            total += self.bmu(s.as_ref())?.distance;
        }
        Ok(total / samples.len() as f64)
    }
}
