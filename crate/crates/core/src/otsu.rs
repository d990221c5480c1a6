//! Global threshold selection by minimizing the weighted within-class variance.
//!
//! Class 1 holds intensities `0..=t`, class 2 holds `t+1..=255`, so valid
//! thresholds are `0..=254`. An empty class has mean and variance 0; its
//! weight is 0 as well, so the weighted sum is unaffected.

use thiserror::Error;

use crate::image::GrayImage;

pub const LEVELS: usize = 256;
pub const MAX_THRESHOLD: usize = LEVELS - 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OtsuError {
    #[error("threshold {0} outside 0..=254")]
    InvalidThreshold(usize),
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("all pixels share intensity {0}; no two classes exist")]
    DegenerateHistogram(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; LEVELS],
    total: u64,
}

impl Histogram {
    pub fn from_bins(bins: [u64; LEVELS]) -> Result<Self, OtsuError> {
        let total = bins.iter().sum();
        if total == 0 {
            return Err(OtsuError::EmptyHistogram);
        }
        Ok(Self { bins, total })
    }

    pub fn bins(&self) -> &[u64; LEVELS] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probability(&self, level: usize) -> f64 {
        self.bins[level] as f64 / self.total as f64
    }

    pub fn probabilities(&self) -> [f64; LEVELS] {
        std::array::from_fn(|i| self.probability(i))
    }

    /// Mean and variance of the whole distribution.
    pub fn moments(&self) -> (f64, f64) {
        let p = self.probabilities();
        let mean: f64 = p.iter().enumerate().map(|(i, &pi)| i as f64 * pi).sum();
        let var = p
            .iter()
            .enumerate()
            .map(|(i, &pi)| (i as f64 - mean).powi(2) * pi)
            .sum();
        (mean, var)
    }
}

pub fn histogram(img: &GrayImage) -> Histogram {
    let mut bins = [0u64; LEVELS];
    for &v in img.pixels() {
        bins[v as usize] += 1;
    }
    Histogram {
        bins,
        total: img.pixels().len() as u64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub threshold: u8,
    pub w1: f64,
    pub w2: f64,
    pub m1: f64,
    pub m2: f64,
    pub s1sq: f64,
    pub s2sq: f64,
}

impl ClassStats {
    pub fn within_class_variance(&self) -> f64 {
        self.w1 * self.s1sq + self.w2 * self.s2sq
    }

    pub fn between_class_variance(&self) -> f64 {
        self.w1 * self.w2 * (self.m1 - self.m2).powi(2)
    }
}

/// Weight, mean and variance of the levels in `range`, with the empty-class convention.
fn class_moments(p: &[f64; LEVELS], range: std::ops::Range<usize>) -> (f64, f64, f64) {
    let w: f64 = p[range.clone()].iter().sum();
    if w <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let m: f64 = range.clone().map(|i| i as f64 * p[i] / w).sum();
    let s: f64 = range.map(|i| (i as f64 - m).powi(2) * p[i] / w).sum();
    (w, m, s)
}

pub fn class_stats(h: &Histogram, t: usize) -> Result<ClassStats, OtsuError> {
    if t > MAX_THRESHOLD {
        return Err(OtsuError::InvalidThreshold(t));
    }
    let p = h.probabilities();
    let (w1, m1, s1sq) = class_moments(&p, 0..t + 1);
    let (w2, m2, s2sq) = class_moments(&p, t + 1..LEVELS);
    Ok(ClassStats {
        threshold: t as u8,
        w1,
        w2,
        m1,
        m2,
        s1sq,
        s2sq,
    })
}

pub fn within_class_variance(h: &Histogram, t: usize) -> Result<f64, OtsuError> {
    class_stats(h, t).map(|s| s.within_class_variance())
}

pub fn between_class_variance(h: &Histogram, t: usize) -> Result<f64, OtsuError> {
    class_stats(h, t).map(|s| s.between_class_variance())
}

/// Threshold minimizing the within-class variance; ties go to the smallest `t`.
pub fn otsu_threshold(h: &Histogram) -> Result<u8, OtsuError> {
    let occupied: Vec<usize> = (0..LEVELS).filter(|&i| h.bins[i] > 0).collect();
    match occupied.as_slice() {
        [] => return Err(OtsuError::EmptyHistogram),
        [only] => return Err(OtsuError::DegenerateHistogram(*only as u8)),
        _ => {}
    }
    let mut best = (0usize, f64::INFINITY);
    for t in 0..=MAX_THRESHOLD {
        let v = within_class_variance(h, t)?;
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(best.0 as u8)
}

/// Row-major boolean mask; `true` marks pixels brighter than the threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 0/255 rendering, suitable for writing as P5.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, pixels).expect("dimensions carried over")
    }
}

pub fn binarize(img: &GrayImage, t: u8) -> BinaryImage {
    BinaryImage {
        width: img.width(),
        height: img.height(),
        bits: img.pixels().iter().map(|&v| v > t).collect(),
    }
}
