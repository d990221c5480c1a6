//! Deterministic synthetic seam images.
//!
//! A horizontal seam is sewn through a fabric whose surface is a sum of
//! sinusoidal wrinkles running roughly along the seam. The surface is shaded
//! with a Lambertian model under a low directional light from the left, so
//! wrinkle slopes show up as light and shadow bands. Wrinkle amplitude scales
//! linearly with severity: grade 5 is flat, grade 1 is the deepest. Severe
//! puckers are also longer: the wrinkle wavelength band shortens by a fixed
//! ratio per grade, which gives each grade its own spectral footprint. Slopes
//! shrink with frequency so shading contrast still falls with every grade, and
//! stay mostly below the light elevation so little of the surface is in full
//! shadow.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::{self, GrayImage, ImageError};
use crate::pipeline::dataset::{write_labels, LabeledImage};
use crate::som::Grade;

/// Sinusoid components per wrinkle field.
pub const COMPONENTS: usize = 4;
/// Largest deviation of a wrinkle's wave vector from the seam axis.
pub const MAX_ORIENTATION_DEG: f64 = 20.0;
/// Light elevation above the fabric plane.
pub const LIGHT_ELEVATION_DEG: f64 = 30.0;
/// Standard deviation of the additive pixel noise, in intensity levels.
pub const NOISE_SIGMA: f64 = 2.0;
/// Peak surface slope of a single grade-1 component at the base frequency.
pub const MAX_SLOPE: f64 = 0.2;
/// Wrinkle frequency of grade 1, in cycles per image side.
pub const BASE_CYCLES: f64 = 4.0;
/// Frequency growth from one grade to the next milder one.
pub const CYCLE_RATIO: f64 = 1.4;
/// Relative spread of component frequencies around the grade's band center.
pub const CYCLE_JITTER: f64 = 0.08;

const SHADE_BASE: f64 = 40.0;
const SHADE_GAIN: f64 = 180.0;
const SEAM_DARKENING: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrinkleComponent {
    /// Height amplitude in pixel units.
    pub amplitude: f64,
    /// Cycles per image side.
    pub frequency: f64,
    pub phase: f64,
    /// Angle of the wave vector from the horizontal, radians.
    pub orientation: f64,
}

/// Height field built from a handful of sinusoids.
#[derive(Debug, Clone, PartialEq)]
pub struct WrinkleField {
    size: usize,
    components: Vec<WrinkleComponent>,
}

impl WrinkleField {
    pub fn random(grade: Grade, size: usize, rng: &mut impl Rng) -> Self {
        let scale = amplitude_scale(grade);
        let center = band_cycles(grade);
        let max_theta = MAX_ORIENTATION_DEG.to_radians();
        let components = (0..COMPONENTS)
            .map(|_| {
                let frequency = center * rng.random_range(1.0 - CYCLE_JITTER..=1.0 + CYCLE_JITTER);
                let orientation = rng.random_range(-max_theta..=max_theta);
                let phase = rng.random_range(0.0..2.0 * PI);
                let weight = rng.random_range(0.6..=1.0);
                // Peak slope `scale * weight * BASE_CYCLES / frequency`, so the
                // shading contrast (slope times frequency) follows `scale` alone.
                let slope = scale * weight * BASE_CYCLES / frequency;
                let amplitude = slope * size as f64 / (2.0 * PI * frequency);
                WrinkleComponent {
                    amplitude,
                    frequency,
                    phase,
                    orientation,
                }
            })
            .collect();
        Self { size, components }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn components(&self) -> &[WrinkleComponent] {
        &self.components
    }

    /// Height and its analytic gradient `(h, dh/dx, dh/dy)` at pixel `(x, y)`.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let mut h = 0.0;
        let mut hx = 0.0;
        let mut hy = 0.0;
        for c in &self.components {
            let k = 2.0 * PI * c.frequency / self.size as f64;
            let (kx, ky) = (k * c.orientation.cos(), k * c.orientation.sin());
            let (s, co) = (kx * x + ky * y + c.phase).sin_cos();
            h += c.amplitude * s;
            hx += c.amplitude * kx * co;
            hy += c.amplitude * ky * co;
        }
        (h, hx, hy)
    }

    pub fn heights(&self) -> Vec<f64> {
        let n = self.size;
        (0..n * n)
            .map(|i| self.sample((i % n) as f64, (i / n) as f64).0)
            .collect()
    }
}

/// Peak slope multiplier for a grade: 0 at grade 5 up to [`MAX_SLOPE`] at grade 1.
pub fn amplitude_scale(grade: Grade) -> f64 {
    MAX_SLOPE * (5 - grade.value()) as f64 / 4.0
}

/// Center of the wrinkle frequency band for a grade, in cycles per image side.
pub fn band_cycles(grade: Grade) -> f64 {
    BASE_CYCLES * CYCLE_RATIO.powi(grade.value() as i32 - 1)
}

/// Half-height of the darkened seam band, in rows.
pub fn seam_half_width(size: usize) -> usize {
    (size / 64).max(1)
}

/// Whether row `y` is clear of the seam band (with a two-row margin).
pub fn is_off_band(y: usize, size: usize) -> bool {
    let center = size / 2;
    y.abs_diff(center) > seam_half_width(size) + 2
}

/// Renders one sample. All randomness comes from `seed`.
pub fn generate_sample(grade: Grade, seed: u64, size: usize) -> GrayImage {
    assert!(size >= 1, "sample size must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = WrinkleField::random(grade, size, &mut rng);
    render(&field, &mut rng)
}

fn render(field: &WrinkleField, rng: &mut impl Rng) -> GrayImage {
    let size = field.size();
    let elev = LIGHT_ELEVATION_DEG.to_radians();
    // Unit vector toward the light, which sits low on the left.
    let light = (-elev.cos(), 0.0, elev.sin());
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("positive sigma");
    let center = size / 2;
    let half = seam_half_width(size);
    GrayImage::from_fn(size, size, |x, y| {
        let (_, hx, hy) = field.sample(x as f64, y as f64);
        let norm = (1.0 + hx * hx + hy * hy).sqrt();
        let normal = (-hx / norm, -hy / norm, 1.0 / norm);
        let lambert = (normal.0 * light.0 + normal.1 * light.1 + normal.2 * light.2).max(0.0);
        let mut v = SHADE_BASE + SHADE_GAIN * lambert;
        if y.abs_diff(center) <= half {
            v *= SEAM_DARKENING;
        }
        v += noise.sample(rng);
        v.round().clamp(0.0, 255.0) as u8
    })
}

/// Mean central-difference gradient magnitude over rows clear of the seam band.
pub fn off_band_gradient(img: &GrayImage) -> f64 {
    let (w, h) = (img.width(), img.height());
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in 1..h.saturating_sub(1) {
        if !(is_off_band(y - 1, h) && is_off_band(y, h) && is_off_band(y + 1, h)) {
            continue;
        }
        for x in 1..w.saturating_sub(1) {
            let gx = (img.get(x + 1, y) as f64 - img.get(x - 1, y) as f64) / 2.0;
            let gy = (img.get(x, y + 1) as f64 - img.get(x, y - 1) as f64) / 2.0;
            sum += (gx * gx + gy * gy).sqrt();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Standard deviation of the pixels clear of the seam band.
pub fn off_band_std(img: &GrayImage) -> f64 {
    let h = img.height();
    let vals: Vec<f64> = (0..h)
        .filter(|&y| is_off_band(y, h))
        .flat_map(|y| img.row(y).iter().map(|&v| v as f64))
        .collect();
    if vals.is_empty() {
        return 0.0;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Train,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Test => "test",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Role::Train => 1,
            Role::Test => 2,
        }
    }
}

/// Per-grade sample counts plus the master seed and image size.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub train_per_grade: [usize; 5],
    pub test_per_grade: [usize; 5],
    pub seed: u64,
    pub size: usize,
}

impl DatasetSpec {
    /// Spreads totals over the grades as evenly as possible; leftovers go to
    /// the worst grades first.
    pub fn from_totals(train: usize, test: usize, seed: u64, size: usize) -> Self {
        let spread = |total: usize| std::array::from_fn(|i| total / 5 + usize::from(i < total % 5));
        Self {
            train_per_grade: spread(train),
            test_per_grade: spread(test),
            seed,
            size,
        }
    }

    pub fn total(&self) -> usize {
        self.train_per_grade
            .iter()
            .chain(&self.test_per_grade)
            .sum()
    }
}

/// Seed of one sample, drawn from its own ChaCha stream keyed by
/// `(role, grade, index)` so no two samples share randomness.
pub fn sample_seed(master: u64, role: Role, grade: Grade, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(role.stream_tag() << 56 | (grade.value() as u64) << 48 | index as u64);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub name: String,
    pub grade: Grade,
    pub role: Role,
    pub image: GrayImage,
}

impl SyntheticSample {
    pub fn to_labeled(&self) -> LabeledImage {
        LabeledImage {
            name: self.name.clone(),
            grade: self.grade,
            image: self.image.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<SyntheticSample>,
    pub test: Vec<SyntheticSample>,
}

impl Dataset {
    pub fn train_labeled(&self) -> Vec<LabeledImage> {
        self.train.iter().map(SyntheticSample::to_labeled).collect()
    }

    pub fn test_labeled(&self) -> Vec<LabeledImage> {
        self.test.iter().map(SyntheticSample::to_labeled).collect()
    }

    pub fn samples(&self) -> impl Iterator<Item = &SyntheticSample> {
        self.train.iter().chain(&self.test)
    }

    /// Writes every sample as PNG plus a `labels.tsv` manifest into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<(), ImageError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for s in self.samples() {
            image::save_png(&s.image, dir.join(&s.name))?;
        }
        let entries: Vec<(String, Grade)> =
            self.samples().map(|s| (s.name.clone(), s.grade)).collect();
        fs::write(dir.join("labels.tsv"), write_labels(&entries))?;
        Ok(())
    }
}

fn generate_role(spec: &DatasetSpec, role: Role, counts: &[usize; 5]) -> Vec<SyntheticSample> {
    Grade::ALL
        .iter()
        .flat_map(|&grade| {
            (0..counts[grade.index()]).map(move |idx| {
                let seed = sample_seed(spec.seed, role, grade, idx);
                SyntheticSample {
                    name: format!("g{}_{}_{}.png", grade, role.as_str(), idx),
                    grade,
                    role,
                    image: generate_sample(grade, seed, spec.size),
                }
            })
        })
        .collect()
}

pub fn generate_dataset(spec: &DatasetSpec) -> Dataset {
    Dataset {
        train: generate_role(spec, Role::Train, &spec.train_per_grade),
        test: generate_role(spec, Role::Test, &spec.test_per_grade),
    }
}
