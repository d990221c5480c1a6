//! Two-dimensional DFT, amplitude/phase maps and spectral feature vectors.
//!
//! The forward transform carries the full `1/N²` prefactor (split as `1/N`
//! per separable pass) and the inverse carries none, so `idft2(dft2(f)) == f`.
//! Under this convention `F(0,0)` is the mean gray level of the image.
//!
//! Spectra are indexed `F(k, l)` with `k` the vertical (row) frequency and `l`
//! the horizontal (column) frequency, stored row-major.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::image::GrayImage;

/// Default side length images are squared and resampled to before transforming.
pub const DEFAULT_TRANSFORM_SIZE: usize = 256;
/// Default side of the down-sampled amplitude grid fed to the map.
pub const DEFAULT_FEATURE_SIDE: usize = 100;

/// Feature vectors with an L2 norm below this are treated as all-zero.
const DEGENERATE_NORM: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("image is {width}x{height}; the transform needs a square image")]
    NotSquare { width: usize, height: usize },
    #[error("spectrum convention {0:?} cannot be inverted without a prefactor")]
    ConventionMismatch(Convention),
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("feature vector is all-zero before normalization")]
    DegenerateFeature,
    #[error("malformed feature file: {0}")]
    MalformedFeatures(String),
}

/// Normalization convention a spectrum was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `1/N²` on the forward transform, none on the inverse.
    ForwardNormalized,
    /// No prefactor anywhere (e.g. an externally supplied raw DFT).
    Unnormalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    values: Vec<Complex64>,
    convention: Convention,
}

impl Spectrum {
    pub fn from_parts(
        n: usize,
        values: Vec<Complex64>,
        convention: Convention,
    ) -> Result<Self, SpectralError> {
        if n == 0 || values.len() != n * n {
            return Err(SpectralError::InvalidSize(format!(
                "{} values for a {n}x{n} spectrum",
                values.len()
            )));
        }
        Ok(Self {
            n,
            values,
            convention,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.values[k * self.n + l]
    }
}

/// Intermediate of the separable transform: `P(k, x)`, the 1D transform of
/// every column, indexed by vertical frequency `k` and column `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowTransform {
    n: usize,
    values: Vec<Complex64>,
}

impl RowTransform {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, x: usize) -> Complex64 {
        self.values[k * self.n + x]
    }
}

/// Square row-major grid of reals (amplitude or phase maps).
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMap {
    n: usize,
    values: Vec<f64>,
}

impl SquareMap {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, SpectralError> {
        if n == 0 || values.len() != n * n {
            return Err(SpectralError::InvalidSize(format!(
                "{} values for a {n}x{n} map",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    /// Rotates both axes by `n/2` so the zero frequency lands at `(n/2, n/2)`.
    pub fn centered(&self) -> SquareMap {
        let n = self.n;
        let half = n / 2;
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            let dst_r = (r + half) % n;
            for c in 0..n {
                out[dst_r * n + (c + half) % n] = self.values[r * n + c];
            }
        }
        SquareMap { n, values: out }
    }
}

/// Output of the inverse transform; real for spectra of real images up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    n: usize,
    values: Vec<Complex64>,
}

impl SpatialField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }
}

/// Center-crops to the largest square, then area-resamples to `n x n`.
pub fn prepare_square(img: &GrayImage, n: usize) -> Result<GrayImage, SpectralError> {
    if n == 0 {
        return Err(SpectralError::InvalidSize(
            "target size must be >= 1".into(),
        ));
    }
    let s = img.width().min(img.height());
    let x0 = (img.width() - s) / 2;
    let y0 = (img.height() - s) / 2;
    if s == n {
        return Ok(GrayImage::from_fn(n, n, |x, y| img.get(x0 + x, y0 + y)));
    }
    // Coverage of source cells [i, i+1) by the output cell [a, b), both in source units.
    let spans: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|o| {
            let a = o as f64 * s as f64 / n as f64;
            let b = (o + 1) as f64 * s as f64 / n as f64;
            let first = a.floor() as usize;
            let last = (b.ceil() as usize).min(s);
            (first..last)
                .filter_map(|i| {
                    let w = (b.min(i as f64 + 1.0) - a.max(i as f64)) / (b - a);
                    (w > 0.0).then_some((i, w))
                })
                .collect()
        })
        .collect();
    Ok(GrayImage::from_fn(n, n, |x, y| {
        let mut acc = 0.0;
        for &(sy, wy) in &spans[y] {
            for &(sx, wx) in &spans[x] {
                acc += wy * wx * img.get(x0 + sx, y0 + sy) as f64;
            }
        }
        acc.round().clamp(0.0, 255.0) as u8
    }))
}

fn require_square(img: &GrayImage) -> Result<usize, SpectralError> {
    if !img.is_square() {
        return Err(SpectralError::NotSquare {
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(img.width())
}

/// `exp(sign * i 2 pi j / n)` for `j in 0..n`.
fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| {
            let (s, c) = (sign * 2.0 * PI * j as f64 / n as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

/// Direct evaluation of the double sum, `O(N⁴)`. Kept as the reference the
/// separable transform is checked against.
pub fn dft2_naive(img: &GrayImage) -> Result<Spectrum, SpectralError> {
    let n = require_square(img)?;
    let nf = n as f64;
    let mut values = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                for x in 0..n {
                    let angle = -2.0 * PI * ((k * m) as f64 / nf + (l * x) as f64 / nf);
                    acc += Complex64::from_polar(img.get(x, m) as f64, angle);
                }
            }
            values.push(acc / (nf * nf));
        }
    }
    Spectrum::from_parts(n, values, Convention::ForwardNormalized)
}

/// First separable pass: a 1/N-scaled 1D DFT down every column.
pub fn column_pass(img: &GrayImage) -> Result<RowTransform, SpectralError> {
    let n = require_square(img)?;
    let tw = twiddles(n, -1.0);
    let nf = n as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(k, out)| {
        for m in 0..n {
            let w = tw[(k * m) % n];
            for (acc, &f) in out.iter_mut().zip(img.row(m)) {
                *acc += w * f as f64;
            }
        }
        for v in out.iter_mut() {
            *v /= nf;
        }
    });
    Ok(RowTransform { n, values })
}

/// Second separable pass: a 1/N-scaled 1D DFT along every row of `P`.
pub fn row_pass(p: &RowTransform) -> Spectrum {
    let n = p.n;
    let tw = twiddles(n, -1.0);
    let nf = n as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values
        .par_chunks_mut(n)
        .zip(p.values.par_chunks(n))
        .for_each(|(out, src)| {
            for (l, dst) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, &v) in src.iter().enumerate() {
                    acc += v * tw[(l * x) % n];
                }
                *dst = acc / nf;
            }
        });
    Spectrum {
        n,
        values,
        convention: Convention::ForwardNormalized,
    }
}

/// Separable forward transform, `O(N³)`.
pub fn dft2(img: &GrayImage) -> Result<Spectrum, SpectralError> {
    Ok(row_pass(&column_pass(img)?))
}

/// Inverse transform without prefactor; exact inverse of [`dft2`].
pub fn idft2(spec: &Spectrum) -> Result<SpatialField, SpectralError> {
    if spec.convention != Convention::ForwardNormalized {
        return Err(SpectralError::ConventionMismatch(spec.convention));
    }
    let n = spec.n;
    let tw = twiddles(n, 1.0);
    // Along rows: Q(k, x) = sum_l F(k, l) e^{+i 2 pi l x / N}
    let mut q = vec![Complex64::new(0.0, 0.0); n * n];
    q.par_chunks_mut(n)
        .zip(spec.values.par_chunks(n))
        .for_each(|(out, src)| {
            for (x, dst) in out.iter_mut().enumerate() {
                *dst = src
                    .iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (l, &v)| {
                        acc + v * tw[(l * x) % n]
                    });
            }
        });
    // Down columns: f(m, x) = sum_k Q(k, x) e^{+i 2 pi k m / N}
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(m, out)| {
        for k in 0..n {
            let w = tw[(k * m) % n];
            for (acc, &v) in out.iter_mut().zip(&q[k * n..(k + 1) * n]) {
                *acc += v * w;
            }
        }
    });
    Ok(SpatialField { n, values })
}

pub fn amplitude(spec: &Spectrum) -> SquareMap {
    SquareMap {
        n: spec.n,
        values: spec.values.iter().map(|c| c.norm()).collect(),
    }
}

/// Argument of every bin in `(-pi, pi]`; a zero bin has phase 0.
pub fn phase(spec: &Spectrum) -> SquareMap {
    let values = spec
        .values
        .iter()
        .map(|c| {
            if c.re == 0.0 && c.im == 0.0 {
                0.0
            } else {
                let a = c.im.atan2(c.re);
                if a <= -PI {
                    PI
                } else {
                    a
                }
            }
        })
        .collect();
    SquareMap { n: spec.n, values }
}

fn rescale_to_gray(n: usize, values: &[f64], lo: f64, hi: f64) -> GrayImage {
    let span = hi - lo;
    let pixels = values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    GrayImage::new(n, n, pixels).expect("square map is non-empty")
}

/// Display rendering of an amplitude map: DC centered, `log(1 + v)`, stretched to 0..=255.
pub fn spectrum_image(amps: &SquareMap) -> GrayImage {
    let shifted = amps.centered();
    let logs: Vec<f64> = shifted.values.iter().map(|v| v.ln_1p()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rescale_to_gray(amps.n, &logs, lo, hi)
}

/// Display rendering of a phase map: DC centered, `[-pi, pi]` mapped linearly onto 0..=255.
pub fn phase_image(phases: &SquareMap) -> GrayImage {
    let shifted = phases.centered();
    rescale_to_gray(phases.n, &shifted.values, -PI, PI)
}

/// L2-normalized, down-sampled amplitude map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    side: usize,
    data: Vec<f64>,
}

impl FeatureVector {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `u32` side (little-endian) followed by `side²` little-endian `f64`s.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.data.len());
        out.extend_from_slice(&(self.side as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SpectralError> {
        let malformed = |m: String| SpectralError::MalformedFeatures(m);
        let head: [u8; 4] = bytes
            .get(..4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| malformed("missing side length".into()))?;
        let side = u32::from_le_bytes(head) as usize;
        let body = &bytes[4..];
        if side == 0 || body.len() != side * side * 8 {
            return Err(malformed(format!(
                "side {side} needs {} payload bytes, found {}",
                side * side * 8,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self { side, data })
    }
}

/// Edges of `side` contiguous blocks covering `0..n`; the last `n % side`
/// blocks are one element longer than the rest.
pub fn block_edges(n: usize, side: usize) -> Vec<usize> {
    let base = n / side;
    let short = side - n % side;
    (0..=side)
        .map(|b| b * base + b.saturating_sub(short))
        .collect()
}

/// Centers the amplitude map, optionally zeroes DC, averages `side x side`
/// blocks and L2-normalizes the result.
pub fn extract_features(
    amps: &SquareMap,
    side: usize,
    include_dc: bool,
) -> Result<FeatureVector, SpectralError> {
    let n = amps.n;
    if side == 0 || side > n {
        return Err(SpectralError::InvalidSize(format!(
            "feature side {side} must be in 1..={n}"
        )));
    }
    let mut centered = amps.centered();
    if !include_dc {
        let dc = n / 2;
        centered.values[dc * n + dc] = 0.0;
    }
    let edges = block_edges(n, side);
    let mut data = Vec::with_capacity(side * side);
    for by in 0..side {
        let (r0, r1) = (edges[by], edges[by + 1]);
        for bx in 0..side {
            let (c0, c1) = (edges[bx], edges[bx + 1]);
            let mut sum = 0.0;
            for r in r0..r1 {
                sum += centered.values[r * n + c0..r * n + c1].iter().sum::<f64>();
            }
            data.push(sum / ((r1 - r0) * (c1 - c0)) as f64);
        }
    }
    let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_NORM {
        return Err(SpectralError::DegenerateFeature);
    }
    data.iter_mut().for_each(|v| *v /= norm);
    Ok(FeatureVector { side, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn square_identity_and_constant() {
        let img = GrayImage::from_fn(8, 8, |x, y| (x * 31 + y * 7) as u8);
        assert_eq!(prepare_square(&img, 8).unwrap(), img);
        let flat = GrayImage::filled(13, 9, 77);
        assert_eq!(
            prepare_square(&flat, 5).unwrap(),
            GrayImage::filled(5, 5, 77)
        );
        assert_eq!(
            prepare_square(&flat, 32).unwrap(),
            GrayImage::filled(32, 32, 77)
        );
    }

    #[test]
    fn square_crops_center() {
        // 4 wide, 2 high: the center crop is columns 1..3.
        let img = GrayImage::new(4, 2, vec![1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        assert_eq!(prepare_square(&img, 2).unwrap().pixels(), &[2, 3, 6, 7]);
    }

    #[test]
    fn square_halving_averages_blocks() {
        let img = GrayImage::new(2, 2, vec![10, 20, 30, 40]).unwrap();
        assert_eq!(prepare_square(&img, 1).unwrap().pixels(), &[25]);
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let img = GrayImage::from_fn(4, 4, |x, y| u8::from(x == 0 && y == 0));
        for spec in [dft2(&img).unwrap(), dft2_naive(&img).unwrap()] {
            for v in spec.values() {
                assert_close(v.re, 1.0 / 16.0, 1e-15);
                assert_close(v.im, 0.0, 1e-15);
            }
        }
    }

    #[test]
    fn single_pixel_transform() {
        let img = GrayImage::filled(1, 1, 200);
        let spec = dft2(&img).unwrap();
        assert_eq!(spec.values(), &[Complex64::new(200.0, 0.0)]);
    }

    #[test]
    fn not_square() {
        let img = GrayImage::filled(3, 2, 0);
        assert_eq!(
            dft2(&img).unwrap_err(),
            SpectralError::NotSquare {
                width: 3,
                height: 2
            }
        );
    }

    #[test]
    fn inverse_rejects_foreign_convention() {
        let spec =
            Spectrum::from_parts(1, vec![Complex64::new(1.0, 0.0)], Convention::Unnormalized)
                .unwrap();
        assert_eq!(
            idft2(&spec).unwrap_err(),
            SpectralError::ConventionMismatch(Convention::Unnormalized)
        );
    }

    #[test]
    fn inverse_of_dc_only_and_zero() {
        let mut values = vec![Complex64::new(0.0, 0.0); 16];
        values[0] = Complex64::new(3.5, 0.0);
        let field = idft2(&Spectrum::from_parts(4, values, Convention::ForwardNormalized).unwrap())
            .unwrap();
        assert!(field.real().iter().all(|&v| v == 3.5));
        assert_eq!(field.max_imaginary(), 0.0);

        let zero = Spectrum::from_parts(
            4,
            vec![Complex64::new(0.0, 0.0); 16],
            Convention::ForwardNormalized,
        )
        .unwrap();
        assert!(idft2(&zero).unwrap().real().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn amplitude_and_phase_of_345() {
        let spec = Spectrum::from_parts(
            2,
            vec![
                Complex64::new(3.0, 4.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, -0.0),
                Complex64::new(-1.0, 0.0),
            ],
            Convention::ForwardNormalized,
        )
        .unwrap();
        let amps = amplitude(&spec);
        let phases = phase(&spec);
        assert_eq!(amps.values()[0], 5.0);
        assert_eq!(phases.values()[0], 4f64.atan2(3.0));
        assert_eq!((amps.values()[1], phases.values()[1]), (0.0, 0.0));
        assert_eq!(phases.values()[2], PI);
        assert_eq!(phases.values()[3], PI);
    }

    #[test]
    fn constant_spectrum_image_is_single_bright_center() {
        let spec = dft2(&GrayImage::filled(6, 6, 120)).unwrap();
        let disp = spectrum_image(&amplitude(&spec));
        for y in 0..6 {
            for x in 0..6 {
                let expected = if (x, y) == (3, 3) { 255 } else { 0 };
                assert_eq!(disp.get(x, y), expected);
            }
        }
        let flat = SquareMap::new(3, vec![2.0; 9]).unwrap();
        assert!(spectrum_image(&flat).pixels().iter().all(|&p| p == 0));
    }

    #[test]
    fn horizontal_stripes_peak_on_vertical_axis() {
        // Intensity varies with the row only: 4 cycles down a 32-pixel image.
        let n = 32;
        let img = GrayImage::from_fn(n, n, |_, y| {
            (128.0 + 100.0 * (2.0 * PI * 4.0 * y as f64 / n as f64).cos()).round() as u8
        });
        let disp = spectrum_image(&amplitude(&dft2(&img).unwrap()));
        let c = n / 2;
        let mut ranked: Vec<(u8, usize, usize)> = (0..n)
            .flat_map(|y| (0..n).map(move |x| (y, x)))
            .filter(|&(y, x)| (y, x) != (c, c))
            .map(|(y, x)| (disp.get(x, y), x, y))
            .collect();
        ranked.sort_by_key(|&(v, _, _)| std::cmp::Reverse(v));
        let top: Vec<(usize, usize)> = ranked[..2].iter().map(|&(_, x, y)| (x, y)).collect();
        assert!(top.contains(&(c, c - 4)));
        assert!(top.contains(&(c, c + 4)));
    }

    #[test]
    fn block_edges_split_evenly_with_trailing_remainder() {
        assert_eq!(block_edges(10, 4), vec![0, 2, 4, 7, 10]);
        assert_eq!(
            block_edges(200, 100).windows(2).map(|w| w[1] - w[0]).max(),
            Some(2)
        );
        let e = block_edges(256, 100);
        assert_eq!((e[0], e[100]), (0, 256));
        assert_eq!(e[44] - e[43], 2);
        assert_eq!(e[45] - e[44], 3);
    }

    #[test]
    fn identity_downsample_is_normalized_map() {
        let amps = SquareMap::new(2, vec![3.0, 0.0, 0.0, 4.0]).unwrap();
        let fv = extract_features(&amps, 2, true).unwrap();
        // Centered: [4, 0; 0, 3]
        assert_eq!(fv.data(), &[0.8, 0.0, 0.0, 0.6]);
    }

    #[test]
    fn constant_image_without_dc_is_degenerate() {
        let amps = amplitude(&dft2(&GrayImage::filled(8, 8, 100)).unwrap());
        assert_eq!(
            extract_features(&amps, 4, false).unwrap_err(),
            SpectralError::DegenerateFeature
        );
        assert!(extract_features(&amps, 4, true).is_ok());
        assert!(extract_features(&amps, 9, true).is_err());
    }

    #[test]
    fn feature_bytes_roundtrip_and_errors() {
        let amps = SquareMap::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let fv = extract_features(&amps, 2, true).unwrap();
        let bytes = fv.to_bytes();
        assert_eq!(&bytes[..4], &2u32.to_le_bytes());
        assert_eq!(FeatureVector::from_bytes(&bytes).unwrap(), fv);
        assert!(FeatureVector::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(FeatureVector::from_bytes(&[0, 0]).is_err());
    }
}
