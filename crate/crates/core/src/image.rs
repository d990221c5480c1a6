//! Image containers, PNG / binary PGM codecs and luma conversion.

use std::fs;
use std::io::{self, Cursor};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image data: {0}")]
    CorruptData(String),
    #[error("invalid dimensions {width}x{height} for {len} pixels")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImageError::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }
}

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImageError::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// A decoded file: PGM and gray PNGs come back as `Gray`, color PNGs as `Rgb`.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl LoadedImage {
    pub fn into_gray(self) -> GrayImage {
        match self {
            LoadedImage::Gray(g) => g,
            LoadedImage::Rgb(rgb) => to_grayscale(&rgb),
        }
    }
}

/// BT.601 luma with round-half-up, done in integer arithmetic so it is exact.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let pixels = img
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let luma = (299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000;
            luma.min(255) as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<LoadedImage, ImageError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => ImageError::FileNotFound(path.to_path_buf()),
        _ => ImageError::Io(e),
    })?;
    decode_image(&bytes)
}

/// Sniffs the magic bytes and dispatches to the PNG or PGM decoder.
pub fn decode_image(bytes: &[u8]) -> Result<LoadedImage, ImageError> {
    if bytes.len() < 2 {
        return Err(ImageError::CorruptData(format!(
            "{} bytes is too short for any image header",
            bytes.len()
        )));
    }
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes).map(LoadedImage::Gray)
    } else if bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(ImageError::UnsupportedFormat(format!(
            "netpbm variant P{} (only binary P5 is supported)",
            bytes[1] as char
        )))
    } else {
        Err(ImageError::UnsupportedFormat(
            "expected a PNG or binary PGM (P5) file".into(),
        ))
    }
}

/// Decodes a binary P5 PGM with maxval 255. `#` comments in the header are tolerated.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if !bytes.starts_with(b"P5") {
        return Err(ImageError::UnsupportedFormat("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(ImageError::CorruptData("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::CorruptData("malformed PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::CorruptData("PGM header value out of range".into()))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(ImageError::CorruptData(format!(
            "non-positive PGM dimensions {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(ImageError::UnsupportedFormat(format!(
            "PGM maxval {maxval} (only 255 is supported)"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(ImageError::CorruptData("truncated PGM header".into())),
    }
    let len = width
        .checked_mul(height)
        .ok_or_else(|| ImageError::CorruptData("PGM dimensions overflow".into()))?;
    let data = &bytes[pos..];
    if data.len() < len {
        return Err(ImageError::CorruptData(format!(
            "PGM payload has {} of {len} bytes",
            data.len()
        )));
    }
    GrayImage::new(width, height, data[..len].to_vec())
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

fn decode_png(bytes: &[u8]) -> Result<LoadedImage, ImageError> {
    let corrupt = |e: png::DecodingError| ImageError::CorruptData(e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(corrupt)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::CorruptData("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(corrupt)?;
    buf.truncate(info.buffer_size());
    let (width, height) = (info.width as usize, info.height as usize);
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::UnsupportedFormat(format!(
            "PNG bit depth {:?}",
            info.bit_depth
        )));
    }
    let stride = info.line_size;
    let rows = buf.chunks_exact(stride).take(height);
    match info.color_type {
        png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => {
            let step = info.color_type.samples();
            let pixels = rows
                .flat_map(|row| row.chunks_exact(step).take(width).map(|p| p[0]))
                .collect();
            GrayImage::new(width, height, pixels).map(LoadedImage::Gray)
        }
        png::ColorType::Rgb | png::ColorType::Rgba => {
            let step = info.color_type.samples();
            let pixels = rows
                .flat_map(|row| {
                    row.chunks_exact(step)
                        .take(width)
                        .map(|p| [p[0], p[1], p[2]])
                })
                .collect();
            RgbImage::new(width, height, pixels).map(LoadedImage::Rgb)
        }
        png::ColorType::Indexed => Err(ImageError::UnsupportedFormat(
            "indexed PNG was not expanded".into(),
        )),
    }
}

pub fn encode_png(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        // Writing into a Vec cannot fail for a well-formed 8-bit gray raster.
        let mut writer = encoder.write_header().expect("png header");
        writer.write_image_data(&img.pixels).expect("png data");
    }
    out
}

pub fn encode_png_rgb(img: &RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let data: Vec<u8> = img.pixels.iter().flatten().copied().collect();
        let mut writer = encoder.write_header().expect("png header");
        writer.write_image_data(&data).expect("png data");
    }
    out
}

pub fn save_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    fs::write(path, encode_png(img))?;
    Ok(())
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}
