//! Grayscale image input and 8-bit map output.
//!
//! Inputs are binary PGM (P5, maxval 255 or 65535) or grayscale PNG at 8 or
//! 16 bits. Intensities are normalized to `[0, 1]` by dividing by
//! `2^depth - 1`. Colour inputs are rejected rather than converted.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::map::Map;

/// Smallest accepted image side, in pixels.
pub const MIN_SIDE: usize = 8;

/// The image signal, row-major with the origin at the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    /// Bit depth of the file the pixels came from; `None` for in-memory images.
    source_depth: Option<u8>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::with_depth(width, height, pixels, None)
    }

    fn with_depth(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        source_depth: Option<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format("zero-size image".into()));
        }
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::Format(format!(
                "image is {width}x{height}, at least {MIN_SIDE}x{MIN_SIDE} is required"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension {
                expected: (width, height),
                actual: (pixels.len(), 1),
            });
        }
        if let Some(i) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("pixel {} is not finite", i)));
        }
        Ok(ImageGrid {
            width,
            height,
            pixels,
            source_depth,
        })
    }

    pub fn from_map(map: &Map) -> Result<Self> {
        Self::new(map.width(), map.height(), map.data().to_vec())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn source_depth(&self) -> Option<u8> {
        self.source_depth
    }

    pub fn to_map(&self) -> Map {
        Map::new(self.width, self.height, self.pixels.clone()).expect("validated dimensions")
    }

    /// Intensity-scaled copy; used for contrast studies.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_depth(
            self.width,
            self.height,
            self.pixels.iter().map(|v| v * factor).collect(),
            self.source_depth,
        )
    }

    /// Square crop anchored at the top-left, for criteria that need square maps.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        let map = self.to_map().crop(x0, y0, width, height)?;
        Self::with_depth(width, height, map.into_data(), self.source_depth)
    }
}

/// How a real map is quantized to 8 bits on output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteMode {
    /// `[min, max]` maps linearly onto `[0, 255]`; a constant map is mid-gray.
    Rescale,
    /// `[0, 1]` maps onto `[0, 255]`, values outside are clamped.
    Clamp01,
}

/// Load a binary PGM or grayscale PNG, normalized to `[0, 1]`.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grayscale(&bytes)
}

/// Decode PGM/PNG bytes; the format is sniffed from the magic number.
pub fn decode_grayscale(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::Format(format!(
            "netpbm variant P{} is not supported, only binary P5",
            bytes[1] as char
        )))
    } else {
        Err(Error::Format("neither a binary PGM nor a PNG file".into()))
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("malformed PGM header: bad {what}")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut header = HeaderReader { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(Error::Format("malformed PGM header".into())),
    }
    let depth: u8 = match maxval {
        255 => 8,
        65535 => 16,
        other => {
            return Err(Error::Format(format!(
                "PGM maxval {other} is not supported (expected 255 or 65535)"
            )))
        }
    };
    if width == 0 || height == 0 {
        return Err(Error::Format("zero-size image".into()));
    }
    let raster = &bytes[header.pos..];
    let bytes_per_sample = usize::from(depth / 8);
    let needed = width * height * bytes_per_sample;
    if raster.len() < needed {
        return Err(Error::Format(format!(
            "PGM raster truncated: {} of {} bytes",
            raster.len(),
            needed
        )));
    }
    let scale = f64::from(maxval as u32);
    let pixels = if depth == 8 {
        raster[..needed]
            .iter()
            .map(|&v| f64::from(v) / scale)
            .collect()
    } else {
        raster[..needed]
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) / scale)
            .collect()
    };
    ImageGrid::with_depth(width, height, pixels, Some(depth))
}

fn decode_png(bytes: &[u8]) -> Result<ImageGrid> {
    let mut decoder = png::Decoder::new(bytes);
    // Expand sub-byte grayscale to 8 bits; 16-bit samples stay 16-bit.
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Format(format!("PNG decode: {e}")))?;
    let color = reader.info().color_type;
    if color != png::ColorType::Grayscale {
        return Err(Error::Format(format!(
            "PNG colour type {color:?} rejected; convert to single-channel grayscale first"
        )));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Format(format!("PNG decode: {e}")))?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    let data = &buf[..frame.buffer_size()];
    let (depth, pixels): (u8, Vec<f64>) = match frame.bit_depth {
        png::BitDepth::Sixteen => (
            16,
            data.chunks_exact(2)
                .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) / 65535.0)
                .collect(),
        ),
        _ => (8, data.iter().map(|&v| f64::from(v) / 255.0).collect()),
    };
    ImageGrid::with_depth(width, height, pixels, Some(depth))
}

/// Quantize a map to 8-bit samples under `mode`.
pub fn quantize(map: &Map, mode: WriteMode) -> Result<Vec<u8>> {
    if map.data().iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("map contains NaN".into()));
    }
    let to_byte = |v: f64| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8;
    Ok(match mode {
        WriteMode::Clamp01 => map
            .data()
            .iter()
            .map(|&v| to_byte(v.clamp(0.0, 1.0)))
            .collect(),
        WriteMode::Rescale => {
            let (lo, hi) = (map.min(), map.max());
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Numerical("map contains infinite values".into()));
            }
            let range = hi - lo;
            if range <= 0.0 {
                vec![128; map.data().len()]
            } else {
                map.data()
                    .iter()
                    .map(|&v| to_byte((v - lo) / range))
                    .collect()
            }
        }
    })
}

/// Write a map as an 8-bit PGM, or PNG when the extension is `.png`.
pub fn write_map(map: &Map, path: impl AsRef<Path>, mode: WriteMode) -> Result<()> {
    let path = path.as_ref();
    let samples = quantize(map, mode)?;
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    if is_png {
        let mut encoder = png::Encoder::new(&mut out, map.width() as u32, map.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        writer
            .write_image_data(&samples)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    } else {
        write!(out, "P5\n{} {}\n255\n", map.width(), map.height())
            .and_then(|_| out.write_all(&samples))
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Encode 8- or 16-bit samples as a binary PGM.
pub fn encode_pgm(width: usize, height: usize, samples: &[u16], depth: u8) -> Vec<u8> {
    let maxval = if depth == 16 { 65535 } else { 255 };
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    for &s in samples {
        if depth == 16 {
            out.extend_from_slice(&s.to_be_bytes());
        } else {
            out.push(s as u8);
        }
    }
    out
}
