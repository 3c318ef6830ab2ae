//! Multilook covariance images in the WCOV1 format, region extraction and
//! random subsampling without replacement.
//!
//! WCOV1 layout: one line of UTF-8 JSON terminated by `\n`,
//!
//! ```text
//! {"magic":"WCOV1","width":W,"height":H,"m":M,"nominal_looks":null,"byte_order":"LE"}
//! ```
//!
//! followed by W·H·M² complex entries, each a little-endian f64 pair
//! (re, im). Pixels are row-major (x fastest), each pixel stores its full
//! M×M matrix row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, MatrixSample};

pub const MAGIC: &str = "WCOV1";
const MAX_HEADER_BYTES: usize = 64 * 1024;
const ENTRY_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    magic: String,
    width: usize,
    height: usize,
    m: usize,
    nominal_looks: Option<f64>,
    byte_order: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceImage {
    width: usize,
    height: usize,
    dim: usize,
    nominal_looks: Option<f64>,
    pixels: Vec<HermitianMatrix>,
}

impl CovarianceImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<HermitianMatrix>,
        nominal_looks: Option<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Format(format!(
                "{} pixels for a {width}×{height} image",
                pixels.len()
            )));
        }
        let dim = pixels[0].dim();
        if let Some(i) = pixels.iter().position(|p| p.dim() != dim) {
            return Err(Error::Format(format!("pixel {i} has dimension {}, expected {dim}", pixels[i].dim())));
        }
        Ok(CovarianceImage {
            width,
            height,
            dim,
            nominal_looks,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nominal_looks(&self) -> Option<f64> {
        self.nominal_looks
    }

    pub fn pixels(&self) -> &[HermitianMatrix] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> &HermitianMatrix {
        &self.pixels[y * self.width + x]
    }

    pub fn full_region(&self) -> RegionSpec {
        RegionSpec {
            x0: 0,
            y0: 0,
            w: self.width,
            h: self.height,
        }
    }

    /// Row-major indices of pixels that are not positive definite.
    pub fn non_pd_pixels(&self) -> Vec<usize> {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_positive_definite())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Axis-aligned rectangle of pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl std::str::FromStr for RegionSpec {
    type Err = Error;

    /// Parses `x0,y0,w,h`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("region '{s}': {e}")))?;
        match parts[..] {
            [x0, y0, w, h] => Ok(RegionSpec { x0, y0, w, h }),
            _ => Err(Error::Config(format!("region '{s}' must be x0,y0,w,h"))),
        }
    }
}

pub fn write_covariance_image(image: &CovarianceImage, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    encode(image, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_covariance_image(path: impl AsRef<Path>) -> Result<CovarianceImage> {
    decode(&fs::read(path)?)
}

pub fn encode<W: Write>(image: &CovarianceImage, out: &mut W) -> Result<()> {
    let header = Header {
        magic: MAGIC.into(),
        width: image.width,
        height: image.height,
        m: image.dim,
        nominal_looks: image.nominal_looks,
        byte_order: "LE".into(),
    };
    serde_json::to_writer(&mut *out, &header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    for p in &image.pixels {
        for z in p.entries() {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<CovarianceImage> {
    let newline = bytes
        .iter()
        .take(MAX_HEADER_BYTES)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.magic != MAGIC {
        return Err(Error::Format(format!("bad magic '{}'", header.magic)));
    }
    if header.byte_order != "LE" {
        return Err(Error::Format(format!("unsupported byte order '{}'", header.byte_order)));
    }
    if header.width == 0 || header.height == 0 || header.m == 0 {
        return Err(Error::Format(format!(
            "width, height and m must be positive (got {}, {}, {})",
            header.width, header.height, header.m
        )));
    }
    let m2 = header
        .m
        .checked_mul(header.m)
        .ok_or_else(|| Error::Format("m too large".into()))?;
    let expected = header
        .width
        .checked_mul(header.height)
        .and_then(|p| p.checked_mul(m2))
        .and_then(|e| e.checked_mul(ENTRY_BYTES))
        .ok_or_else(|| Error::Format("image too large".into()))?;
    let payload = &bytes[newline + 1..];
    if payload.len() < expected {
        return Err(Error::Truncation {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }

    let read_f64 = |chunk: &[u8]| f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    let pixels = payload
        .chunks_exact(m2 * ENTRY_BYTES)
        .enumerate()
        .map(|(i, px)| {
            let entries = px
                .chunks_exact(ENTRY_BYTES)
                .map(|e| Complex64::new(read_f64(&e[..8]), read_f64(&e[8..])))
                .collect();
            HermitianMatrix::from_entries(header.m, entries)
                .map_err(|e| Error::Format(format!("pixel {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    CovarianceImage::new(header.width, header.height, pixels, header.nominal_looks)
}

/// The pixels of `region` in row-major order as a sample.
pub fn extract_region(image: &CovarianceImage, region: RegionSpec) -> Result<MatrixSample> {
    if region.w == 0 || region.h == 0 {
        return Err(Error::Bounds("region must contain at least one pixel".into()));
    }
    let x_end = region.x0.checked_add(region.w);
    let y_end = region.y0.checked_add(region.h);
    if !matches!(x_end, Some(x) if x <= image.width) || !matches!(y_end, Some(y) if y <= image.height) {
        return Err(Error::Bounds(format!(
            "region {},{},{},{} exceeds {}×{} image",
            region.x0, region.y0, region.w, region.h, image.width, image.height
        )));
    }
    let mut observations = Vec::with_capacity(region.w * region.h);
    for y in region.y0..region.y0 + region.h {
        for x in region.x0..region.x0 + region.w {
            let index = y * image.width + x;
            let p = &image.pixels[index];
            if !p.is_positive_definite() {
                return Err(Error::BadPixel { index });
            }
            observations.push(p.clone());
        }
    }
    MatrixSample::new(observations)
}

/// Iterator of `count` subsamples of size `n`, each drawn uniformly without
/// replacement from `sample`; subsamples are independent of each other.
pub struct Subsamples<'a, R> {
    sample: &'a MatrixSample,
    size: usize,
    remaining: usize,
    rng: R,
}

impl<R: Rng> Iterator for Subsamples<'_, R> {
    type Item = MatrixSample;

    fn next(&mut self) -> Option<MatrixSample> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let indices = rand::seq::index::sample(&mut self.rng, self.sample.len(), self.size).into_vec();
        Some(
            self.sample
                .subset(&indices)
                .expect("subset of a valid sample is valid"),
        )
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

pub fn subsample_without_replacement<R: Rng>(
    sample: &MatrixSample,
    n: usize,
    count: usize,
    rng: R,
) -> Result<Subsamples<'_, R>> {
    if n > sample.len() {
        return Err(Error::Size {
            requested: n,
            available: sample.len(),
        });
    }
    if n == 0 || count == 0 {
        return Err(Error::Config("subsample size and count must be positive".into()));
    }
    Ok(Subsamples {
        sample,
        size: n,
        remaining: count,
        rng,
    })
}
