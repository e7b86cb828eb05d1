//! Binary and text file formats.
//!
//! Latent files: 16-byte header `b"LATV"`, version `u32`, row count `s` `u32`,
//! dimension `d` `u32`, then `s·d` little-endian `f64` values, rows contiguous.
//! A single W⁺ latent is an `s`-row file; a batch of W latents is one row per latent.
//!
//! Image files: 24-byte header `b"IMGF"`, version `u32`, count `u32`,
//! height `u32`, width `u32`, channels `u32`, then little-endian `f64`
//! values, each image stored height × width × channels.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const LATENT_MAGIC: &[u8; 4] = b"LATV";
pub const IMAGE_MAGIC: &[u8; 4] = b"IMGF";
pub const FORMAT_VERSION: u32 = 1;

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file truncated".into())
    } else {
        Error::Io(e)
    }
}

fn read_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(truncated)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn write_values<W: Write, T: Scalar>(w: &mut W, values: &[T]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_values<R: Read, T: Scalar>(r: &mut R, count: usize) -> Result<Vec<T>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect())
}

fn to_u32(x: usize, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::InvalidArgument(format!("{what} {x} exceeds u32")))
}

pub fn write_latents<W: Write, T: Scalar>(mut w: W, rows: &Matrix<T>) -> Result<()> {
    w.write_all(LATENT_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&to_u32(rows.rows(), "row count")?.to_le_bytes())?;
    w.write_all(&to_u32(rows.cols(), "dimension")?.to_le_bytes())?;
    write_values(&mut w, rows.as_slice())
}

pub fn read_latents<R: Read, T: Scalar>(mut r: R) -> Result<Matrix<T>> {
    read_magic(&mut r, LATENT_MAGIC)?;
    let s = read_u32(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;
    let values = read_values(&mut r, s * d)?;
    Matrix::from_vec(s, d, values)
}

#[derive(Debug, Serialize, Deserialize)]
struct LatentJson<T> {
    rows: usize,
    dim: usize,
    values: Vec<Vec<T>>,
}

pub fn write_latents_json<W: Write, T: Scalar>(w: W, rows: &Matrix<T>) -> Result<()> {
    let doc = LatentJson {
        rows: rows.rows(),
        dim: rows.cols(),
        values: rows.row_iter().map(<[T]>::to_vec).collect(),
    };
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

pub fn read_latents_json<R: Read, T: Scalar>(r: R) -> Result<Matrix<T>> {
    let doc: LatentJson<T> = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
    if doc.values.len() != doc.rows || doc.values.iter().any(|v| v.len() != doc.dim) {
        return Err(Error::Format("latent JSON shape disagrees with header".into()));
    }
    Matrix::from_rows(&doc.values)
}

/// Height, width and channel count of an image; pixels are stored row by row,
/// channels interleaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Writes a batch of images (one per row of `images`).
pub fn write_images<W: Write, T: Scalar>(mut w: W, shape: ImageShape, images: &Matrix<T>) -> Result<()> {
    if images.cols() != shape.len() {
        return Err(Error::DimensionMismatch {
            expected: shape.len(),
            actual: images.cols(),
        });
    }
    w.write_all(IMAGE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for x in [images.rows(), shape.height, shape.width, shape.channels] {
        w.write_all(&to_u32(x, "image header field")?.to_le_bytes())?;
    }
    write_values(&mut w, images.as_slice())
}

pub fn read_images<R: Read, T: Scalar>(mut r: R) -> Result<(ImageShape, Matrix<T>)> {
    read_magic(&mut r, IMAGE_MAGIC)?;
    let n = read_u32(&mut r)? as usize;
    let shape = ImageShape {
        height: read_u32(&mut r)? as usize,
        width: read_u32(&mut r)? as usize,
        channels: read_u32(&mut r)? as usize,
    };
    let values = read_values(&mut r, n * shape.len())?;
    Ok((shape, Matrix::from_vec(n, shape.len(), values)?))
}

/// Binary PPM (P6, 8-bit) of a 3-channel image. Values are mapped affinely
/// from `[lo, hi]` to `[0, 255]`; callers pass the batch range.
pub fn write_ppm<W: Write, T: Scalar>(mut w: W, shape: ImageShape, image: &[T], lo: T, hi: T) -> Result<()> {
    if shape.channels != 3 {
        return Err(Error::InvalidArgument("PPM needs 3 channels".into()));
    }
    if image.len() != shape.len() {
        return Err(Error::DimensionMismatch {
            expected: shape.len(),
            actual: image.len(),
        });
    }
    write!(w, "P6\n{} {}\n255\n", shape.width, shape.height)?;
    let span = hi - lo;
    let bytes: Vec<u8> = image
        .iter()
        .map(|&v| {
            let unit = if span > T::zero() { (v - lo) / span } else { T::zero() };
            (unit.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8
        })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Minimum and maximum over every entry of a batch.
pub fn value_range<T: Scalar>(values: &[T]) -> (T, T) {
    values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}
