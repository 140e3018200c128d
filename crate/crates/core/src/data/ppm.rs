//! Binary PPM (P6) with maxval 255.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape, Tensor};

/// `P6` header followed by rounded bytes. Values must lie in `[0, 1]` and the
/// tensor must have three channels.
pub fn encode_ppm<T: Scalar>(t: &Tensor<T>) -> Result<Vec<u8>> {
    if t.shape().rank() != 3 || t.channels() != 3 {
        return Err(Error::InvalidShape { dims: t.shape().dims().to_vec(), reason: "PPM images need 3 channels" });
    }
    let mut out = format!("P6\n{} {}\n255\n", t.width(), t.height()).into_bytes();
    out.reserve(t.data().len());
    for &v in t.data() {
        out.push(super::quantize(v.as_f64())?);
    }
    Ok(out)
}

pub fn write_ppm<T: Scalar>(t: &Tensor<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_ppm(t)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format("PPM", "truncated header"));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("PPM", format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
}

/// Reads a P6 image with maxval 255 into values `byte / 255`.
pub fn decode_ppm(bytes: &[u8]) -> Result<Tensor<f32>> {
    let mut pos = 0;
    if header_token(bytes, &mut pos)? != b"P6" {
        return Err(Error::format("PPM", "missing P6 magic"));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::format("PPM", format!("maxval {maxval}, only 255 is supported")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height * 3;
    let raster = bytes.get(pos..).filter(|r| r.len() == n).ok_or_else(|| {
        Error::format("PPM", format!("raster of {} bytes, expected {n}", bytes.len().saturating_sub(pos)))
    })?;
    Tensor::from_vec(Shape::d3(height, width, 3)?, raster.iter().map(|&b| f32::from(b) / 255.0).collect())
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Tensor<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes)
}
