//! Binary filter file: `b"PADMOD1\n"`, a little-endian `u32` channel count,
//! then three little-endian `f32` weights per channel.
//!
//! A network with several modules stores one record per module back to back.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::padding::filters::FilterBank;
use crate::tensor::Scalar;

pub const MAGIC: &[u8; 8] = b"PADMOD1\n";

pub fn encode_weights<T: Scalar>(filters: &FilterBank<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 12 * filters.channels());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(filters.channels() as u32).to_le_bytes());
    for theta in filters.weights() {
        for w in theta {
            out.extend_from_slice(&(w.as_f64() as f32).to_le_bytes());
        }
    }
    out
}

/// Decodes every record in `bytes`.
pub fn decode_weights<T: Scalar>(mut bytes: &[u8]) -> Result<Vec<FilterBank<T>>> {
    let mut banks = Vec::new();
    while !bytes.is_empty() {
        let (bank, rest) = decode_one(bytes)?;
        banks.push(bank);
        bytes = rest;
    }
    if banks.is_empty() {
        return Err(Error::format("weights file", "no records"));
    }
    Ok(banks)
}

fn decode_one<T: Scalar>(bytes: &[u8]) -> Result<(FilterBank<T>, &[u8])> {
    let rest = bytes
        .strip_prefix(MAGIC.as_slice())
        .ok_or_else(|| Error::format("weights file", "missing PADMOD1 magic"))?;
    let (count, rest) = rest
        .split_first_chunk::<4>()
        .ok_or_else(|| Error::format("weights file", "truncated channel count"))?;
    let channels = u32::from_le_bytes(*count) as usize;
    let body = channels
        .checked_mul(12)
        .filter(|&n| n <= rest.len())
        .ok_or_else(|| Error::format("weights file", format!("truncated body for {channels} channels")))?;
    let weights = rest[..body]
        .chunks_exact(12)
        .map(|c| {
            let w = |k: usize| T::of(f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as f64);
            [w(0), w(1), w(2)]
        })
        .collect();
    Ok((FilterBank::from_weights(weights)?, &rest[body..]))
}

pub fn write_weights<T: Scalar>(banks: &[&FilterBank<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = banks.iter().flat_map(|b| encode_weights(b)).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_weights<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<FilterBank<T>>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}
