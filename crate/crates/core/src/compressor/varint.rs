//! LEB128 unsigned integers used inside the built-in stream formats.

use super::CompressError;

pub(crate) fn put(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Reads one varint from the front of `input`, returning the value and bytes consumed.
pub(crate) fn get(input: &[u8]) -> Result<(u64, usize), CompressError> {
    let mut v = 0u64;
    for (i, &b) in input.iter().enumerate() {
        if i >= 10 {
            break;
        }
        let bits = (b & 0x7f) as u64;
        if i == 9 && bits > 1 {
            return Err(CompressError::malformed("varint overflow"));
        }
        v |= bits << (7 * i);
        if b & 0x80 == 0 {
            return Ok((v, i + 1));
        }
    }
    Err(CompressError::malformed("truncated varint"))
}
