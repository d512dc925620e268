//! Zero-run coding applied after move-to-front.
//!
//! A run of `L >= 1` zero bytes becomes a single `0x00` marker followed by the
//! varint `L - 1`; every non-zero byte is copied through.

use super::{varint, CompressError};

pub fn rle_encode(input: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(input.len() / 2 + 4);
    let mut i = 0;
    while i < input.len() {
        if input[i] == 0 {
            let run = input[i..].iter().take_while(|&&b| b == 0).count();
            out.push(0);
            varint::put(&mut out, (run - 1) as u64);
            i += run;
        } else {
            out.push(input[i]);
            i += 1;
        }
    }
    out
}

pub fn rle_decode(input: &[u8]) -> Result<Vec<u8>, CompressError> {
    let mut out = Vec::with_capacity(input.len() * 2);
    let mut i = 0;
    while i < input.len() {
        if input[i] == 0 {
            let (extra, used) = varint::get(&input[i + 1..])?;
            let run = usize::try_from(extra)
                .ok()
                .and_then(|e| e.checked_add(1))
                .filter(|&r| r <= super::MAX_RUN)
                .ok_or_else(|| CompressError::malformed("zero run too long"))?;
            out.resize(out.len() + run, 0);
            i += 1 + used;
        } else {
            out.push(input[i]);
            i += 1;
        }
    }
    Ok(out)
}
