//! Dictionary compressor in the LZSS family with a small sliding window.
//!
//! Items are grouped eight at a time behind a flag byte (bit set = literal).
//! A match is two bytes: 12 bits of `distance - 1` and 4 bits of `length - 3`,
//! so no pattern longer than 18 bytes or further back than 4096 bytes can be
//! referenced in one step.

use super::{header, CompressError};

pub(crate) const MAGIC: [u8; 8] = *b"CDMLZSS\0";

const WINDOW: usize = 4096;
const MIN_MATCH: usize = 3;
const MAX_MATCH: usize = 18;
const HASH_BITS: u32 = 13;
const MAX_CHAIN: usize = 128;

fn hash3(data: &[u8], i: usize) -> usize {
    let v = (data[i] as u32) << 16 | (data[i + 1] as u32) << 8 | data[i + 2] as u32;
    (v.wrapping_mul(2_654_435_761) >> (32 - HASH_BITS)) as usize
}

pub(crate) fn compress(input: &[u8]) -> Vec<u8> {
    let mut out = header::write(MAGIC, input.len());
    let mut head = vec![usize::MAX; 1 << HASH_BITS];
    let mut prev = vec![usize::MAX; input.len()];

    let insert = |pos: usize, head: &mut Vec<usize>, prev: &mut Vec<usize>| {
        if pos + MIN_MATCH <= input.len() {
            let h = hash3(input, pos);
            prev[pos] = head[h];
            head[h] = pos;
        }
    };

    let mut flag_at = usize::MAX;
    let mut item = 8;
    let mut i = 0;
    while i < input.len() {
        if item == 8 {
            flag_at = out.len();
            out.push(0);
            item = 0;
        }

        let mut best_len = 0;
        let mut best_dist = 0;
        if i + MIN_MATCH <= input.len() {
            let limit = (input.len() - i).min(MAX_MATCH);
            let mut cand = head[hash3(input, i)];
            let mut steps = 0;
            while cand != usize::MAX && i - cand <= WINDOW && steps < MAX_CHAIN {
                let len = input[cand..]
                    .iter()
                    .zip(&input[i..i + limit])
                    .take_while(|(a, b)| a == b)
                    .count();
                if len > best_len {
                    best_len = len;
                    best_dist = i - cand;
                    if len == limit {
                        break;
                    }
                }
                cand = prev[cand];
                steps += 1;
            }
        }

        if best_len >= MIN_MATCH {
            let code = ((best_dist - 1) << 4) | (best_len - MIN_MATCH);
            out.push((code >> 8) as u8);
            out.push(code as u8);
            for p in i..i + best_len {
                insert(p, &mut head, &mut prev);
            }
            i += best_len;
        } else {
            out[flag_at] |= 1 << item;
            out.push(input[i]);
            insert(i, &mut head, &mut prev);
            i += 1;
        }
        item += 1;
    }
    out
}

pub(crate) fn decompress(stream: &[u8]) -> Result<Vec<u8>, CompressError> {
    let (total, mut pos) = header::read(MAGIC, stream)?;
    let mut out = Vec::with_capacity(total.min(super::MAX_RUN));
    let byte = |pos: usize| {
        stream
            .get(pos)
            .copied()
            .ok_or_else(|| CompressError::malformed("truncated lz stream"))
    };
    while out.len() < total {
        let flags = byte(pos)?;
        pos += 1;
        for item in 0..8 {
            if out.len() >= total {
                break;
            }
            if flags & (1 << item) != 0 {
                out.push(byte(pos)?);
                pos += 1;
            } else {
                let code = (byte(pos)? as usize) << 8 | byte(pos + 1)? as usize;
                pos += 2;
                let dist = (code >> 4) + 1;
                let len = (code & 0x0f) + MIN_MATCH;
                if dist > out.len() || out.len() + len > total {
                    return Err(CompressError::malformed("lz match out of range"));
                }
                let start = out.len() - dist;
                for k in 0..len {
                    out.push(out[start + k]);
                }
            }
        }
    }
    if pos != stream.len() {
        return Err(CompressError::malformed("trailing bytes after lz stream"));
    }
    Ok(out)
}
