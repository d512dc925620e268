//! Canonical Huffman coding of bytes, with a raw fallback.
//!
//! Stream layout:
//!
//! ```text
//! mode: u8            0 = raw, 1 = huffman
//! count: varint       number of symbols
//! raw:     count bytes
//! huffman: 32-byte presence bitmap, one nibble per present symbol holding
//!          its code length (0 when a single symbol is present), then the
//!          MSB-first code bits padded to a byte boundary
//! ```

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{varint, CompressError};

const MAX_CODE_LEN: u8 = 15;
const MODE_RAW: u8 = 0;
const MODE_HUFFMAN: u8 = 1;

pub fn entropy_encode(input: &[u8]) -> Vec<u8> {
    let mut raw = Vec::with_capacity(input.len() + 11);
    raw.push(MODE_RAW);
    varint::put(&mut raw, input.len() as u64);
    raw.extend_from_slice(input);

    match huffman_encode(input) {
        Some(h) if h.len() < raw.len() => h,
        _ => raw,
    }
}

pub fn entropy_decode(input: &[u8]) -> Result<Vec<u8>, CompressError> {
    let (out, used) = entropy_decode_prefix(input)?;
    if used != input.len() {
        return Err(CompressError::malformed("trailing bytes after entropy stream"));
    }
    Ok(out)
}

/// Decodes one entropy stream from the front of `input`; returns the bytes consumed.
pub(crate) fn entropy_decode_prefix(input: &[u8]) -> Result<(Vec<u8>, usize), CompressError> {
    let (&mode, rest) = input
        .split_first()
        .ok_or_else(|| CompressError::malformed("empty entropy stream"))?;
    let (count, used) = varint::get(rest)?;
    let count = usize::try_from(count)
        .ok()
        .filter(|&c| c <= super::MAX_RUN)
        .ok_or_else(|| CompressError::malformed("symbol count too large"))?;
    let mut pos = 1 + used;
    match mode {
        MODE_RAW => {
            let body = input
                .get(pos..pos + count)
                .ok_or_else(|| CompressError::malformed("truncated raw entropy block"))?;
            Ok((body.to_vec(), pos + count))
        }
        MODE_HUFFMAN => {
            let bitmap = input
                .get(pos..pos + 32)
                .ok_or_else(|| CompressError::malformed("truncated symbol bitmap"))?;
            pos += 32;
            let symbols: Vec<u8> = (0..=255u8)
                .filter(|&s| bitmap[s as usize / 8] & (0x80 >> (s % 8)) != 0)
                .collect();
            if symbols.is_empty() {
                return Err(CompressError::malformed("no symbols in huffman table"));
            }
            let nibble_bytes = symbols.len().div_ceil(2);
            let nibbles = input
                .get(pos..pos + nibble_bytes)
                .ok_or_else(|| CompressError::malformed("truncated code lengths"))?;
            pos += nibble_bytes;
            let lengths: Vec<u8> = (0..symbols.len())
                .map(|i| {
                    let b = nibbles[i / 2];
                    if i % 2 == 0 {
                        b >> 4
                    } else {
                        b & 0x0f
                    }
                })
                .collect();

            if symbols.len() == 1 {
                if lengths[0] != 0 {
                    return Err(CompressError::malformed("single symbol must have empty code"));
                }
                return Ok((vec![symbols[0]; count], pos));
            }
            let decoder = CanonicalDecoder::new(&symbols, &lengths)?;
            let mut reader = BitReader::new(&input[pos..]);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                out.push(decoder.decode(&mut reader)?);
            }
            Ok((out, pos + reader.bytes_consumed()))
        }
        other => Err(CompressError::malformed(format!("unknown entropy mode {other}"))),
    }
}

fn huffman_encode(input: &[u8]) -> Option<Vec<u8>> {
    if input.is_empty() {
        return None;
    }
    let mut freq = [0u64; 256];
    for &b in input {
        freq[b as usize] += 1;
    }
    let lengths = code_lengths(&freq);
    let symbols: Vec<u8> = (0..=255u8).filter(|&s| freq[s as usize] > 0).collect();

    let mut out = vec![MODE_HUFFMAN];
    varint::put(&mut out, input.len() as u64);
    let mut bitmap = [0u8; 32];
    for &s in &symbols {
        bitmap[s as usize / 8] |= 0x80 >> (s % 8);
    }
    out.extend_from_slice(&bitmap);
    for pair in symbols.chunks(2) {
        let hi = lengths[pair[0] as usize];
        let lo = pair.get(1).map_or(0, |&s| lengths[s as usize]);
        out.push((hi << 4) | lo);
    }
    if symbols.len() == 1 {
        return Some(out);
    }

    let codes = canonical_codes(&lengths);
    let mut writer = BitWriter::new(out);
    for &b in input {
        let (code, len) = codes[b as usize];
        writer.put(code, len);
    }
    Some(writer.finish())
}

/// Length-limited Huffman code lengths; frequencies are halved until the
/// longest code fits in [`MAX_CODE_LEN`] bits.
fn code_lengths(freq: &[u64; 256]) -> [u8; 256] {
    let mut weights = *freq;
    loop {
        let lengths = unlimited_lengths(&weights);
        if lengths.iter().all(|&l| l <= MAX_CODE_LEN) {
            return lengths;
        }
        for w in weights.iter_mut().filter(|w| **w > 0) {
            *w = (*w / 2).max(1);
        }
    }
}

fn unlimited_lengths(weights: &[u64; 256]) -> [u8; 256] {
    let mut lengths = [0u8; 256];
    let present: Vec<usize> = (0..256).filter(|&s| weights[s] > 0).collect();
    if present.len() <= 1 {
        return lengths;
    }

    // Nodes 0..256 are leaves; internal nodes are appended. Ties order by node id.
    let mut parent: Vec<usize> = vec![usize::MAX; 256];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        present.iter().map(|&s| Reverse((weights[s], s))).collect();
    while heap.len() > 1 {
        let Reverse((w1, a)) = heap.pop().unwrap();
        let Reverse((w2, b)) = heap.pop().unwrap();
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a] = id;
        parent[b] = id;
        heap.push(Reverse((w1 + w2, id)));
    }
    for &s in &present {
        let mut depth = 0u8;
        let mut node = s;
        while parent[node] != usize::MAX {
            node = parent[node];
            depth = depth.saturating_add(1);
        }
        lengths[s] = depth;
    }
    lengths
}

fn canonical_codes(lengths: &[u8; 256]) -> [(u32, u8); 256] {
    let mut order: Vec<usize> = (0..256).filter(|&s| lengths[s] > 0).collect();
    order.sort_by_key(|&s| (lengths[s], s));
    let mut codes = [(0u32, 0u8); 256];
    let mut code = 0u32;
    let mut prev_len = 0u8;
    for s in order {
        let len = lengths[s];
        code <<= len - prev_len;
        codes[s] = (code, len);
        code += 1;
        prev_len = len;
    }
    codes
}

struct CanonicalDecoder {
    /// Symbols sorted by (length, symbol).
    sorted: Vec<u8>,
    /// Per length: (first code, index of first symbol in `sorted`, count).
    table: [(u32, usize, u32); MAX_CODE_LEN as usize + 1],
}

impl CanonicalDecoder {
    fn new(symbols: &[u8], lengths: &[u8]) -> Result<Self, CompressError> {
        let mut pairs: Vec<(u8, u8)> = symbols.iter().copied().zip(lengths.iter().copied()).collect();
        if pairs.iter().any(|&(_, l)| l == 0) {
            return Err(CompressError::malformed("zero code length in multi-symbol table"));
        }
        // Kraft inequality: the table must not be over-subscribed.
        let kraft: u64 = pairs.iter().map(|&(_, l)| 1u64 << (MAX_CODE_LEN - l)).sum();
        if kraft > 1u64 << MAX_CODE_LEN {
            return Err(CompressError::malformed("over-subscribed huffman table"));
        }
        pairs.sort_by_key(|&(s, l)| (l, s));
        let mut table = [(0u32, 0usize, 0u32); MAX_CODE_LEN as usize + 1];
        let mut code = 0u32;
        let mut idx = 0usize;
        for len in 1..=MAX_CODE_LEN {
            let count = pairs.iter().filter(|&&(_, l)| l == len).count() as u32;
            table[len as usize] = (code, idx, count);
            code = (code + count) << 1;
            idx += count as usize;
        }
        Ok(Self { sorted: pairs.into_iter().map(|(s, _)| s).collect(), table })
    }

    fn decode(&self, reader: &mut BitReader<'_>) -> Result<u8, CompressError> {
        let mut code = 0u32;
        for len in 1..=MAX_CODE_LEN as usize {
            code = (code << 1) | reader.bit()?;
            let (first, idx, count) = self.table[len];
            if code >= first && code - first < count {
                return Ok(self.sorted[idx + (code - first) as usize]);
            }
        }
        Err(CompressError::malformed("invalid huffman code"))
    }
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    bits: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        Self { out, acc: 0, bits: 0 }
    }

    fn put(&mut self, code: u32, len: u8) {
        self.acc = (self.acc << len) | code as u64;
        self.bits += len as u32;
        while self.bits >= 8 {
            self.bits -= 8;
            self.out.push((self.acc >> self.bits) as u8);
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.bits > 0 {
            self.out.push((self.acc << (8 - self.bits)) as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn bit(&mut self) -> Result<u32, CompressError> {
        let byte = self
            .data
            .get(self.pos / 8)
            .ok_or_else(|| CompressError::malformed("truncated huffman bitstream"))?;
        let b = (byte >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        Ok(b as u32)
    }

    fn bytes_consumed(&self) -> usize {
        self.pos.div_ceil(8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_input_is_tiny() {
        let enc = entropy_encode(&[0u8; 10000]);
        assert!(enc.len() < 200, "{}", enc.len());
        assert_eq!(enc.len(), 36);
        assert_eq!(entropy_decode(&enc).unwrap(), vec![0u8; 10000]);
    }

    #[test]
    fn random_bytes_round_trip_with_bounded_overhead() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for len in [0usize, 1, 2, 17, 300, 5000] {
            let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let enc = entropy_encode(&data);
            assert!(enc.len() <= len + 11);
            assert_eq!(entropy_decode(&enc).unwrap(), data);
        }
    }

    #[test]
    fn skewed_input_uses_prefix_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<u8> = (0..4000)
            .map(|_| if rng.gen_bool(0.9) { b'0' } else { rng.gen_range(b'1'..=b'9') })
            .collect();
        let enc = entropy_encode(&data);
        assert_eq!(enc[0], MODE_HUFFMAN);
        assert!(enc.len() < data.len() / 3);
        assert_eq!(entropy_decode(&enc).unwrap(), data);
    }

    #[test]
    fn long_codes_are_limited() {
        // Fibonacci frequencies force a degenerate tree deeper than 15.
        let mut data = Vec::new();
        let (mut a, mut b) = (1usize, 1usize);
        for s in 0..24u8 {
            data.extend(std::iter::repeat_n(s, a));
            (a, b) = (b, a + b);
        }
        let enc = entropy_encode(&data);
        assert_eq!(entropy_decode(&enc).unwrap(), data);
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        let data: Vec<u8> = b"abracadabra alakazam".repeat(20);
        let enc = entropy_encode(&data);
        assert!(entropy_decode(&enc[..enc.len() - 3]).is_err());
        assert!(entropy_decode(&[]).is_err());
        assert!(entropy_decode(&[7, 0]).is_err());
        let mut trailing = enc.clone();
        trailing.push(0);
        assert!(entropy_decode(&trailing).is_err());
    }
}
