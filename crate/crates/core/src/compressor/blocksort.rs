//! Block-sort compressor: BWT, move-to-front, zero-run coding, Huffman.
//!
//! Each block is stored either transformed or verbatim, whichever is shorter:
//!
//! ```text
//! 0x00 len:varint bytes[len]                 stored
//! 0x01 primary:varint entropy-stream         transformed
//! ```

use super::{bwt, entropy, header, mtf, rle, varint, CompressError};

pub(crate) const MAGIC: [u8; 8] = *b"CDMBSORT";

const BLOCK_STORED: u8 = 0;
const BLOCK_TRANSFORMED: u8 = 1;

pub(crate) fn compress(input: &[u8], block_size: usize) -> Vec<u8> {
    let mut out = header::write(MAGIC, input.len());
    for block in input.chunks(block_size) {
        let (last, primary) = bwt::bwt_forward(block);
        let mut transformed = vec![BLOCK_TRANSFORMED];
        varint::put(&mut transformed, primary as u64);
        transformed.extend(entropy::entropy_encode(&rle::rle_encode(&mtf::mtf_encode(&last))));

        let stored_len = 1 + varint_len(block.len() as u64) + block.len();
        if transformed.len() < stored_len {
            out.extend(transformed);
        } else {
            out.push(BLOCK_STORED);
            varint::put(&mut out, block.len() as u64);
            out.extend_from_slice(block);
        }
    }
    out
}

pub(crate) fn decompress(stream: &[u8]) -> Result<Vec<u8>, CompressError> {
    let (total, mut pos) = header::read(MAGIC, stream)?;
    let mut out = Vec::with_capacity(total.min(super::MAX_RUN));
    while out.len() < total {
        let kind = *stream
            .get(pos)
            .ok_or_else(|| CompressError::malformed("missing block"))?;
        pos += 1;
        match kind {
            BLOCK_STORED => {
                let (len, used) = varint::get(&stream[pos..])?;
                pos += used;
                let len = usize::try_from(len)
                    .map_err(|_| CompressError::malformed("block length overflow"))?;
                let body = stream
                    .get(pos..pos.saturating_add(len))
                    .ok_or_else(|| CompressError::malformed("truncated stored block"))?;
                out.extend_from_slice(body);
                pos += len;
            }
            BLOCK_TRANSFORMED => {
                let (primary, used) = varint::get(&stream[pos..])?;
                pos += used;
                let (coded, used) = entropy::entropy_decode_prefix(&stream[pos..])?;
                pos += used;
                let last = mtf::mtf_decode(&rle::rle_decode(&coded)?);
                if last.is_empty() {
                    return Err(CompressError::malformed("empty transformed block"));
                }
                let primary = usize::try_from(primary)
                    .map_err(|_| CompressError::malformed("primary index overflow"))?;
                out.extend(bwt::bwt_inverse(&last, primary)?);
            }
            other => return Err(CompressError::malformed(format!("unknown block kind {other}"))),
        }
    }
    if out.len() != total || pos != stream.len() {
        return Err(CompressError::malformed("stream length does not match header"));
    }
    Ok(out)
}

fn varint_len(v: u64) -> usize {
    let mut buf = Vec::with_capacity(10);
    varint::put(&mut buf, v);
    buf.len()
}
