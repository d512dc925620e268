//! Compressed-size measurement: built-in block-sort and dictionary
//! compressors, an adapter for external programs, and a persistent size cache.

mod blocksort;
mod bwt;
mod cache;
mod entropy;
mod external;
mod lz;
mod mtf;
mod rle;
mod varint;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bwt::{bwt_forward, bwt_inverse};
pub use cache::{SizeCache, SizeRecord};
pub use entropy::{entropy_decode, entropy_encode};
pub use mtf::{mtf_decode, mtf_encode};
pub use rle::{rle_decode, rle_encode};

/// Version byte written into every built-in stream header.
pub const FORMAT_VERSION: u8 = 1;

/// Size of the built-in stream header: 8-byte magic, version byte, `u64` original length.
/// The compressed form of the empty string is exactly this long.
pub const HEADER_SIZE: usize = 17;

pub const DEFAULT_BLOCK_SIZE: usize = 900_000;
pub const MIN_BLOCK_SIZE: usize = 1024;

/// Upper bound on any decoded length, guarding allocations on corrupt input.
pub(crate) const MAX_RUN: usize = 1 << 31;

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("malformed stream: {0}")]
    Malformed(String),
    #[error("primary index {index} out of range for block of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("compressor `{0}` is external; only built-in compressors can compress in-process")]
    NotBuiltin(String),
    #[error("external compressor `{id}` failed: {message}")]
    External { id: String, message: String },
    #[error("invalid compressor spec: {0}")]
    InvalidSpec(String),
    #[error("size cache i/o: {0}")]
    Cache(#[from] std::io::Error),
}

impl CompressError {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Self::Malformed(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CompressorKind {
    BuiltinBlocksort {
        #[serde(default = "default_block_size")]
        block_size: usize,
    },
    BuiltinLz,
    /// Argument vector with `{in}` and optional `{out}` placeholders. Without
    /// `{out}` the program's standard output is taken as the compressed file.
    External { command: Vec<String> },
}

fn default_block_size() -> usize {
    DEFAULT_BLOCK_SIZE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: CompressorKind,
}

impl CompressorSpec {
    pub fn blocksort() -> Self {
        Self {
            id: "blocksort".into(),
            kind: CompressorKind::BuiltinBlocksort { block_size: DEFAULT_BLOCK_SIZE },
        }
    }

    pub fn lz() -> Self {
        Self { id: "lz".into(), kind: CompressorKind::BuiltinLz }
    }

    pub fn external(id: &str, command: &[&str]) -> Self {
        Self {
            id: id.into(),
            kind: CompressorKind::External {
                command: command.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, CompressorKind::External { .. })
    }

    pub fn validate(&self) -> Result<(), CompressError> {
        if self.id.is_empty() {
            return Err(CompressError::InvalidSpec("empty compressor id".into()));
        }
        if !self
            .id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(CompressError::InvalidSpec(format!(
                "compressor id `{}` may only contain ASCII letters, digits, '-', '_' and '.'",
                self.id
            )));
        }
        match &self.kind {
            CompressorKind::BuiltinBlocksort { block_size } if *block_size < MIN_BLOCK_SIZE => {
                Err(CompressError::InvalidSpec(format!(
                    "block size {block_size} is below the minimum of {MIN_BLOCK_SIZE}"
                )))
            }
            CompressorKind::External { command } => {
                if command.is_empty() {
                    return Err(CompressError::InvalidSpec(format!(
                        "external compressor `{}` needs a command",
                        self.id
                    )));
                }
                if !command.iter().any(|a| a.contains("{in}")) {
                    return Err(CompressError::InvalidSpec(format!(
                        "command for `{}` has no {{in}} placeholder",
                        self.id
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Cache key: the id plus a fingerprint of everything that affects output size.
    pub fn cache_key(&self) -> String {
        match &self.kind {
            CompressorKind::BuiltinBlocksort { block_size } => {
                format!("{}@bs-v{}-{}", self.id, FORMAT_VERSION, block_size)
            }
            CompressorKind::BuiltinLz => format!("{}@lz-v{}", self.id, FORMAT_VERSION),
            CompressorKind::External { command } => {
                let fp = Sha256::digest(command.join("\0").as_bytes());
                format!("{}@ext-{}", self.id, &hex::encode(fp)[..12])
            }
        }
    }
}

mod header {
    use super::{CompressError, FORMAT_VERSION, HEADER_SIZE};

    pub(crate) fn write(magic: [u8; 8], len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_SIZE + len / 4);
        out.extend_from_slice(&magic);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&(len as u64).to_le_bytes());
        out
    }

    pub(crate) fn read(magic: [u8; 8], stream: &[u8]) -> Result<(usize, usize), CompressError> {
        if stream.len() < HEADER_SIZE {
            return Err(CompressError::malformed("truncated header"));
        }
        if stream[..8] != magic {
            return Err(CompressError::malformed("bad magic"));
        }
        if stream[8] != FORMAT_VERSION {
            return Err(CompressError::malformed(format!("unsupported version {}", stream[8])));
        }
        let len = u64::from_le_bytes(stream[9..17].try_into().unwrap());
        let len = usize::try_from(len)
            .ok()
            .filter(|&l| l <= super::MAX_RUN)
            .ok_or_else(|| CompressError::malformed("declared length too large"))?;
        Ok((len, HEADER_SIZE))
    }
}

pub fn compress(spec: &CompressorSpec, input: &[u8]) -> Result<Vec<u8>, CompressError> {
    spec.validate()?;
    match &spec.kind {
        CompressorKind::BuiltinBlocksort { block_size } => Ok(blocksort::compress(input, *block_size)),
        CompressorKind::BuiltinLz => Ok(lz::compress(input)),
        CompressorKind::External { .. } => Err(CompressError::NotBuiltin(spec.id.clone())),
    }
}

pub fn decompress(spec: &CompressorSpec, compressed: &[u8]) -> Result<Vec<u8>, CompressError> {
    match &spec.kind {
        CompressorKind::BuiltinBlocksort { .. } => blocksort::decompress(compressed),
        CompressorKind::BuiltinLz => lz::decompress(compressed),
        CompressorKind::External { .. } => Err(CompressError::NotBuiltin(spec.id.clone())),
    }
}

/// Measures the compressed size without consulting any cache.
pub fn measure_size(spec: &CompressorSpec, input: &[u8]) -> Result<u64, CompressError> {
    match &spec.kind {
        CompressorKind::External { command } => {
            spec.validate()?;
            external::compressed_size(&spec.id, command, input)
        }
        _ => compress(spec, input).map(|c| c.len() as u64),
    }
}

/// `C(x)`: compressed size of `input` in bytes, memoised in `cache`.
pub fn compressed_size(
    spec: &CompressorSpec,
    input: &[u8],
    cache: &SizeCache,
) -> Result<u64, CompressError> {
    let key = spec.cache_key();
    let digest = content_digest(input);
    if let Some(size) = cache.get(&digest, &key) {
        return Ok(size);
    }
    let size = measure_size(spec, input)?;
    cache.record_computation();
    cache.insert(digest, key, size);
    Ok(size)
}

/// SHA-256 of the input, hex encoded.
pub fn content_digest(input: &[u8]) -> String {
    hex::encode(Sha256::digest(input))
}

/// Anything that can report a compressed size; lets the offset fit and the
/// distance computations run against mock compressors.
pub trait SizeOracle: Sync {
    fn id(&self) -> &str;
    fn size(&self, input: &[u8]) -> Result<u64, CompressError>;
}

/// A compressor spec bound to a shared size cache.
pub struct CachedCompressor<'a> {
    pub spec: &'a CompressorSpec,
    pub cache: &'a SizeCache,
}

impl<'a> CachedCompressor<'a> {
    pub fn new(spec: &'a CompressorSpec, cache: &'a SizeCache) -> Self {
        Self { spec, cache }
    }
}

impl SizeOracle for CachedCompressor<'_> {
    fn id(&self) -> &str {
        &self.spec.id
    }

    fn size(&self, input: &[u8]) -> Result<u64, CompressError> {
        compressed_size(self.spec, input, self.cache)
    }
}
