use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cdm_core::classify::DEFAULT_K;
use cdm_core::compressor::CompressorSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    #[default]
    Cdm,
    CdmOffset,
    Ncd,
}

/// Run settings. Every field can come from a config file and be overridden
/// on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub compressor: String,
    pub measure: MeasureKind,
    /// Required for `cdm-offset` unless it should be calibrated on the fly.
    pub offset: Option<u64>,
    pub k: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub cache_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Extra compressors, addressable by id alongside the presets.
    pub compressors: Vec<CompressorSpec>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            compressor: "blocksort".into(),
            measure: MeasureKind::Cdm,
            offset: None,
            k: DEFAULT_K,
            seed: 0,
            jobs: None,
            cache_path: None,
            out_dir: PathBuf::from("out"),
            compressors: Vec::new(),
        }
    }
}

/// Command-line overrides; `None` leaves the config value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub compressor: Option<String>,
    pub measure: Option<MeasureKind>,
    pub offset: Option<u64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub cache_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let settings: Settings =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        settings.validate()?;
        Ok(settings)
    }

    pub fn apply(mut self, o: Overrides) -> Result<Self> {
        if let Some(v) = o.compressor {
            self.compressor = v;
        }
        if let Some(v) = o.measure {
            self.measure = v;
        }
        if o.offset.is_some() {
            self.offset = o.offset;
        }
        if let Some(v) = o.k {
            self.k = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if o.jobs.is_some() {
            self.jobs = o.jobs;
        }
        if o.cache_path.is_some() {
            self.cache_path = o.cache_path;
        }
        if let Some(v) = o.out_dir {
            self.out_dir = v;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        let mut seen = std::collections::BTreeSet::new();
        for spec in &self.compressors {
            spec.validate()?;
            if !seen.insert(spec.id.as_str()) {
                bail!("compressor id {:?} defined twice in config", spec.id);
            }
        }
        Ok(())
    }

    pub fn resolve(&self, id: &str) -> Result<CompressorSpec> {
        resolve_compressor(id, &self.compressors)
    }
}

pub const PRESETS: [&str; 5] = ["blocksort", "lz", "bzip2", "gzip", "zip"];

pub fn preset(id: &str) -> Option<CompressorSpec> {
    Some(match id {
        "blocksort" => CompressorSpec::blocksort(),
        "lz" => CompressorSpec::lz(),
        "bzip2" => CompressorSpec::external("bzip2", &["bzip2", "-9", "-c", "{in}"]),
        "gzip" => CompressorSpec::external("gzip", &["gzip", "-9", "-n", "-c", "{in}"]),
        // -j keeps the temp directory out of the archive, -X drops timestamps' extra fields.
        "zip" => CompressorSpec::external("zip", &["zip", "-q", "-X", "-j", "-9", "{out}", "{in}"]),
        _ => return None,
    })
}

/// Config-defined compressors shadow presets with the same id.
pub fn resolve_compressor(id: &str, custom: &[CompressorSpec]) -> Result<CompressorSpec> {
    let spec = match custom.iter().find(|s| s.id == id) {
        Some(s) => s.clone(),
        None => match preset(id) {
            Some(s) => s,
            None => bail!("unknown compressor {id:?}; presets are {}", PRESETS.join(", ")),
        },
    };
    spec.validate()?;
    Ok(spec)
}
