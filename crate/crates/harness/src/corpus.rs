//! Corpus layout on disk: one subdirectory per class label, each holding
//! `.mid`/`.midi` or `.json` score files.

use std::path::{Path, PathBuf};

use cdm_core::encoding::{self, encode_events, parse_events_json, parse_midi, quantize, NoteEvent};
use cdm_core::measures::CorpusItem;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("no readable score files under {0}")]
    Empty(PathBuf),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Score {
        path: PathBuf,
        #[source]
        source: encoding::EncodingError,
    },
    #[error("unsupported score format: {0}")]
    UnsupportedFormat(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Midi,
    Json,
}

impl SourceFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "mid" | "midi" => Some(Self::Midi),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub item_id: String,
    pub class_label: String,
    pub format: SourceFormat,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub items: Vec<ManifestItem>,
}

impl CorpusManifest {
    pub fn labels(&self) -> Vec<&str> {
        let mut labels: Vec<&str> = self.items.iter().map(|i| i.class_label.as_str()).collect();
        labels.dedup();
        labels
    }
}

/// A parsed score plus anything worth warning about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    pub events: Vec<NoteEvent>,
    pub warnings: Vec<String>,
}

pub fn load_score(path: &Path) -> Result<Score, CorpusError> {
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io { path: path.into(), source })?;
    let score_err = |source| CorpusError::Score { path: path.into(), source };
    match SourceFormat::from_path(path) {
        Some(SourceFormat::Json) => Ok(Score {
            events: parse_events_json(&bytes).map_err(score_err)?,
            warnings: Vec::new(),
        }),
        Some(SourceFormat::Midi) => {
            let midi = parse_midi(&bytes).map_err(score_err)?;
            let q = quantize(&midi.notes, midi.ppq).map_err(score_err)?;
            let mut warnings = Vec::new();
            if midi.unpaired > 0 {
                warnings.push(format!("{}: {} unpaired note-ons closed at track end", path.display(), midi.unpaired));
            }
            if q.dropped > 0 {
                warnings.push(format!("{}: {} notes outside the piano range dropped", path.display(), q.dropped));
            }
            Ok(Score { events: q.events, warnings })
        }
        None => Err(CorpusError::UnsupportedFormat(path.into())),
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let read = std::fs::read_dir(dir).map_err(|source| CorpusError::Io { path: dir.into(), source })?;
    let mut paths = read
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| CorpusError::Io { path: dir.into(), source })?;
    paths.sort();
    Ok(paths)
}

/// Scans `root`, validating every score. Unparseable files, empty class
/// directories and duplicate ids are skipped and reported as warnings.
pub fn ingest(root: &Path) -> Result<(CorpusManifest, Vec<String>), CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.into()));
    }
    let mut items: Vec<ManifestItem> = Vec::new();
    let mut warnings = Vec::new();
    for class_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let label = class_dir.file_name().unwrap().to_string_lossy().into_owned();
        let before = items.len();
        for path in sorted_entries(&class_dir)? {
            let Some(format) = SourceFormat::from_path(&path).filter(|_| path.is_file()) else {
                continue;
            };
            let stem = path.file_stem().unwrap().to_string_lossy();
            let item_id = format!("{label}/{stem}");
            if items.iter().any(|i| i.item_id == item_id) {
                warnings.push(format!("duplicate item id {item_id} ({}) skipped", path.display()));
                continue;
            }
            match load_score(&path) {
                Ok(score) => {
                    warnings.extend(score.warnings);
                    items.push(ManifestItem { item_id, class_label: label.clone(), format, path });
                }
                Err(e) => warnings.push(format!("skipping unparseable file: {e}")),
            }
        }
        if items.len() == before {
            warnings.push(format!("class directory {} has no usable scores", class_dir.display()));
        }
    }
    if items.is_empty() {
        return Err(CorpusError::Empty(root.into()));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((CorpusManifest { root: root.into(), items }, warnings))
}

/// Parses and encodes every manifest item into the bytes that get compressed.
pub fn load_corpus(manifest: &CorpusManifest) -> Result<Vec<CorpusItem>, CorpusError> {
    manifest
        .items
        .iter()
        .map(|item| {
            let score = load_score(&item.path)?;
            Ok(CorpusItem {
                id: item.item_id.clone(),
                label: item.class_label.clone(),
                bytes: encode_events(&score.events).into_bytes(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, body: &str) {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, body).unwrap();
    }

    #[test]
    fn empty_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ingest(dir.path()), Err(CorpusError::Empty(_))));
        assert!(matches!(ingest(&dir.path().join("missing")), Err(CorpusError::MissingRoot(_))));
    }

    #[test]
    fn unparseable_files_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..9 {
            let label = if i < 5 { "A" } else { "B" };
            write(&dir.path().join(label).join(format!("p{i}.json")), r#"[{"pitch":60,"onset":0,"duration":2}]"#);
        }
        write(&dir.path().join("B").join("broken.json"), r#"[{"pitch":7}]"#);
        write(&dir.path().join("B").join("notes.txt"), "ignored");
        std::fs::create_dir_all(dir.path().join("C")).unwrap();
        let (manifest, warnings) = ingest(dir.path()).unwrap();
        assert_eq!(manifest.items.len(), 9);
        assert_eq!(manifest.labels(), vec!["A", "B"]);
        assert_eq!(warnings.len(), 2, "{warnings:?}");
        assert!(warnings.iter().any(|w| w.contains("broken.json")));
        assert!(warnings.iter().any(|w| w.contains("no usable scores")));
        let ids: Vec<_> = manifest.items.iter().map(|i| i.item_id.as_str()).collect();
        assert_eq!(ids[0], "A/p0");
        assert_eq!(ids[8], "B/p8");
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("A").join("x.json"), "[]");
        write(&dir.path().join("A").join("x.mid"), "not midi");
        let (manifest, warnings) = ingest(dir.path()).unwrap();
        assert_eq!(manifest.items.len(), 1);
        assert!(warnings[0].contains("duplicate"));
    }
}
