//! Seeded stand-in corpus: each class owns a pool of short note patterns and
//! every piece is stitched together from its class's pool, with some notes
//! replaced at random.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cdm_core::encoding::{events_to_json, NoteEvent, HIGHEST_PITCH, LOWEST_PITCH};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MOTIFS_PER_CLASS: usize = 8;
pub const PIECE_STEPS: u32 = 256;
pub const NOISE_RATE: f64 = 0.1;
const MIN_MOTIF_STEPS: u32 = 4;
const MAX_MOTIF_STEPS: u32 = 16;
const BAND_WIDTH: u8 = 24;
const MAX_NOTE_STEPS: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Motif {
    pub steps: u32,
    pub notes: Vec<NoteEvent>,
}

pub fn class_label(class: usize) -> String {
    format!("class{class:02}")
}

/// Lowest pitch of the class's band; bands are spread evenly across the keyboard.
fn band_low(class: usize, n_classes: usize) -> u8 {
    let span = (HIGHEST_PITCH - LOWEST_PITCH - BAND_WIDTH) as usize;
    LOWEST_PITCH + (class * span / (n_classes - 1).max(1)) as u8
}

fn make_motif(rng: &mut ChaCha8Rng, low: u8) -> Motif {
    let steps = rng.gen_range(MIN_MOTIF_STEPS..=MAX_MOTIF_STEPS);
    let mut notes = Vec::new();
    for onset in 0..steps {
        if onset == 0 || rng.gen_bool(0.4) {
            let chord = if rng.gen_bool(0.25) { 2 } else { 1 };
            for _ in 0..chord {
                let duration = rng.gen_range(1..=MAX_NOTE_STEPS.min(steps - onset));
                notes.push(NoteEvent::new(rng.gen_range(low..low + BAND_WIDTH), onset, duration));
            }
        }
    }
    Motif { steps, notes }
}

pub fn make_piece(rng: &mut ChaCha8Rng, motifs: &[Motif]) -> Vec<NoteEvent> {
    let mut events = Vec::new();
    let mut t = 0;
    while t < PIECE_STEPS {
        let motif = motifs.choose(rng).expect("non-empty motif pool");
        for note in &motif.notes {
            let onset = t + note.onset;
            if onset >= PIECE_STEPS {
                continue;
            }
            let pitch = if rng.gen_bool(NOISE_RATE) {
                rng.gen_range(LOWEST_PITCH..=HIGHEST_PITCH)
            } else {
                note.pitch
            };
            events.push(NoteEvent::new(pitch, onset, note.duration.min(PIECE_STEPS - onset)));
        }
        t += motif.steps;
    }
    events
}

/// Writes `n_classes × pieces_per_class` JSON scores under `root` in the
/// ingest layout and returns their paths in ingest order.
pub fn make_synthetic_corpus(
    root: &Path,
    n_classes: usize,
    pieces_per_class: usize,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    if n_classes < 2 {
        bail!("a synthetic corpus needs at least 2 classes, got {n_classes}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<Vec<Motif>> = (0..n_classes)
        .map(|c| {
            let low = band_low(c, n_classes);
            (0..MOTIFS_PER_CLASS).map(|_| make_motif(&mut rng, low)).collect()
        })
        .collect();

    let mut paths = Vec::with_capacity(n_classes * pieces_per_class);
    for (c, pool) in pools.iter().enumerate() {
        let dir = root.join(class_label(c));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for p in 0..pieces_per_class {
            let path = dir.join(format!("piece{p:03}.json"));
            let events = make_piece(&mut rng, pool);
            std::fs::write(&path, events_to_json(&events)).with_context(|| format!("writing {}", path.display()))?;
            paths.push(path);
        }
    }
    Ok(paths)
}
