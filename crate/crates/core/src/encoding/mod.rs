//! Piano scores as strings of '0'/'1' characters.
//!
//! A score becomes a sequence of 88-key on/off vectors, one per semiquaver.
//! Each vector is written lowest key first as 88 ASCII characters and the
//! vectors are concatenated with no separator.

mod midi;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use midi::{parse_midi, MidiNotes};

pub const KEYS: usize = 88;
pub const LOWEST_PITCH: u8 = 21;
pub const HIGHEST_PITCH: u8 = 108;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("pulses per quarter note must be at least 4, got {0}")]
    BadPpq(u32),
    #[error("transposing by {shift} leaves the piano range for events {events:?}")]
    RangeExceeded { shift: i32, events: Vec<usize> },
    #[error("record {index}: {message}")]
    Schema { index: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("MIDI: {0}")]
    Midi(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NoteEvent {
    /// MIDI note number, 21 (A0) through 108 (C8).
    pub pitch: u8,
    /// Semiquaver steps from the start of the piece.
    pub onset: u32,
    /// Semiquaver steps, at least one.
    pub duration: u32,
}

impl NoteEvent {
    pub fn new(pitch: u8, onset: u32, duration: u32) -> Self {
        Self { pitch, onset, duration }
    }

    fn check(&self) -> Result<(), String> {
        if !(LOWEST_PITCH..=HIGHEST_PITCH).contains(&self.pitch) {
            return Err(format!(
                "pitch {} outside piano range {LOWEST_PITCH}..={HIGHEST_PITCH}",
                self.pitch
            ));
        }
        if self.duration == 0 {
            return Err("duration must be at least 1".into());
        }
        Ok(())
    }

    fn end(&self) -> u64 {
        self.onset as u64 + self.duration as u64
    }
}

/// A note as read from a file, in ticks of the source's own resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RawNote {
    pub pitch: u8,
    pub onset_ticks: u64,
    pub duration_ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantized {
    pub events: Vec<NoteEvent>,
    /// Notes dropped because their pitch is outside the piano range.
    pub dropped: usize,
}

fn round_half_up_div(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Snaps tick timings to the semiquaver grid (`ppq / 4` ticks per step).
pub fn quantize(raw: &[RawNote], ppq: u32) -> Result<Quantized, EncodingError> {
    if ppq < 4 {
        return Err(EncodingError::BadPpq(ppq));
    }
    let ppq = ppq as u64;
    let mut events = Vec::with_capacity(raw.len());
    let mut dropped = 0;
    for n in raw {
        if !(LOWEST_PITCH..=HIGHEST_PITCH).contains(&n.pitch) {
            dropped += 1;
            continue;
        }
        let onset = round_half_up_div(n.onset_ticks * 4, ppq);
        let duration = round_half_up_div(n.duration_ticks * 4, ppq).max(1);
        events.push(NoteEvent {
            pitch: n.pitch,
            onset: u32::try_from(onset).unwrap_or(u32::MAX),
            duration: u32::try_from(duration).unwrap_or(u32::MAX),
        });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} notes outside the piano range");
    }
    Ok(Quantized { events, dropped })
}

/// 88 key states; bit 0 is A0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct KeyState(u128);

impl KeyState {
    pub fn is_set(&self, key: usize) -> bool {
        key < KEYS && self.0 >> key & 1 == 1
    }

    pub fn set(&mut self, key: usize) {
        assert!(key < KEYS);
        self.0 |= 1 << key;
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn keys(&self) -> impl Iterator<Item = usize> + '_ {
        (0..KEYS).filter(|&k| self.is_set(k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PianoRoll {
    steps: Vec<KeyState>,
}

impl PianoRoll {
    pub fn steps(&self) -> &[KeyState] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn to_roll(events: &[NoteEvent]) -> PianoRoll {
    let len = events.iter().map(NoteEvent::end).max().unwrap_or(0) as usize;
    let mut steps = vec![KeyState::default(); len];
    for e in events {
        let key = (e.pitch - LOWEST_PITCH) as usize;
        for step in &mut steps[e.onset as usize..e.end() as usize] {
            step.set(key);
        }
    }
    while steps.last().is_some_and(KeyState::is_empty) {
        steps.pop();
    }
    PianoRoll { steps }
}

/// ASCII '0'/'1' text whose length is a multiple of 88.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitString(String);

impl BitString {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0.into_bytes()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.0.len() / KEYS
    }
}

pub fn to_bitstring(roll: &PianoRoll) -> BitString {
    let mut s = String::with_capacity(roll.len() * KEYS);
    for step in roll.steps() {
        s.extend((0..KEYS).map(|k| if step.is_set(k) { '1' } else { '0' }));
    }
    BitString(s)
}

/// Shorthand for `to_bitstring(&to_roll(events))`.
pub fn encode_events(events: &[NoteEvent]) -> BitString {
    to_bitstring(&to_roll(events))
}

pub fn transpose(events: &[NoteEvent], shift: i32) -> Result<Vec<NoteEvent>, EncodingError> {
    let range = LOWEST_PITCH as i32..=HIGHEST_PITCH as i32;
    let bad: Vec<usize> = events
        .iter()
        .enumerate()
        .filter(|(_, e)| !range.contains(&(e.pitch as i32 + shift)))
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(EncodingError::RangeExceeded { shift, events: bad });
    }
    Ok(events
        .iter()
        .map(|e| NoteEvent { pitch: (e.pitch as i32 + shift) as u8, ..*e })
        .collect())
}

/// Parses a JSON array of `{pitch, onset, duration}` objects in semiquaver units.
pub fn parse_events_json(bytes: &[u8]) -> Result<Vec<NoteEvent>, EncodingError> {
    let records: Vec<serde_json::Value> = serde_json::from_slice(bytes)?;
    records
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            let event: NoteEvent = serde_json::from_value(value)
                .map_err(|e| EncodingError::Schema { index, message: e.to_string() })?;
            event.check().map_err(|message| EncodingError::Schema { index, message })?;
            Ok(event)
        })
        .collect()
}

pub fn events_to_json(events: &[NoteEvent]) -> String {
    serde_json::to_string(events).expect("note events serialize")
}
