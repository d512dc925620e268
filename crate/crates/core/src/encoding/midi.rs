//! Note extraction from Standard MIDI Files (format 0 or 1, metrical timing).

use std::collections::{HashMap, VecDeque};

use midly::{Format, MidiMessage, Smf, Timing, TrackEventKind};

use super::{EncodingError, RawNote};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiNotes {
    /// All tracks merged on one absolute-tick timeline, sorted by onset.
    pub notes: Vec<RawNote>,
    pub ppq: u32,
    /// Note-ons still sounding at the end of their track; closed there.
    pub unpaired: usize,
}

/// Extracts sounding notes. Velocity, tempo and controller events are ignored.
pub fn parse_midi(bytes: &[u8]) -> Result<MidiNotes, EncodingError> {
    let smf = Smf::parse(bytes).map_err(|e| EncodingError::Midi(e.to_string()))?;
    let ppq = match smf.header.timing {
        Timing::Metrical(ticks) => ticks.as_int() as u32,
        Timing::Timecode(..) => {
            return Err(EncodingError::Midi("SMPTE time division is not supported".into()))
        }
    };
    if smf.header.format == Format::Sequential {
        return Err(EncodingError::Midi("format 2 (sequential) files are not supported".into()));
    }

    let mut notes = Vec::new();
    let mut unpaired = 0;
    for track in &smf.tracks {
        let mut tick = 0u64;
        // Sounding notes per (channel, key), paired first-in first-out.
        let mut open: HashMap<(u8, u8), VecDeque<u64>> = HashMap::new();
        for event in track {
            tick += event.delta.as_int() as u64;
            let TrackEventKind::Midi { channel, message } = event.kind else {
                continue;
            };
            let (key, on) = match message {
                MidiMessage::NoteOn { key, vel } => (key.as_int(), vel.as_int() > 0),
                MidiMessage::NoteOff { key, .. } => (key.as_int(), false),
                _ => continue,
            };
            let slot = open.entry((channel.as_int(), key)).or_default();
            if on {
                slot.push_back(tick);
            } else if let Some(start) = slot.pop_front() {
                notes.push(RawNote { pitch: key, onset_ticks: start, duration_ticks: tick - start });
            }
        }
        for ((_, key), starts) in open {
            for start in starts {
                unpaired += 1;
                notes.push(RawNote { pitch: key, onset_ticks: start, duration_ticks: tick - start });
            }
        }
    }
    if unpaired > 0 {
        log::warn!("closed {unpaired} unpaired note-ons at the end of their track");
    }
    notes.sort();
    Ok(MidiNotes { notes, ppq, unpaired })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(tag: &[u8; 4], body: &[u8]) -> Vec<u8> {
        let mut out = tag.to_vec();
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(body);
        out
    }

    fn header(format: u16, tracks: u16, division: u16) -> Vec<u8> {
        let mut body = format.to_be_bytes().to_vec();
        body.extend_from_slice(&tracks.to_be_bytes());
        body.extend_from_slice(&division.to_be_bytes());
        chunk(b"MThd", &body)
    }

    const END: [u8; 4] = [0x00, 0xff, 0x2f, 0x00];

    #[test]
    fn single_note_format0() {
        // delta 0 note-on C4 vel 64; delta 480 (0x83 0x60) note-off; end of track.
        let mut track = vec![0x00, 0x90, 60, 64, 0x83, 0x60, 0x80, 60, 0];
        track.extend_from_slice(&END);
        let mut file = header(0, 1, 480);
        file.extend(chunk(b"MTrk", &track));
        let parsed = parse_midi(&file).unwrap();
        assert_eq!(parsed.ppq, 480);
        assert_eq!(parsed.notes, vec![RawNote { pitch: 60, onset_ticks: 0, duration_ticks: 480 }]);
        assert_eq!(parsed.unpaired, 0);
    }

    #[test]
    fn format1_tracks_merge() {
        // Track 1: tempo meta then E4 at tick 240 for 240 ticks, closed by velocity-0 note-on.
        let mut t1 = vec![0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20];
        t1.extend_from_slice(&[0x81, 0x70, 0x90, 64, 80, 0x81, 0x70, 0x90, 64, 0]);
        t1.extend_from_slice(&END);
        // Track 2: G3 on channel 2 at tick 0 for 960 ticks.
        let mut t2 = vec![0x00, 0x92, 55, 70, 0x87, 0x40, 0x82, 55, 0];
        t2.extend_from_slice(&END);
        let mut file = header(1, 2, 480);
        file.extend(chunk(b"MTrk", &t1));
        file.extend(chunk(b"MTrk", &t2));
        let parsed = parse_midi(&file).unwrap();
        assert_eq!(
            parsed.notes,
            vec![
                RawNote { pitch: 55, onset_ticks: 0, duration_ticks: 960 },
                RawNote { pitch: 64, onset_ticks: 240, duration_ticks: 240 },
            ]
        );
    }

    #[test]
    fn unpaired_note_closed_at_track_end() {
        let mut track = vec![0x00, 0x90, 60, 64, 0x83, 0x60, 0x90, 62, 64, 0x83, 0x60];
        track.extend_from_slice(&[0x80, 60, 0]);
        track.extend_from_slice(&END);
        let mut file = header(0, 1, 96);
        file.extend(chunk(b"MTrk", &track));
        let parsed = parse_midi(&file).unwrap();
        assert_eq!(parsed.unpaired, 1);
        assert!(parsed
            .notes
            .contains(&RawNote { pitch: 62, onset_ticks: 480, duration_ticks: 480 }));
    }

    #[test]
    fn smpte_and_garbage_rejected() {
        let mut file = header(0, 1, 0xe728);
        file.extend(chunk(b"MTrk", &END));
        assert!(matches!(parse_midi(&file), Err(EncodingError::Midi(m)) if m.contains("SMPTE")));
        assert!(parse_midi(b"not a midi file at all").is_err());
        assert!(parse_midi(&header(0, 1, 480)[..10]).is_err());
    }
}
