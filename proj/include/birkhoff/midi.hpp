#ifndef BIRKHOFF_MIDI_HPP
#define BIRKHOFF_MIDI_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace birkhoff {

/// One resolved note-on/note-off pair with musical-time annotations.
struct Note {
    int pitch = 0;                 // MIDI note number, 0-127
    std::int64_t onset_ticks = 0;
    std::int64_t duration_ticks = 1;
    int velocity = 64;             // 1-127; velocity-0 note-ons are note-offs
    double onset_seconds = 0.0;
    double duration_seconds = 0.0;
    double onset_beats = 0.0;      // quarter-note beats from piece start
    double duration_beats = 0.0;
    int bar_index = 0;
    int track = 0;
};

struct TempoEvent {
    std::int64_t tick = 0;
    std::int64_t microseconds_per_quarter = 500000; // 120 bpm
};

struct TimeSignatureEvent {
    std::int64_t tick = 0;
    int numerator = 4;
    int denominator = 4; // power of two
};

/// Notes sorted by (onset_ticks, pitch) plus the tempo and meter maps that
/// produced their time annotations.
struct NoteSequence {
    std::vector<Note> notes;
    std::vector<TempoEvent> tempo_map;
    std::vector<TimeSignatureEvent> meter_map;
    int ticks_per_quarter = 480;
    int n_bars = 1;
    // Note-ons left open at end of track are closed there and counted here.
    int unterminated_notes = 0;
};

/// Parse an SMF format-0 or format-1 file. Tracks are merged into one note
/// list (track id retained); overlapping same-pitch notes pair FIFO.
/// Throws Error codes: MalformedFile, EmptySequence.
NoteSequence parse_midi(std::span<const std::uint8_t> bytes);

/// Convenience wrapper; throws IoError if the file cannot be read.
NoteSequence load_midi_file(const std::filesystem::path& path);

/// Five-level dynamic quantization: 0-24 -> 0, 25-50 -> 1, 51-76 -> 2,
/// 77-101 -> 3, 102-127 -> 4.
int velocity_level(int velocity);

/// Deterministic 10-byte-per-note little-endian stream, input to the
/// compression-based redundancy feature: (delta_onset_ticks u32, pitch u8,
/// velocity u8, duration_ticks u32) per note in canonical order.
std::vector<std::uint8_t> canonical_serialize(const NoteSequence& seq);

/// Serialize as a single-track SMF format-0 file, 480 ticks per quarter by
/// default. Only what the synthetic-corpus generator needs: tempo map, meter
/// map, note on/off events.
std::vector<std::uint8_t> write_smf0(const NoteSequence& seq);

/// Recompute onset/duration seconds and beats, bar indices and n_bars from
/// ticks and the tempo/meter maps, and sort notes canonically. Used by the
/// parser and by code that builds sequences directly from ticks.
void annotate_times(NoteSequence& seq);

} // namespace birkhoff

#endif
