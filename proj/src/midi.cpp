#include "birkhoff/midi.hpp"

#include "birkhoff/errors.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <fstream>
#include <map>

namespace birkhoff {

namespace {

struct Cursor {
    const std::uint8_t* p;
    const std::uint8_t* end;

    std::size_t remaining() const { return static_cast<std::size_t>(end - p); }

    std::uint8_t u8() {
        if (p >= end) throw Error::data("MalformedFile", "unexpected end of file");
        return *p++;
    }
    std::uint16_t u16be() {
        const std::uint16_t hi = u8();
        return static_cast<std::uint16_t>(hi << 8 | u8());
    }
    std::uint32_t u32be() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | u8();
        return v;
    }
    // MIDI variable-length quantity, at most 4 bytes.
    std::uint32_t vlq() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint8_t b = u8();
            v = v << 7 | (b & 0x7F);
            if (!(b & 0x80)) return v;
        }
        throw Error::data("MalformedFile", "variable-length quantity longer than 4 bytes");
    }
    void skip(std::size_t n) {
        if (remaining() < n) throw Error::data("MalformedFile", "chunk truncated");
        p += n;
    }
};

struct OpenNote {
    std::int64_t tick;
    int velocity;
    int track;
};

void parse_track(Cursor track, int track_index, NoteSequence& seq) {
    // FIFO queue per (channel, pitch) so overlapping same-pitch notes pair
    // first-on/first-off.
    std::map<int, std::deque<OpenNote>> open;
    std::int64_t tick = 0;
    std::uint8_t running_status = 0;

    const auto close_note = [&](int key, std::int64_t off_tick) {
        auto it = open.find(key);
        if (it == open.end() || it->second.empty()) return; // stray note-off
        const OpenNote on = it->second.front();
        it->second.pop_front();
        Note note;
        note.pitch = key & 0x7F;
        note.onset_ticks = on.tick;
        note.duration_ticks = std::max<std::int64_t>(1, off_tick - on.tick);
        note.velocity = on.velocity;
        note.track = on.track;
        seq.notes.push_back(note);
    };

    while (track.remaining() > 0) {
        tick += track.vlq();
        std::uint8_t status = track.u8();
        if (status < 0x80) {
            if (running_status == 0)
                throw Error::data("MalformedFile", "data byte without running status");
            --track.p; // re-read as first data byte
            status = running_status;
        }

        if (status == 0xFF) { // meta event
            running_status = 0;
            const std::uint8_t type = track.u8();
            const std::uint32_t len = track.vlq();
            if (track.remaining() < len)
                throw Error::data("MalformedFile", "meta event truncated");
            if (type == 0x51 && len == 3) {
                std::int64_t uspq = 0;
                for (int i = 0; i < 3; ++i) uspq = uspq << 8 | track.u8();
                if (uspq <= 0) throw Error::data("MalformedFile", "non-positive tempo");
                seq.tempo_map.push_back({tick, uspq});
            } else if (type == 0x58 && len >= 2) {
                const int numerator = track.u8();
                const int dd = track.u8();
                track.skip(len - 2);
                if (numerator < 1 || dd > 30)
                    throw Error::data("MalformedFile", "bad time signature");
                seq.meter_map.push_back({tick, numerator, 1 << dd});
            } else if (type == 0x2F) {
                track.skip(len);
                break;
            } else {
                track.skip(len);
            }
            continue;
        }
        if (status == 0xF0 || status == 0xF7) { // sysex
            running_status = 0;
            track.skip(track.vlq());
            continue;
        }
        if (status >= 0xF0)
            throw Error::data("MalformedFile", "unsupported system message");

        running_status = status;
        const int kind = status & 0xF0;
        const int channel = status & 0x0F;
        const std::uint8_t d0 = track.u8();
        if (d0 >= 0x80) throw Error::data("MalformedFile", "bad data byte");

        switch (kind) {
        case 0x80: { // note off
            const std::uint8_t vel = track.u8();
            (void)vel;
            close_note(channel << 8 | d0, tick);
            break;
        }
        case 0x90: { // note on (velocity 0 is a note off)
            const std::uint8_t vel = track.u8();
            const int key = channel << 8 | d0;
            if (vel == 0) {
                close_note(key, tick);
            } else {
                open[key].push_back({tick, vel, track_index});
            }
            break;
        }
        case 0xA0: // poly aftertouch
        case 0xB0: // controller (CC events ignored, including sustain)
        case 0xE0: // pitch bend
            track.u8();
            break;
        case 0xC0: // program change
        case 0xD0: // channel aftertouch
            break;
        default:
            throw Error::data("MalformedFile", "unknown status byte");
        }
    }

    // Close whatever is still sounding at end of track.
    for (auto& [key, queue] : open) {
        while (!queue.empty()) {
            ++seq.unterminated_notes;
            close_note(key, tick);
        }
    }
}

// Piecewise-linear tick -> seconds map built from tempo events.
struct TempoSegments {
    std::vector<std::int64_t> ticks;
    std::vector<double> seconds;
    std::vector<double> seconds_per_tick;

    explicit TempoSegments(const std::vector<TempoEvent>& tempo_map, int tpq) {
        std::int64_t prev_tick = 0;
        double prev_seconds = 0.0;
        double rate = 500000.0 / (1e6 * tpq); // default 120 bpm
        if (tempo_map.empty() || tempo_map.front().tick > 0) {
            ticks.push_back(0);
            seconds.push_back(0.0);
            seconds_per_tick.push_back(rate);
        }
        for (const TempoEvent& ev : tempo_map) {
            prev_seconds += static_cast<double>(ev.tick - prev_tick) * rate;
            prev_tick = ev.tick;
            rate = static_cast<double>(ev.microseconds_per_quarter) / (1e6 * tpq);
            ticks.push_back(ev.tick);
            seconds.push_back(prev_seconds);
            seconds_per_tick.push_back(rate);
        }
    }

    double at(std::int64_t tick) const {
        auto it = std::upper_bound(ticks.begin(), ticks.end(), tick);
        const std::size_t i = static_cast<std::size_t>(it - ticks.begin()) - 1;
        return seconds[i] + static_cast<double>(tick - ticks[i]) * seconds_per_tick[i];
    }
};

// Bar index lookup. A time-signature change starts a new bar at its own tick;
// any partial bar before it counts as one bar.
struct BarSegments {
    std::vector<std::int64_t> ticks;
    std::vector<std::int64_t> bar_at_start;
    std::vector<std::int64_t> ticks_per_bar;

    BarSegments(const std::vector<TimeSignatureEvent>& meter_map, int tpq) {
        std::int64_t prev_tick = 0;
        std::int64_t bars = 0;
        std::int64_t tpb = static_cast<std::int64_t>(tpq) * 4; // default 4/4
        if (meter_map.empty() || meter_map.front().tick > 0) {
            ticks.push_back(0);
            bar_at_start.push_back(0);
            ticks_per_bar.push_back(tpb);
        }
        for (const TimeSignatureEvent& ev : meter_map) {
            if (ev.tick > prev_tick)
                bars += (ev.tick - prev_tick + tpb - 1) / tpb; // ceil: partial bar counts
            prev_tick = ev.tick;
            tpb = std::max<std::int64_t>(1, static_cast<std::int64_t>(tpq) * 4 *
                                                ev.numerator / ev.denominator);
            if (!ticks.empty() && ticks.back() == ev.tick) {
                ticks_per_bar.back() = tpb;
            } else {
                ticks.push_back(ev.tick);
                bar_at_start.push_back(bars);
                ticks_per_bar.push_back(tpb);
            }
        }
    }

    int at(std::int64_t tick) const {
        auto it = std::upper_bound(ticks.begin(), ticks.end(), tick);
        const std::size_t i = static_cast<std::size_t>(it - ticks.begin()) - 1;
        return static_cast<int>(bar_at_start[i] + (tick - ticks[i]) / ticks_per_bar[i]);
    }
};

template <typename Event>
void sort_and_dedupe(std::vector<Event>& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.tick < b.tick; });
    // Last event at a given tick wins.
    auto out = events.begin();
    for (auto it = events.begin(); it != events.end(); ++it) {
        if (out != events.begin() && std::prev(out)->tick == it->tick)
            *std::prev(out) = *it;
        else
            *out++ = *it;
    }
    events.erase(out, events.end());
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
    std::uint8_t stack[5];
    int n = 0;
    stack[n++] = v & 0x7F;
    while (v >>= 7) stack[n++] = (v & 0x7F) | 0x80;
    while (n-- > 0) out.push_back(stack[n]);
}

} // namespace

void annotate_times(NoteSequence& seq) {
    sort_and_dedupe(seq.tempo_map);
    sort_and_dedupe(seq.meter_map);
    std::stable_sort(seq.notes.begin(), seq.notes.end(), [](const Note& a, const Note& b) {
        if (a.onset_ticks != b.onset_ticks) return a.onset_ticks < b.onset_ticks;
        return a.pitch < b.pitch;
    });

    const TempoSegments tempo(seq.tempo_map, seq.ticks_per_quarter);
    const BarSegments bars(seq.meter_map, seq.ticks_per_quarter);
    const double tpq = seq.ticks_per_quarter;

    int max_bar = 0;
    for (Note& n : seq.notes) {
        n.onset_seconds = tempo.at(n.onset_ticks);
        n.duration_seconds = tempo.at(n.onset_ticks + n.duration_ticks) - n.onset_seconds;
        n.onset_beats = static_cast<double>(n.onset_ticks) / tpq;
        n.duration_beats = static_cast<double>(n.duration_ticks) / tpq;
        n.bar_index = bars.at(n.onset_ticks);
        max_bar = std::max(max_bar, n.bar_index);
    }
    seq.n_bars = max_bar + 1;
}

NoteSequence parse_midi(std::span<const std::uint8_t> bytes) {
    Cursor cur{bytes.data(), bytes.data() + bytes.size()};
    if (cur.remaining() < 14 || cur.u8() != 'M' || cur.u8() != 'T' || cur.u8() != 'h' ||
        cur.u8() != 'd')
        throw Error::data("MalformedFile", "missing MThd header");
    const std::uint32_t header_len = cur.u32be();
    if (header_len < 6) throw Error::data("MalformedFile", "short header chunk");
    const int format = cur.u16be();
    const int declared_tracks = cur.u16be();
    const std::uint16_t division = cur.u16be();
    cur.skip(header_len - 6);
    if (format != 0 && format != 1)
        throw Error::data("MalformedFile", "only SMF format 0 and 1 are supported");
    if (division & 0x8000)
        throw Error::data("MalformedFile", "SMPTE time division not supported");
    if (division == 0) throw Error::data("MalformedFile", "zero ticks per quarter");

    NoteSequence seq;
    seq.ticks_per_quarter = division;

    int track_index = 0;
    while (cur.remaining() >= 8) {
        char magic[4];
        for (char& c : magic) c = static_cast<char>(cur.u8());
        const std::uint32_t length = cur.u32be();
        if (cur.remaining() < length)
            throw Error::data("MalformedFile", "track chunk truncated");
        if (std::string_view(magic, 4) == "MTrk") {
            parse_track(Cursor{cur.p, cur.p + length}, track_index++, seq);
        }
        // Unknown chunk types are skipped per the SMF spec.
        cur.skip(length);
    }
    if (track_index == 0) throw Error::data("MalformedFile", "no MTrk chunk");
    (void)declared_tracks; // some writers over-declare; actual chunks win
    if (seq.notes.empty()) throw Error::data("EmptySequence", "file contains no notes");

    annotate_times(seq);
    return seq;
}

NoteSequence load_midi_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::data("IoError", "cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_midi(bytes);
}

int velocity_level(int velocity) {
    if (velocity < 0 || velocity > 127)
        throw Error::data("OutOfRange", "velocity must be in [0, 127]");
    if (velocity <= 24) return 0;
    if (velocity <= 50) return 1;
    if (velocity <= 76) return 2;
    if (velocity <= 101) return 3;
    return 4;
}

std::vector<std::uint8_t> canonical_serialize(const NoteSequence& seq) {
    if (seq.notes.empty())
        throw Error::data("EmptySequence", "cannot serialize an empty sequence");
    std::vector<Note> notes = seq.notes;
    std::stable_sort(notes.begin(), notes.end(), [](const Note& a, const Note& b) {
        if (a.onset_ticks != b.onset_ticks) return a.onset_ticks < b.onset_ticks;
        return a.pitch < b.pitch;
    });
    std::vector<std::uint8_t> out;
    out.reserve(notes.size() * 10);
    std::int64_t prev_onset = 0;
    for (const Note& n : notes) {
        put_u32le(out, static_cast<std::uint32_t>(n.onset_ticks - prev_onset));
        out.push_back(static_cast<std::uint8_t>(n.pitch));
        out.push_back(static_cast<std::uint8_t>(n.velocity));
        put_u32le(out, static_cast<std::uint32_t>(n.duration_ticks));
        prev_onset = n.onset_ticks;
    }
    return out;
}

std::vector<std::uint8_t> write_smf0(const NoteSequence& seq) {
    struct RawEvent {
        std::int64_t tick;
        int order; // note-offs < meta < note-ons at equal tick
        int pitch;
        std::size_t index;
        std::vector<std::uint8_t> bytes;
    };
    std::vector<RawEvent> events;
    std::size_t counter = 0;

    for (const TimeSignatureEvent& ts : seq.meter_map) {
        const int dd = std::countr_zero(static_cast<unsigned>(ts.denominator));
        events.push_back({ts.tick, 1, 0, counter++,
                          {0xFF, 0x58, 0x04, static_cast<std::uint8_t>(ts.numerator),
                           static_cast<std::uint8_t>(dd), 24, 8}});
    }
    for (const TempoEvent& te : seq.tempo_map) {
        const auto uspq = static_cast<std::uint32_t>(te.microseconds_per_quarter);
        events.push_back({te.tick, 1, 0, counter++,
                          {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(uspq >> 16),
                           static_cast<std::uint8_t>(uspq >> 8),
                           static_cast<std::uint8_t>(uspq)}});
    }
    std::int64_t last_tick = 0;
    for (const Note& n : seq.notes) {
        const auto pitch = static_cast<std::uint8_t>(n.pitch);
        const auto vel = static_cast<std::uint8_t>(n.velocity);
        events.push_back({n.onset_ticks, 2, n.pitch, counter++, {0x90, pitch, vel}});
        const std::int64_t off = n.onset_ticks + n.duration_ticks;
        events.push_back({off, 0, n.pitch, counter++, {0x80, pitch, 0}});
        last_tick = std::max(last_tick, off);
    }
    std::sort(events.begin(), events.end(), [](const RawEvent& a, const RawEvent& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        if (a.order != b.order) return a.order < b.order;
        if (a.pitch != b.pitch) return a.pitch < b.pitch;
        return a.index < b.index;
    });

    std::vector<std::uint8_t> track;
    std::int64_t prev = 0;
    for (const RawEvent& ev : events) {
        put_vlq(track, static_cast<std::uint32_t>(ev.tick - prev));
        track.insert(track.end(), ev.bytes.begin(), ev.bytes.end());
        prev = ev.tick;
    }
    put_vlq(track, static_cast<std::uint32_t>(std::max<std::int64_t>(0, last_tick - prev)));
    track.insert(track.end(), {0xFF, 0x2F, 0x00});

    std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 0, 0, 1};
    out.push_back(static_cast<std::uint8_t>(seq.ticks_per_quarter >> 8));
    out.push_back(static_cast<std::uint8_t>(seq.ticks_per_quarter));
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_u32be(out, static_cast<std::uint32_t>(track.size()));
    out.insert(out.end(), track.begin(), track.end());
    return out;
}

} // namespace birkhoff
