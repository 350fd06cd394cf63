#include "birkhoff/corpus.hpp"

#include "birkhoff/errors.hpp"
#include "birkhoff/features.hpp"
#include "birkhoff/midi.hpp"
#include "birkhoff/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <span>

#include <json.hpp>

namespace birkhoff {

namespace {

using nlohmann::json;

constexpr int kTpq = 480;
constexpr int kBeatsPerBar = 4;
constexpr std::int64_t kCaptureGrid = 5; // ticks; ~1 ms at 120 bpm

std::int64_t snap_to_grid(std::int64_t tick) {
    return (tick + kCaptureGrid / 2) / kCaptureGrid * kCaptureGrid;
}
constexpr int kPhraseBars = 8;
constexpr std::array<int, 7> kMajorScale{0, 2, 4, 5, 7, 9, 11};

int scale_pitch(int root, int degree_index) {
    return root + 12 * (degree_index / 7) + kMajorScale[static_cast<std::size_t>(degree_index % 7)];
}

bool in_scale(int pitch, int root) {
    const int degree = ((pitch - root) % 12 + 12) % 12;
    for (int step : kMajorScale)
        if (degree == step) return true;
    return false;
}

struct ScoreNote {
    std::int64_t onset_ticks;
    std::int64_t duration_ticks;
    int pitch;
    bool is_melody;
};

// Homophonic score: a scale-walk melody over two-note block chords, 4/4,
// quarter/eighth rhythms. Half the pieces are motivic (a two-bar cell
// repeated with small transpositions), half through-composed; rhythm
// density varies per piece. The mix keeps piece-level statistics such as
// compressibility and pitch entropy from collapsing to one point per class.
std::vector<ScoreNote> generate_score(std::mt19937_64& gen, int bars, int& root_out) {
    std::vector<ScoreNote> notes;
    const int root = root_out = 53 + rng::uniform_int(gen, 0, 11);
    const double eighth_prob = rng::uniform_range(gen, 0.25, 0.75);
    const bool motivic = rng::uniform_real(gen) < 0.5;

    struct CellBeat {
        bool split;
        std::array<int, 2> steps;
    };
    std::vector<CellBeat> cell;      // two bars of melodic motion
    std::vector<int> cell_chords(2); // chord degree per cell bar
    if (motivic) {
        for (int beat = 0; beat < 2 * kBeatsPerBar; ++beat) {
            CellBeat cb;
            cb.split = rng::uniform_real(gen) < eighth_prob;
            cb.steps = {rng::uniform_int(gen, -2, 2), rng::uniform_int(gen, -2, 2)};
            cell.push_back(cb);
        }
        for (int& degree : cell_chords)
            degree = std::array<int, 3>{0, 3, 4}[static_cast<std::size_t>(
                rng::uniform_int(gen, 0, 2))];
    }

    int degree = 7 + rng::uniform_int(gen, 0, 7);
    for (int bar = 0; bar < bars; ++bar) {
        if (motivic && bar % 2 == 0) {
            // re-anchor each motif repetition with a small transposition
            degree = std::clamp(7 + rng::uniform_int(gen, 0, 7) +
                                    (bar > 0 ? rng::uniform_int(gen, -1, 1) : 0),
                                4, 14);
        }
        int chord_degree;
        if (motivic) {
            chord_degree = cell_chords[static_cast<std::size_t>(bar % 2)];
        } else {
            chord_degree = std::array<int, 3>{0, 3, 4}[static_cast<std::size_t>(
                rng::uniform_int(gen, 0, 2))];
        }
        const int chord_root = root - 12 + kMajorScale[static_cast<std::size_t>(chord_degree)];
        for (int half : {0, 1}) {
            const std::int64_t onset = (static_cast<std::int64_t>(bar) * kBeatsPerBar +
                                        2 * half) * kTpq;
            notes.push_back({onset, 2 * kTpq, chord_root, false});
            notes.push_back({onset, 2 * kTpq, chord_root + 7, false});
        }
        for (int beat = 0; beat < kBeatsPerBar; ++beat) {
            const std::int64_t beat_tick =
                (static_cast<std::int64_t>(bar) * kBeatsPerBar + beat) * kTpq;
            bool split_beat;
            std::array<int, 2> steps;
            if (motivic) {
                const CellBeat& cb =
                    cell[static_cast<std::size_t>((bar % 2) * kBeatsPerBar + beat)];
                split_beat = cb.split;
                steps = cb.steps;
            } else {
                split_beat = rng::uniform_real(gen) < eighth_prob;
                steps = {rng::uniform_int(gen, -2, 2), rng::uniform_int(gen, -2, 2)};
            }
            const int subdivisions = split_beat ? 2 : 1;
            for (int s = 0; s < subdivisions; ++s) {
                degree = std::clamp(degree + steps[static_cast<std::size_t>(s)], 4, 18);
                notes.push_back({beat_tick + s * (kTpq / 2),
                                 split_beat ? kTpq / 2 : kTpq,
                                 scale_pitch(root, degree), true});
            }
        }
    }
    return notes;
}

// Per-piece scaling of a rendition baseline: log-uniform spread whose width
// per knob is a multiple of the master piece_variation.
double piece_factor(std::mt19937_64& gen, double variation, double log_width) {
    const double a = log_width * 2.0 * variation;
    return std::exp(rng::uniform_range(gen, -a, a));
}

double norm_bar_weight(const MetricalWeights& weights, std::int64_t onset_ticks) {
    const auto bar = static_cast<std::size_t>(onset_ticks / (kBeatsPerBar * kTpq));
    const double w = weights.weights[std::min(bar, weights.weights.size() - 1)];
    return (w - 1.0) / 3.0;
}

double norm_beat_weight(std::int64_t onset_ticks) {
    const std::int64_t in_bar = onset_ticks % (kBeatsPerBar * kTpq);
    if (in_bar % kTpq != 0) return 0.0; // off the beat
    switch (in_bar / kTpq) {
    case 0: return 1.0;
    case 2: return 0.5;
    default: return 0.25;
    }
}

NoteSequence make_sequence(std::vector<Note> notes) {
    NoteSequence seq;
    seq.ticks_per_quarter = kTpq;
    seq.tempo_map = {{0, 500000}};
    seq.meter_map = {{0, 4, 4}};
    seq.notes = std::move(notes);
    annotate_times(seq);
    return seq;
}

NoteSequence render_deadpan(const std::vector<ScoreNote>& score) {
    std::vector<Note> notes;
    notes.reserve(score.size());
    for (const ScoreNote& sn : score) {
        Note n;
        n.pitch = sn.pitch;
        n.onset_ticks = sn.onset_ticks;
        n.duration_ticks = sn.duration_ticks;
        n.velocity = 64;
        notes.push_back(n);
    }
    return make_sequence(std::move(notes));
}

NoteSequence render_ai(const std::vector<ScoreNote>& score, const SynthConfig& cfg,
                       const MetricalWeights& weights, std::mt19937_64& gen) {
    const double accent_gain =
        cfg.ai_accent_gain * piece_factor(gen, cfg.piece_variation, 0.4);
    const double timing_sigma =
        cfg.ai_timing_jitter_beats * piece_factor(gen, cfg.piece_variation, 0.6);
    const double vel_jitter_scale = piece_factor(gen, cfg.piece_variation, 0.8);
    const int vel_jitter = std::max(
        1, static_cast<int>(std::lround(cfg.ai_velocity_jitter * vel_jitter_scale)));

    // One jitter per distinct score onset: chords stay chords, so the
    // rendition never reorders against the canonical (onset, pitch) order.
    std::map<std::int64_t, std::int64_t> onset_shift;
    for (const ScoreNote& sn : score) onset_shift.emplace(sn.onset_ticks, 0);
    for (auto& [onset, shift] : onset_shift)
        shift = std::llround(rng::gaussian(gen, timing_sigma) * kTpq);

    std::vector<Note> notes;
    notes.reserve(score.size());
    for (const ScoreNote& sn : score) {
        Note n;
        n.pitch = sn.pitch;
        n.onset_ticks = snap_to_grid(std::max<std::int64_t>(
            0, sn.onset_ticks + onset_shift.at(sn.onset_ticks)));
        n.duration_ticks = sn.duration_ticks;
        const int velocity = 64 +
                             static_cast<int>(std::lround(
                                 accent_gain * norm_bar_weight(weights, sn.onset_ticks))) +
                             rng::uniform_int(gen, -vel_jitter, vel_jitter);
        n.velocity = std::clamp(velocity, 1, 127);
        notes.push_back(n);
    }
    return make_sequence(std::move(notes));
}

// Performed-time map for the human rendition: per-phrase tempo arch with the
// phrase duration renormalized so phrases realign with nominal time.
class TempoWarp {
public:
    TempoWarp(int total_beats, double depth, std::mt19937_64& gen)
        : step_(1.0 / 16.0), grid_(static_cast<std::size_t>(total_beats * 16) + 1, 0.0) {
        const int phrase_beats = std::min(kPhraseBars * kBeatsPerBar, total_beats);
        const std::size_t steps_per_phrase = static_cast<std::size_t>(phrase_beats) * 16;
        std::size_t k = 0;
        while (k + 1 < grid_.size()) {
            const std::size_t end = std::min(k + steps_per_phrase, grid_.size() - 1);
            const double direction = rng::uniform_real(gen) < 0.5 ? 1.0 : -1.0;
            std::vector<double> raw(end - k);
            double raw_total = 0.0;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                const double phase = (static_cast<double>(i) + 0.5) /
                                     static_cast<double>(steps_per_phrase);
                const double rate =
                    1.0 + direction * depth * std::sin(2.0 * std::numbers::pi * phase);
                raw[i] = step_ / rate;
                raw_total += raw[i];
            }
            const double scale = step_ * static_cast<double>(raw.size()) / raw_total;
            for (std::size_t i = 0; i < raw.size(); ++i)
                grid_[k + i + 1] = grid_[k + i] + raw[i] * scale;
            k = end;
        }
    }

    double performed_beat(double beat) const {
        const double max_beat = static_cast<double>(grid_.size() - 1) * step_;
        beat = std::clamp(beat, 0.0, max_beat);
        const double pos = beat / step_;
        const auto i = std::min(static_cast<std::size_t>(pos), grid_.size() - 2);
        const double frac = pos - static_cast<double>(i);
        return grid_[i] + frac * (grid_[i + 1] - grid_[i]);
    }

private:
    double step_;
    std::vector<double> grid_; // performed beats at each nominal grid point
};

NoteSequence render_human(const std::vector<ScoreNote>& score, const SynthConfig& cfg,
                          const MetricalWeights& weights, int bars, int root,
                          std::mt19937_64& gen) {
    const double accent_gain =
        cfg.human_accent_gain * piece_factor(gen, cfg.piece_variation, 0.4);
    const double beat_gain =
        cfg.human_beat_gain * piece_factor(gen, cfg.piece_variation, 0.9);
    const double arch_depth = std::min(
        0.8, cfg.human_tempo_arch_depth * piece_factor(gen, cfg.piece_variation, 0.9));
    const int vel_jitter = std::max(
        1, static_cast<int>(std::lround(cfg.human_velocity_jitter *
                                        piece_factor(gen, cfg.piece_variation, 0.8))));
    const double artic_spread =
        cfg.human_articulation_jitter * piece_factor(gen, cfg.piece_variation, 0.5);
    const TempoWarp warp(bars * kBeatsPerBar, arch_depth, gen);

    const auto to_ticks = [&](double beat) {
        return snap_to_grid(std::llround(warp.performed_beat(beat) * kTpq));
    };

    std::vector<Note> notes;
    notes.reserve(score.size() + score.size() / 8);
    for (const ScoreNote& sn : score) {
        if (!sn.is_melody && rng::uniform_real(gen) < cfg.human_drop_rate)
            continue; // dropped accompaniment note

        const int velocity =
            50 +
            static_cast<int>(std::lround(accent_gain * norm_bar_weight(weights, sn.onset_ticks) +
                                         beat_gain * norm_beat_weight(sn.onset_ticks))) +
            rng::uniform_int(gen, -vel_jitter, vel_jitter);

        const double onset_beat = static_cast<double>(sn.onset_ticks) / kTpq;
        // Articulation: one of three legato categories per note.
        const double articulation =
            1.0 + artic_spread * (rng::uniform_int(gen, -1, 1) * 0.5);
        const double offset_beat =
            onset_beat + articulation * static_cast<double>(sn.duration_ticks) / kTpq;

        if (sn.is_melody && rng::uniform_real(gen) < cfg.human_ornament_rate) {
            // Grace note just before the melody note: the out-of-scale
            // chromatic neighbor, so it never coincides with a score pitch.
            Note grace;
            grace.pitch = std::clamp(
                in_scale(sn.pitch - 1, root) ? sn.pitch + 1 : sn.pitch - 1, 0, 127);
            const double grace_beat = std::max(0.0, onset_beat - 0.125);
            grace.onset_ticks = to_ticks(grace_beat);
            grace.duration_ticks =
                std::max<std::int64_t>(1, to_ticks(onset_beat) - grace.onset_ticks);
            grace.velocity = std::clamp(velocity - 10, 1, 127);
            notes.push_back(grace);
        }

        Note n;
        n.pitch = sn.pitch;
        n.onset_ticks = to_ticks(onset_beat);
        n.duration_ticks = std::max<std::int64_t>(1, to_ticks(offset_beat) - n.onset_ticks);
        n.velocity = std::clamp(velocity, 1, 127);
        notes.push_back(n);
    }
    return make_sequence(std::move(notes));
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::data("IoError", "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error::data("IoError", "short write to " + path.string());
}

std::string piece_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%03d", index);
    return buf;
}

} // namespace

std::vector<CorpusEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error::data("IoError", "cannot read manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error::data("MalformedManifest",
                          std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
        throw Error::data("MalformedManifest", "manifest must contain an \"entries\" array");

    const std::filesystem::path base = path.parent_path();
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    std::vector<CorpusEntry> entries;
    std::set<std::pair<std::string, std::string>> seen;
    for (const json& e : j["entries"]) {
        if (!e.is_object() || !e.contains("piece_id") || !e.contains("score") ||
            !e.contains("performance") || !e.contains("label"))
            throw Error::data("MalformedManifest",
                              "each entry needs piece_id, score, performance, label");
        CorpusEntry entry;
        entry.piece_id = e["piece_id"].get<std::string>();
        entry.score_path = resolve(e["score"].get<std::string>());
        entry.perf_path = resolve(e["performance"].get<std::string>());
        entry.label = performance_class_from_string(e["label"].get<std::string>());
        if (!std::filesystem::exists(entry.score_path))
            throw Error::data("MissingFile", "score file not found: " +
                                                 entry.score_path.string());
        if (!std::filesystem::exists(entry.perf_path))
            throw Error::data("MissingFile", "performance file not found: " +
                                                 entry.perf_path.string());
        if (!seen.emplace(entry.piece_id, entry.perf_path.string()).second)
            throw Error::data("DuplicatePieceEntry",
                              "duplicate entry for piece '" + entry.piece_id + "' and " +
                                  entry.perf_path.string());
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::filesystem::path generate_synthetic(const SynthConfig& config,
                                         const std::filesystem::path& out_dir) {
    if (config.n_pieces < 1)
        throw Error::usage("OutOfRange", "n_pieces must be >= 1");
    if (config.bars_per_piece < 4)
        throw Error::usage("OutOfRange", "bars_per_piece must be >= 4");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error::data("IoError", "cannot create " + out_dir.string());

    json manifest;
    manifest["entries"] = json::array();

    for (int piece = 0; piece < config.n_pieces; ++piece) {
        const std::uint64_t piece_seed = config.seed ^ static_cast<std::uint64_t>(piece);
        // Independent substreams so renditions never share draws.
        std::mt19937_64 gen_score(piece_seed * 0x9E3779B97F4A7C15ULL + 1);
        std::mt19937_64 gen_ai(piece_seed * 0x9E3779B97F4A7C15ULL + 2);
        std::mt19937_64 gen_human(piece_seed * 0x9E3779B97F4A7C15ULL + 3);

        int root = 60;
        const std::vector<ScoreNote> score =
            generate_score(gen_score, config.bars_per_piece, root);
        const MetricalWeights weights = metrical_weights(config.bars_per_piece);

        const std::string id = piece_name(piece);
        const std::string score_file = id + "_score.mid";
        const NoteSequence deadpan = render_deadpan(score);
        const struct {
            const char* label;
            std::string file;
            NoteSequence seq;
        } renditions[] = {
            {"score", id + "_score_render.mid", deadpan},
            {"ai", id + "_ai_render.mid", render_ai(score, config, weights, gen_ai)},
            {"human", id + "_human_render.mid",
             render_human(score, config, weights, config.bars_per_piece, root, gen_human)},
        };

        write_bytes(out_dir / score_file, write_smf0(deadpan));
        for (const auto& r : renditions) {
            write_bytes(out_dir / r.file, write_smf0(r.seq));
            manifest["entries"].push_back({{"piece_id", id},
                                           {"score", score_file},
                                           {"performance", r.file},
                                           {"label", r.label}});
        }
    }

    const std::filesystem::path manifest_path = out_dir / "manifest.json";
    const std::string text = manifest.dump(2) + "\n";
    write_bytes(manifest_path,
                std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return manifest_path;
}

std::vector<std::string> split_train_pieces(
    const std::vector<std::pair<std::string, std::vector<PerformanceClass>>>& piece_labels,
    double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw Error::usage("BadRatio", "split ratio must be in (0, 1)");
    if (piece_labels.size() < 2)
        throw Error::data("TooFewPieces", "need at least 2 pieces to split");

    // Stratify by the multiset of labels a piece contributes.
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < piece_labels.size(); ++i) {
        std::vector<int> labels;
        for (PerformanceClass c : piece_labels[i].second)
            labels.push_back(static_cast<int>(c));
        std::sort(labels.begin(), labels.end());
        std::string signature;
        for (int l : labels) signature += static_cast<char>('0' + l);
        strata[signature].push_back(i);
    }

    std::mt19937_64 gen(seed);
    std::vector<std::size_t> train_idx, test_idx;
    for (auto& [signature, members] : strata) {
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng::bounded(gen, i)]);
        const auto n_train = static_cast<std::size_t>(
            std::llround(ratio * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < n_train ? train_idx : test_idx).push_back(members[i]);
    }
    // Both sides must be non-empty.
    if (train_idx.empty()) {
        train_idx.push_back(test_idx.back());
        test_idx.pop_back();
    }
    if (test_idx.empty()) {
        test_idx.push_back(train_idx.back());
        train_idx.pop_back();
    }

    std::vector<std::string> train;
    train.reserve(train_idx.size());
    for (std::size_t i : train_idx) train.push_back(piece_labels[i].first);
    std::sort(train.begin(), train.end());
    return train;
}

std::pair<std::vector<CorpusEntry>, std::vector<CorpusEntry>> split(
    const std::vector<CorpusEntry>& entries, double ratio, std::uint64_t seed) {
    std::vector<std::pair<std::string, std::vector<PerformanceClass>>> piece_labels;
    std::map<std::string, std::size_t> index_of;
    for (const CorpusEntry& e : entries) {
        auto [it, inserted] = index_of.emplace(e.piece_id, piece_labels.size());
        if (inserted) piece_labels.push_back({e.piece_id, {}});
        piece_labels[it->second].second.push_back(e.label);
    }
    const std::vector<std::string> train_ids =
        split_train_pieces(piece_labels, ratio, seed);
    const std::set<std::string> train_set(train_ids.begin(), train_ids.end());

    std::pair<std::vector<CorpusEntry>, std::vector<CorpusEntry>> out;
    for (const CorpusEntry& e : entries)
        (train_set.contains(e.piece_id) ? out.first : out.second).push_back(e);
    return out;
}

} // namespace birkhoff
