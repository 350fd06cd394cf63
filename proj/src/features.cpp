#include "birkhoff/features.hpp"

#include "birkhoff/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <zlib.h>

namespace birkhoff {

double BasicFeatures::get(std::string_view name) const {
    if (name == "pd") return pd;
    if (name == "rd") return rd;
    if (name == "dh") return dh;
    if (name == "bs") return bs;
    if (name == "ds") return ds;
    if (name == "phe") return phe;
    if (name == "rhe") return rhe;
    if (name == "adc") return adc;
    if (name == "tv") return tv;
    if (name == "kc") return kc;
    throw Error::usage("UnknownFeature", "no basic feature named " + std::string(name));
}

bool BasicFeatures::flag(std::string_view name) const {
    if (name == "pd") return flags.pd;
    if (name == "rd") return flags.rd;
    if (name == "dh") return flags.dh;
    if (name == "bs") return flags.bs;
    if (name == "ds") return flags.ds;
    if (name == "phe") return flags.phe;
    if (name == "rhe") return flags.rhe;
    if (name == "adc") return flags.adc;
    if (name == "tv") return flags.tv;
    if (name == "kc") return flags.kc;
    throw Error::usage("UnknownFeature", "no basic feature named " + std::string(name));
}

double deviation(std::span<const double> perf_values, std::span<const double> score_values) {
    if (perf_values.size() != score_values.size())
        throw Error::data("LengthMismatch", "attribute vectors differ in length");
    if (perf_values.empty())
        throw Error::data("LengthMismatch", "attribute vectors are empty");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < perf_values.size(); ++i) {
        num += std::abs(perf_values[i] - score_values[i]);
        den += std::abs(score_values[i]);
    }
    if (den <= 0.0)
        throw Error::numerical("ZeroReference", "reference attribute values sum to zero");
    return num / den;
}

MetricalWeights metrical_weights(int n_bars) {
    if (n_bars < 1) throw Error::data("OutOfRange", "n_bars must be >= 1");
    MetricalWeights w;
    w.weights.resize(static_cast<std::size_t>(n_bars));
    for (int b = 0; b < n_bars; ++b) {
        const int tz = b == 0 ? 3 : std::min(std::countr_zero(static_cast<unsigned>(b)), 3);
        w.weights[static_cast<std::size_t>(b)] = 1.0 + tz;
    }
    return w;
}

double dynamic_harmony(const NoteSequence& perf, const MetricalWeights& weights) {
    const std::size_t n = weights.weights.size();
    if (n == 0) throw Error::data("OutOfRange", "empty weight vector");
    std::vector<double> velocity_sum(n, 0.0);
    std::vector<std::int64_t> counts(n, 0);
    for (const Note& note : perf.notes) {
        const auto b = static_cast<std::size_t>(note.bar_index);
        if (b < n) {
            velocity_sum[b] += note.velocity;
            ++counts[b];
        }
    }
    double dot = 0.0, dd = 0.0, mm = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        const double d = counts[b] > 0 ? velocity_sum[b] / static_cast<double>(counts[b]) : 0.0;
        const double m = weights.weights[b];
        dot += d * m;
        dd += d * d;
        mm += m * m;
    }
    if (dd <= 0.0)
        throw Error::data("ZeroVector", "performance has no notes inside the bar range");
    return dot / std::sqrt(dd * mm);
}

double skewness_abs(std::span<const double> samples, bool* degenerate) {
    if (degenerate) *degenerate = false;
    const std::size_t n = samples.size();
    if (n < 3) throw Error::data("TooFewSamples", "skewness needs at least 3 samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (double x : samples) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    if (m2 <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0; // zero-variance convention: the symmetric limit
    }
    const double value = std::abs(m3 / (m2 * std::sqrt(m2)));
    if (!std::isfinite(value)) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return value;
}

double histogram_entropy(std::span<const std::int64_t> counts) {
    std::int64_t total = 0;
    for (std::int64_t c : counts) {
        if (c < 0) throw Error::data("NegativeCount", "histogram counts must be >= 0");
        total += c;
    }
    if (total == 0) throw Error::data("EmptyHistogram", "histogram has no mass");
    double entropy = 0.0;
    for (std::int64_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        entropy -= p * std::log(p);
    }
    return entropy;
}

std::array<std::int64_t, 12> rhythm_histogram(const NoteSequence& perf) {
    if (perf.notes.empty())
        throw Error::data("EmptySequence", "cannot histogram an empty performance");
    std::array<std::int64_t, 12> counts{};
    for (const Note& note : perf.notes) {
        std::size_t best = 0;
        double best_dist = std::abs(note.duration_beats - kRhythmBins[0]);
        for (std::size_t k = 1; k < kRhythmBins.size(); ++k) {
            const double dist = std::abs(note.duration_beats - kRhythmBins[k]);
            if (dist < best_dist) { // strict: ties stay with the shorter bin
                best_dist = dist;
                best = k;
            }
        }
        ++counts[best];
    }
    return counts;
}

double average_dynamic_changes(std::span<const double> velocities) {
    if (velocities.size() < 2)
        throw Error::data("TooFewNotes", "dynamic changes need at least 2 notes");
    double sum = 0.0;
    for (std::size_t i = 1; i < velocities.size(); ++i)
        sum += std::abs(velocities[i] - velocities[i - 1]);
    return sum / static_cast<double>(velocities.size() - 1);
}

double tempo_variability(std::span<const double> bpm_samples) {
    const std::size_t n = bpm_samples.size();
    if (n < 2) throw Error::data("TooFewSamples", "tempo variability needs >= 2 samples");
    double mean = 0.0;
    for (double t : bpm_samples) mean += t;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double t : bpm_samples) {
        const double d = t - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

std::vector<std::uint8_t> DeflateCompressor::compress(
    std::span<const std::uint8_t> data) const {
    uLongf bound = compressBound(static_cast<uLong>(data.size()));
    std::vector<std::uint8_t> out(bound);
    const int rc = compress2(out.data(), &bound, data.data(),
                             static_cast<uLong>(data.size()), level_);
    if (rc != Z_OK)
        throw Error::numerical("CompressorFailure",
                               "deflate failed with zlib code " + std::to_string(rc));
    out.resize(bound);
    return out;
}

const Compressor& default_compressor() {
    static const DeflateCompressor instance(9);
    return instance;
}

double kolmogorov_redundancy(std::span<const std::uint8_t> payload,
                             const Compressor& compressor) {
    if (payload.size() < 10)
        throw Error::data("PayloadTooShort", "need at least one 10-byte record");
    const std::vector<std::uint8_t> packed = compressor.compress(payload);
    const double ratio = 1.0 - static_cast<double>(packed.size()) /
                                   static_cast<double>(payload.size());
    return std::clamp(ratio, 0.0, 1.0);
}

namespace {

// Nearest preceding local-tempo sample; before the first anchor the first
// sample applies.
double bpm_at(const std::vector<TempoSample>& samples, double perf_seconds) {
    double bpm = samples.front().bpm;
    for (const TempoSample& s : samples) {
        if (s.perf_onset_seconds > perf_seconds) break;
        bpm = s.bpm;
    }
    return bpm;
}

} // namespace

BasicFeatures extract_all(const NoteSequence& score, const NoteSequence& perf,
                          const AlignmentResult& alignment, const Compressor& compressor) {
    if (alignment.matches.size() < 3)
        throw Error::data("InsufficientAlignment", "need at least 3 matched notes");

    BasicFeatures f;

    // Pitch deviation over matched notes.
    std::vector<double> score_pitch, perf_pitch;
    score_pitch.reserve(alignment.matches.size());
    perf_pitch.reserve(alignment.matches.size());
    for (const auto& [si, pj] : alignment.matches) {
        score_pitch.push_back(score.notes[static_cast<std::size_t>(si)].pitch);
        perf_pitch.push_back(perf.notes[static_cast<std::size_t>(pj)].pitch);
    }
    f.pd = deviation(perf_pitch, score_pitch);

    // Local tempo; several features fall back to imputed values without it.
    std::vector<TempoSample> tempo;
    bool have_tempo = true;
    try {
        tempo = local_tempo_samples(score, perf, alignment);
    } catch (const Error&) {
        have_tempo = false;
    }

    // Rhythm deviation: durations in beats on both sides; performance
    // seconds -> beats via the local tempo active at each note.
    if (have_tempo) {
        std::vector<double> score_dur, perf_dur;
        score_dur.reserve(alignment.matches.size());
        perf_dur.reserve(alignment.matches.size());
        for (const auto& [si, pj] : alignment.matches) {
            const Note& sn = score.notes[static_cast<std::size_t>(si)];
            const Note& pn = perf.notes[static_cast<std::size_t>(pj)];
            score_dur.push_back(sn.duration_beats);
            perf_dur.push_back(pn.duration_seconds * bpm_at(tempo, pn.onset_seconds) / 60.0);
        }
        f.rd = deviation(perf_dur, score_dur);
    } else {
        f.rd = 0.0;
        f.flags.rd = false;
    }

    f.dh = dynamic_harmony(perf, metrical_weights(perf.n_bars));

    // Beat skewness over consecutive inter-onset intervals in beats.
    {
        std::vector<double> iois;
        for (std::size_t i = 1; i < perf.notes.size(); ++i)
            iois.push_back(perf.notes[i].onset_beats - perf.notes[i - 1].onset_beats);
        if (iois.size() >= 3) {
            bool degenerate = false;
            f.bs = skewness_abs(iois, &degenerate);
            f.flags.bs = !degenerate;
        } else {
            f.flags.bs = false;
        }
    }

    // Dynamic skewness over performance velocities.
    {
        std::vector<double> vels;
        vels.reserve(perf.notes.size());
        for (const Note& n : perf.notes) vels.push_back(n.velocity);
        if (vels.size() >= 3) {
            bool degenerate = false;
            f.ds = skewness_abs(vels, &degenerate);
            f.flags.ds = !degenerate;
        } else {
            f.flags.ds = false;
        }
    }

    // Pitch histogram entropy, 128 absolute-pitch bins.
    {
        std::array<std::int64_t, 128> pitch_counts{};
        for (const Note& n : perf.notes)
            ++pitch_counts[static_cast<std::size_t>(n.pitch)];
        f.phe = histogram_entropy(pitch_counts);
    }

    {
        const auto rhythm = rhythm_histogram(perf);
        f.rhe = histogram_entropy(rhythm);
    }

    // Average dynamic changes over matched performance notes in order.
    {
        std::vector<double> matched_vels;
        matched_vels.reserve(alignment.matches.size());
        for (const auto& [si, pj] : alignment.matches)
            matched_vels.push_back(perf.notes[static_cast<std::size_t>(pj)].velocity);
        if (matched_vels.size() >= 2) {
            f.adc = average_dynamic_changes(matched_vels);
        } else {
            f.flags.adc = false;
        }
    }

    if (have_tempo && tempo.size() >= 2) {
        std::vector<double> bpm;
        bpm.reserve(tempo.size());
        for (const TempoSample& s : tempo) bpm.push_back(s.bpm);
        f.tv = tempo_variability(bpm);
    } else {
        f.flags.tv = false;
    }

    f.kc = kolmogorov_redundancy(canonical_serialize(perf), compressor);

    return f;
}

} // namespace birkhoff
