#ifndef BIRKHOFF_FEATURES_HPP
#define BIRKHOFF_FEATURES_HPP

#include "birkhoff/alignment.hpp"
#include "birkhoff/midi.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace birkhoff {

/// The 10 basic music features. `flags` records per-feature validity: false
/// means the value was imputed (degenerate or underdetermined input) and the
/// stored number is the conventional 0.
struct BasicFeatures {
    double pd = 0.0;  // pitch deviation
    double rd = 0.0;  // rhythm deviation
    double dh = 0.0;  // dynamic harmony, in [0, 1]
    double bs = 0.0;  // beat skewness
    double ds = 0.0;  // dynamic skewness
    double phe = 0.0; // pitch histogram entropy, nats
    double rhe = 0.0; // rhythm histogram entropy, nats
    double adc = 0.0; // average dynamic changes, velocity units
    double tv = 0.0;  // tempo variability, bpm
    double kc = 0.0;  // compression redundancy, in [0, 1]

    struct Flags {
        bool pd = true, rd = true, dh = true, bs = true, ds = true;
        bool phe = true, rhe = true, adc = true, tv = true, kc = true;
    } flags;

    static constexpr std::array<const char*, 10> names{
        "pd", "rd", "dh", "bs", "ds", "phe", "rhe", "adc", "tv", "kc"};

    double get(std::string_view name) const;
    bool flag(std::string_view name) const;
};

/// One positive weight per bar encoding hypermetric strength:
/// weight(b) = 1 + min(trailing_zero_bits(b), 3), pattern 4,1,2,1,3,1,2,1,...
struct MetricalWeights {
    std::vector<double> weights;
};

/// Sum |X_i - T_i| / Sum |T_i| over aligned attribute pairs.
double deviation(std::span<const double> perf_values, std::span<const double> score_values);

MetricalWeights metrical_weights(int n_bars);

/// Cosine similarity between per-bar mean velocities of the performance and
/// the metrical weights. Empty bars contribute dynamic value 0.
double dynamic_harmony(const NoteSequence& perf, const MetricalWeights& weights);

/// |third standardized moment| with population moments (divide by n).
/// Zero-variance input returns 0 and sets *degenerate when provided.
double skewness_abs(std::span<const double> samples, bool* degenerate = nullptr);

/// Shannon entropy in nats of the normalized histogram; empty bins
/// contribute nothing.
double histogram_entropy(std::span<const std::int64_t> counts);

/// Canonical note lengths in beats, thirty-second note through double whole
/// with dotted variants.
inline constexpr std::array<double, 12> kRhythmBins{0.125, 0.25, 0.375, 0.5, 0.75, 1.0,
                                                    1.5,   2.0,  3.0,   4.0, 6.0,  8.0};

/// Each note's duration in beats assigned to the nearest canonical length;
/// ties go to the shorter bin, out-of-range values clamp to the end bins.
std::array<std::int64_t, 12> rhythm_histogram(const NoteSequence& perf);

/// Mean absolute velocity difference between consecutive notes.
double average_dynamic_changes(std::span<const double> velocities);

/// Sample standard deviation (n - 1 divisor) of local tempo in bpm.
double tempo_variability(std::span<const double> bpm_samples);

/// Lossless codec handle for the redundancy feature.
class Compressor {
public:
    virtual ~Compressor() = default;
    virtual std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data) const = 0;
    virtual std::string_view name() const = 0;
};

/// Deflate at maximum setting.
class DeflateCompressor final : public Compressor {
public:
    explicit DeflateCompressor(int level = 9) : level_(level) {}
    std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data) const override;
    std::string_view name() const override { return "deflate"; }

private:
    int level_;
};

const Compressor& default_compressor();

/// clamp(1 - compressed/original, 0, 1).
double kolmogorov_redundancy(std::span<const std::uint8_t> payload,
                             const Compressor& compressor = default_compressor());

/// All 10 features from an aligned score/performance pair. Requires at least
/// 3 matches; degenerate constituents impute 0 and clear their flag.
BasicFeatures extract_all(const NoteSequence& score, const NoteSequence& perf,
                          const AlignmentResult& alignment,
                          const Compressor& compressor = default_compressor());

} // namespace birkhoff

#endif
