#ifndef BIRKHOFF_EVALUATION_HPP
#define BIRKHOFF_EVALUATION_HPP

#include "birkhoff/model.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace birkhoff {

/// 3x3 counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, 3>, 3> counts{};

    void add(PerformanceClass truth, int predicted) {
        ++counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    }
    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& row : counts)
            for (std::int64_t c : row) t += c;
        return t;
    }
};

/// trace / total.
double accuracy(const ConfusionMatrix& cm);

/// Chance-corrected agreement (p_o - p_e) / (1 - p_e). When p_e = 1 the
/// value is defined as 0 and *degenerate is set.
double cohen_kappa(const ConfusionMatrix& cm, bool* degenerate = nullptr);

/// Per-class means of the 10 basic and 4 aesthetic features, with the
/// fixed column order and the higher-is-better orientation of each column.
struct FeatureMeansTable {
    static constexpr std::array<const char*, 14> columns{
        "pd", "rd", "dh", "bs", "ds", "phe", "rhe", "adc", "tv", "kc",
        "h",  "s",  "c",  "r"};
    // true = higher values carry higher aesthetic significance
    static constexpr std::array<bool, 14> higher_is_better{
        false, false, true, false, false, false, false, true, true, false,
        true,  true,  true, true};

    std::array<std::array<double, 14>, 3> means{}; // rows: score, ai, human
};

struct ClassifiedFeatures {
    PerformanceClass label = PerformanceClass::score;
    BasicFeatures basic;
    AestheticFeatures aesthetic;
};

FeatureMeansTable feature_means(std::span<const ClassifiedFeatures> samples);

struct EvalConfig {
    double ratio = 0.8;
    std::uint64_t seed = 0;
    double learning_rate = 0.01;
    int iterations = 1000;
};

struct EvaluatedModel {
    TrainedModel model;
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double kappa = 0.0;
};

/// Train on the train samples (optionally with one aesthetic term ablated)
/// and evaluate on the held-out samples.
EvaluatedModel train_and_evaluate(std::span<const LabeledSample> train,
                                  std::span<const LabeledSample> test,
                                  const TrainConfig& config);

/// Piece-stratified sample split (all renditions of a piece on one side).
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_samples(
    std::span<const LabeledSample> samples, double ratio, std::uint64_t seed);

enum class AblationVariant : int {
    full = 0,
    without_harmony = 1,
    without_symmetry = 2,
    without_chaos = 3,
    without_redundancy = 4,
};

constexpr std::array<const char*, 5> kAblationVariantNames{
    "full", "without_harmony", "without_symmetry", "without_chaos", "without_redundancy"};

struct AblationReport {
    struct Entry {
        double accuracy = 0.0;
        double kappa = 0.0;
        ConfusionMatrix confusion;
    };
    std::array<Entry, 5> variants; // indexed by AblationVariant
};

/// The five-way protocol: split by piece, train full plus the four
/// one-term-ablated models on the same train side, evaluate all on the same
/// held-out side. Variant k trains with seed = config.seed + k.
AblationReport run_ablation(std::span<const LabeledSample> samples, const EvalConfig& config);

} // namespace birkhoff

#endif
