#ifndef BIRKHOFF_MODEL_HPP
#define BIRKHOFF_MODEL_HPP

#include "birkhoff/features.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace birkhoff {

enum class PerformanceClass : int { score = 0, ai = 1, human = 2 };

constexpr std::array<const char*, 3> kClassNames{"score", "ai", "human"};

PerformanceClass performance_class_from_string(std::string_view name);
std::string_view to_string(PerformanceClass c);

/// One logistic-regression layer: z-score normalization learned from the
/// training samples, then a linear map. The aesthetic value is the
/// pre-sigmoid logit.
struct Regressor {
    std::vector<std::string> input_features;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> norm_mean;
    std::vector<double> norm_std;

    double logit(const BasicFeatures& f) const;
};

struct FitConfig {
    double learning_rate = 0.01;
    int iterations = 1000;
};

struct FitOutcome {
    Regressor regressor;
    std::vector<double> loss_history; // loss before each update, plus final
    std::vector<std::string> zero_variance_features;
};

/// Full-batch gradient descent on binary cross-entropy, zero-initialized.
/// Labels are 0 (score class) or 1 (human class).
FitOutcome fit_regressor(std::span<const BasicFeatures> samples, std::span<const int> labels,
                         const std::vector<std::string>& feature_subset,
                         const FitConfig& config = {});

struct AestheticFeatures {
    double h = 0.0; // harmony
    double s = 0.0; // symmetry
    double c = 0.0; // chaos
    double r = 0.0; // redundancy
};

/// The fixed feature wiring of the four regression layers.
inline const std::vector<std::string> kHarmonyInputs{"pd", "rd", "dh"};
inline const std::vector<std::string> kSymmetryInputs{"bs", "ds"};
inline const std::vector<std::string> kChaosInputs{"phe", "rhe", "adc", "tv"};
inline const std::vector<std::string> kRedundancyInputs{"kc"};

struct RegressorSet {
    Regressor harmony;
    Regressor symmetry;
    Regressor chaos;
    Regressor redundancy;
};

AestheticFeatures aesthetic_features(const BasicFeatures& f, const RegressorSet& regressors);

/// Ratio-measure parameters: M = (w1*H + w2*S + theta1) / (w3*C + w4*R + theta2),
/// with the denominator magnitude floored (sign-preserving) at denom_floor.
struct MeasureParams {
    double w1 = 1.0, w2 = 1.0, w3 = 1.0, w4 = 1.0;
    double theta1 = 0.0;
    double theta2 = 1.0;
    std::array<double, 3> head_slopes{-1.0, 0.0, 1.0};
    std::array<double, 3> head_biases{0.0, 0.0, 0.0};
    double denom_floor = 1e-3;
};

double aesthetic_measure(const AestheticFeatures& a, const MeasureParams& p);

enum class AestheticTerm : int { harmony = 0, symmetry = 1, chaos = 2, redundancy = 3 };

constexpr std::array<const char*, 4> kAestheticTermNames{"harmony", "symmetry", "chaos",
                                                         "redundancy"};

struct LabeledAesthetics {
    AestheticFeatures features;
    PerformanceClass label = PerformanceClass::score;
};

struct TrainMeasureConfig {
    double learning_rate = 0.01;
    int iterations = 1000;
    // Ablated term: its omega is fixed to 0 and excluded from training.
    std::optional<AestheticTerm> ablated;
};

/// Flat parameter order used by the gradient interface:
/// [w1, w2, w3, w4, theta1, theta2, a0, a1, a2, b0, b1, b2].
constexpr std::size_t kMeasureParamCount = 12;
std::array<double, kMeasureParamCount> measure_params_to_array(const MeasureParams& p);
MeasureParams measure_params_from_array(const std::array<double, kMeasureParamCount>& v,
                                        double denom_floor = 1e-3);

/// Mean softmax cross-entropy of the class heads over the dataset.
double measure_loss(std::span<const LabeledAesthetics> dataset, const MeasureParams& p);

/// Loss plus analytic gradient. Gradients through the denominator floor are
/// pass-through when |den| >= floor and zero on the floored branch.
double measure_loss_and_gradient(std::span<const LabeledAesthetics> dataset,
                                 const MeasureParams& p,
                                 std::array<double, kMeasureParamCount>& grad);

struct MeasureFit {
    MeasureParams params;
    std::vector<double> loss_history; // loss before each update, plus final
};

/// Full-batch gradient descent from the fixed initialization
/// (omega = 1, theta1 = 0, theta2 = 1, slopes (-1, 0, 1), biases 0).
MeasureFit train_measure(std::span<const LabeledAesthetics> dataset,
                         const TrainMeasureConfig& config = {});

struct TrainingMeta {
    std::uint64_t seed = 0;
    int iterations = 1000;
    double learning_rate = 0.01;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

struct TrainedModel {
    RegressorSet regressors;
    MeasureParams measure;
    std::array<std::string, 3> class_names{"score", "ai", "human"};
    TrainingMeta training_meta;
};

struct Prediction {
    double measure = 0.0;
    std::array<double, 3> probabilities{};
    int predicted_class = 0;
};

/// Softmax over the class heads; argmax ties resolve to the lower class index.
Prediction predict(const BasicFeatures& f, const TrainedModel& model);

/// One extracted corpus sample, the unit both training stages consume.
struct LabeledSample {
    std::string piece_id;
    PerformanceClass label = PerformanceClass::score;
    BasicFeatures features;
};

struct TrainConfig {
    double learning_rate = 0.01;
    int iterations = 1000;
    std::uint64_t seed = 0;
    std::optional<AestheticTerm> ablated;
};

/// Both stages end to end: the four regressors on the score/human samples
/// (binary, AI excluded), then the measure parameters on all three classes.
/// When measure_loss_history is non-null it receives the second stage's
/// loss trace.
TrainedModel train_model(std::span<const LabeledSample> samples, const TrainConfig& config = {},
                         std::vector<double>* measure_loss_history = nullptr);

/// JSON (de)serialization of the versioned model file format.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

} // namespace birkhoff

#endif
