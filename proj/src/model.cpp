#include "birkhoff/model.hpp"

#include "birkhoff/errors.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace birkhoff {

namespace {

using nlohmann::json;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Numerically stable binary cross-entropy from the logit.
double bce_from_logit(double t, double y) {
    return std::max(t, 0.0) - t * y + std::log1p(std::exp(-std::abs(t)));
}

} // namespace

PerformanceClass performance_class_from_string(std::string_view name) {
    for (std::size_t k = 0; k < kClassNames.size(); ++k)
        if (name == kClassNames[k]) return static_cast<PerformanceClass>(k);
    throw Error::data("BadLabel", "unknown class label '" + std::string(name) + "'");
}

std::string_view to_string(PerformanceClass c) {
    return kClassNames[static_cast<std::size_t>(c)];
}

double Regressor::logit(const BasicFeatures& f) const {
    double z = bias;
    for (std::size_t k = 0; k < input_features.size(); ++k)
        z += weights[k] * (f.get(input_features[k]) - norm_mean[k]) / norm_std[k];
    return z;
}

FitOutcome fit_regressor(std::span<const BasicFeatures> samples, std::span<const int> labels,
                         const std::vector<std::string>& feature_subset,
                         const FitConfig& config) {
    const std::size_t n = samples.size();
    const std::size_t d = feature_subset.size();
    if (labels.size() != n)
        throw Error::data("LengthMismatch", "samples and labels differ in length");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1)
            throw Error::data("BadLabel", "regressor labels must be 0 or 1");
        positives += static_cast<std::size_t>(y);
    }
    if (n == 0 || positives == 0 || positives == n)
        throw Error::data("SingleClass", "need samples from both classes");

    FitOutcome out;
    Regressor& reg = out.regressor;
    reg.input_features = feature_subset;
    reg.weights.assign(d, 0.0);
    reg.norm_mean.assign(d, 0.0);
    reg.norm_std.assign(d, 1.0);
    reg.bias = 0.0;

    // z-score parameters from the training samples (population variance).
    std::vector<double> z(n * d);
    for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += samples[i].get(feature_subset[k]);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = samples[i].get(feature_subset[k]) - mean;
            var += dx * dx;
        }
        double sd = std::sqrt(var / static_cast<double>(n));
        if (sd < 1e-8) {
            sd = 1e-8;
            out.zero_variance_features.push_back(feature_subset[k]);
        }
        reg.norm_mean[k] = mean;
        reg.norm_std[k] = sd;
        for (std::size_t i = 0; i < n; ++i)
            z[i * d + k] = (samples[i].get(feature_subset[k]) - mean) / sd;
    }

    std::vector<double> grad_w(d);
    for (int iter = 0; iter < config.iterations; ++iter) {
        double loss = 0.0, grad_b = 0.0;
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double t = reg.bias;
            for (std::size_t k = 0; k < d; ++k) t += reg.weights[k] * z[i * d + k];
            const double y = labels[i];
            loss += bce_from_logit(t, y);
            const double err = sigmoid(t) - y;
            grad_b += err;
            for (std::size_t k = 0; k < d; ++k) grad_w[k] += err * z[i * d + k];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        out.loss_history.push_back(loss * inv_n);
        reg.bias -= config.learning_rate * grad_b * inv_n;
        for (std::size_t k = 0; k < d; ++k)
            reg.weights[k] -= config.learning_rate * grad_w[k] * inv_n;
    }
    // Final loss after the last update.
    double final_loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = reg.bias;
        for (std::size_t k = 0; k < d; ++k) t += reg.weights[k] * z[i * d + k];
        final_loss += bce_from_logit(t, labels[i]);
    }
    out.loss_history.push_back(final_loss / static_cast<double>(n));
    return out;
}

AestheticFeatures aesthetic_features(const BasicFeatures& f, const RegressorSet& regressors) {
    return {regressors.harmony.logit(f), regressors.symmetry.logit(f),
            regressors.chaos.logit(f), regressors.redundancy.logit(f)};
}

namespace {

// Sign-preserving magnitude floor; sign(0) counts as positive.
double floored(double den, double floor) {
    const double sign = den < 0.0 ? -1.0 : 1.0;
    return sign * std::max(std::abs(den), floor);
}

} // namespace

double aesthetic_measure(const AestheticFeatures& a, const MeasureParams& p) {
    const double num = p.w1 * a.h + p.w2 * a.s + p.theta1;
    const double den = p.w3 * a.c + p.w4 * a.r + p.theta2;
    return num / floored(den, p.denom_floor);
}

std::array<double, kMeasureParamCount> measure_params_to_array(const MeasureParams& p) {
    return {p.w1,          p.w2,          p.w3,          p.w4,
            p.theta1,      p.theta2,      p.head_slopes[0], p.head_slopes[1],
            p.head_slopes[2], p.head_biases[0], p.head_biases[1], p.head_biases[2]};
}

MeasureParams measure_params_from_array(const std::array<double, kMeasureParamCount>& v,
                                        double denom_floor) {
    MeasureParams p;
    p.w1 = v[0];
    p.w2 = v[1];
    p.w3 = v[2];
    p.w4 = v[3];
    p.theta1 = v[4];
    p.theta2 = v[5];
    p.head_slopes = {v[6], v[7], v[8]};
    p.head_biases = {v[9], v[10], v[11]};
    p.denom_floor = denom_floor;
    return p;
}

namespace {

std::array<double, 3> class_probabilities(double measure, const MeasureParams& p) {
    std::array<double, 3> z{};
    for (std::size_t k = 0; k < 3; ++k)
        z[k] = p.head_slopes[k] * measure + p.head_biases[k];
    const double zmax = std::max({z[0], z[1], z[2]});
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

} // namespace

double measure_loss(std::span<const LabeledAesthetics> dataset, const MeasureParams& p) {
    double loss = 0.0;
    for (const LabeledAesthetics& sample : dataset) {
        const double m = aesthetic_measure(sample.features, p);
        const auto probs = class_probabilities(m, p);
        loss -= std::log(std::max(probs[static_cast<std::size_t>(sample.label)], 1e-300));
    }
    return loss / static_cast<double>(dataset.size());
}

double measure_loss_and_gradient(std::span<const LabeledAesthetics> dataset,
                                 const MeasureParams& p,
                                 std::array<double, kMeasureParamCount>& grad) {
    grad.fill(0.0);
    double loss = 0.0;
    for (const LabeledAesthetics& sample : dataset) {
        const AestheticFeatures& a = sample.features;
        const double num = p.w1 * a.h + p.w2 * a.s + p.theta1;
        const double den = p.w3 * a.c + p.w4 * a.r + p.theta2;
        const double den_f = floored(den, p.denom_floor);
        const double m = num / den_f;
        const auto probs = class_probabilities(m, p);
        const auto y = static_cast<std::size_t>(sample.label);
        loss -= std::log(std::max(probs[y], 1e-300));

        double g_m = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double g_z = probs[k] - (k == y ? 1.0 : 0.0);
            grad[6 + k] += g_z * m;  // head slope
            grad[9 + k] += g_z;      // head bias
            g_m += g_z * p.head_slopes[k];
        }
        const double g_num = g_m / den_f;
        grad[0] += g_num * a.h;
        grad[1] += g_num * a.s;
        grad[4] += g_num;
        if (std::abs(den) >= p.denom_floor) {
            const double g_den = -g_m * num / (den_f * den_f);
            grad[2] += g_den * a.c;
            grad[3] += g_den * a.r;
            grad[5] += g_den;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (double& g : grad) g *= inv_n;
    return loss * inv_n;
}

MeasureFit train_measure(std::span<const LabeledAesthetics> dataset,
                         const TrainMeasureConfig& config) {
    if (dataset.empty()) throw Error::data("MissingClass", "empty training set");
    std::array<bool, 3> present{};
    for (const LabeledAesthetics& s : dataset)
        present[static_cast<std::size_t>(s.label)] = true;
    for (std::size_t k = 0; k < 3; ++k)
        if (!present[k])
            throw Error::data("MissingClass", "no samples labeled '" +
                                                  std::string(kClassNames[k]) + "'");

    MeasureFit fit;
    MeasureParams& p = fit.params;
    int fixed_omega = -1;
    if (config.ablated) {
        fixed_omega = static_cast<int>(*config.ablated);
        switch (*config.ablated) {
        case AestheticTerm::harmony: p.w1 = 0.0; break;
        case AestheticTerm::symmetry: p.w2 = 0.0; break;
        case AestheticTerm::chaos: p.w3 = 0.0; break;
        case AestheticTerm::redundancy: p.w4 = 0.0; break;
        }
    }

    std::array<double, kMeasureParamCount> grad{};
    for (int iter = 0; iter < config.iterations; ++iter) {
        const double loss = measure_loss_and_gradient(dataset, p, grad);
        if (!std::isfinite(loss))
            throw Error::numerical("NonFiniteLoss",
                                   "measure training diverged at iteration " +
                                       std::to_string(iter));
        fit.loss_history.push_back(loss);
        auto v = measure_params_to_array(p);
        for (std::size_t k = 0; k < kMeasureParamCount; ++k) {
            if (fixed_omega >= 0 && k == static_cast<std::size_t>(fixed_omega)) continue;
            v[k] -= config.learning_rate * grad[k];
        }
        p = measure_params_from_array(v, p.denom_floor);
    }
    const double final_loss = measure_loss(dataset, p);
    if (!std::isfinite(final_loss))
        throw Error::numerical("NonFiniteLoss", "final measure loss is not finite");
    fit.loss_history.push_back(final_loss);
    return fit;
}

Prediction predict(const BasicFeatures& f, const TrainedModel& model) {
    Prediction out;
    const AestheticFeatures a = aesthetic_features(f, model.regressors);
    out.measure = aesthetic_measure(a, model.measure);
    out.probabilities = class_probabilities(out.measure, model.measure);
    out.predicted_class = 0;
    for (int k = 1; k < 3; ++k)
        if (out.probabilities[static_cast<std::size_t>(k)] >
            out.probabilities[static_cast<std::size_t>(out.predicted_class)])
            out.predicted_class = k;
    return out;
}

TrainedModel train_model(std::span<const LabeledSample> samples, const TrainConfig& config,
                         std::vector<double>* measure_loss_history) {
    std::array<std::size_t, 3> counts{};
    for (const LabeledSample& s : samples) ++counts[static_cast<std::size_t>(s.label)];
    for (std::size_t k = 0; k < 3; ++k)
        if (counts[k] == 0)
            throw Error::data("MissingClass", "no samples labeled '" +
                                                  std::string(kClassNames[k]) + "'");

    // Stage 1: binary regressors on score (0) vs human (1); AI excluded.
    std::vector<BasicFeatures> binary_samples;
    std::vector<int> binary_labels;
    for (const LabeledSample& s : samples) {
        if (s.label == PerformanceClass::score) {
            binary_samples.push_back(s.features);
            binary_labels.push_back(0);
        } else if (s.label == PerformanceClass::human) {
            binary_samples.push_back(s.features);
            binary_labels.push_back(1);
        }
    }

    const FitConfig fit_config{config.learning_rate, config.iterations};
    TrainedModel model;
    model.regressors.harmony =
        fit_regressor(binary_samples, binary_labels, kHarmonyInputs, fit_config).regressor;
    model.regressors.symmetry =
        fit_regressor(binary_samples, binary_labels, kSymmetryInputs, fit_config).regressor;
    model.regressors.chaos =
        fit_regressor(binary_samples, binary_labels, kChaosInputs, fit_config).regressor;
    model.regressors.redundancy =
        fit_regressor(binary_samples, binary_labels, kRedundancyInputs, fit_config).regressor;

    // Stage 2: measure parameters on all three classes.
    std::vector<LabeledAesthetics> dataset;
    dataset.reserve(samples.size());
    for (const LabeledSample& s : samples)
        dataset.push_back({aesthetic_features(s.features, model.regressors), s.label});

    TrainMeasureConfig measure_config;
    measure_config.learning_rate = config.learning_rate;
    measure_config.iterations = config.iterations;
    measure_config.ablated = config.ablated;
    const MeasureFit fit = train_measure(dataset, measure_config);
    model.measure = fit.params;
    model.training_meta = {config.seed, config.iterations, config.learning_rate,
                           fit.loss_history.front(), fit.loss_history.back()};
    if (measure_loss_history) *measure_loss_history = fit.loss_history;
    return model;
}

namespace {

json regressor_to_json(const Regressor& r) {
    return json{{"input_features", r.input_features},
                {"weights", r.weights},
                {"bias", r.bias},
                {"norm_mean", r.norm_mean},
                {"norm_std", r.norm_std}};
}

Regressor regressor_from_json(const json& j) {
    Regressor r;
    r.input_features = j.at("input_features").get<std::vector<std::string>>();
    r.weights = j.at("weights").get<std::vector<double>>();
    r.bias = j.at("bias").get<double>();
    r.norm_mean = j.at("norm_mean").get<std::vector<double>>();
    r.norm_std = j.at("norm_std").get<std::vector<double>>();
    if (r.weights.size() != r.input_features.size() ||
        r.norm_mean.size() != r.input_features.size() ||
        r.norm_std.size() != r.input_features.size())
        throw Error::data("MalformedModel", "regressor vector lengths disagree");
    for (double sd : r.norm_std)
        if (!(sd > 0.0))
            throw Error::data("MalformedModel", "norm_std entries must be positive");
    return r;
}

} // namespace

std::string model_to_json(const TrainedModel& model) {
    json j;
    j["format_version"] = 1;
    j["class_names"] = model.class_names;
    j["regressors"] = {{"harmony", regressor_to_json(model.regressors.harmony)},
                       {"symmetry", regressor_to_json(model.regressors.symmetry)},
                       {"chaos", regressor_to_json(model.regressors.chaos)},
                       {"redundancy", regressor_to_json(model.regressors.redundancy)}};
    j["measure"] = {{"w1", model.measure.w1},
                    {"w2", model.measure.w2},
                    {"w3", model.measure.w3},
                    {"w4", model.measure.w4},
                    {"theta1", model.measure.theta1},
                    {"theta2", model.measure.theta2},
                    {"head_slopes", model.measure.head_slopes},
                    {"head_biases", model.measure.head_biases},
                    {"denom_floor", model.measure.denom_floor}};
    j["training_meta"] = {{"seed", model.training_meta.seed},
                          {"iterations", model.training_meta.iterations},
                          {"learning_rate", model.training_meta.learning_rate},
                          {"initial_loss", model.training_meta.initial_loss},
                          {"final_loss", model.training_meta.final_loss}};
    return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error::data("MalformedModel", std::string("model file is not valid JSON: ") +
                                                e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1)
            throw Error::data("MalformedModel", "unsupported model format_version");
        TrainedModel model;
        const json& regs = j.at("regressors");
        model.regressors.harmony = regressor_from_json(regs.at("harmony"));
        model.regressors.symmetry = regressor_from_json(regs.at("symmetry"));
        model.regressors.chaos = regressor_from_json(regs.at("chaos"));
        model.regressors.redundancy = regressor_from_json(regs.at("redundancy"));
        const json& m = j.at("measure");
        model.measure.w1 = m.at("w1").get<double>();
        model.measure.w2 = m.at("w2").get<double>();
        model.measure.w3 = m.at("w3").get<double>();
        model.measure.w4 = m.at("w4").get<double>();
        model.measure.theta1 = m.at("theta1").get<double>();
        model.measure.theta2 = m.at("theta2").get<double>();
        model.measure.head_slopes = m.at("head_slopes").get<std::array<double, 3>>();
        model.measure.head_biases = m.at("head_biases").get<std::array<double, 3>>();
        model.measure.denom_floor = m.at("denom_floor").get<double>();
        if (!(model.measure.denom_floor > 0.0))
            throw Error::data("MalformedModel", "denom_floor must be positive");
        const json& meta = j.at("training_meta");
        model.training_meta.seed = meta.at("seed").get<std::uint64_t>();
        model.training_meta.iterations = meta.at("iterations").get<int>();
        model.training_meta.learning_rate = meta.at("learning_rate").get<double>();
        model.training_meta.initial_loss = meta.at("initial_loss").get<double>();
        model.training_meta.final_loss = meta.at("final_loss").get<double>();
        return model;
    } catch (const json::exception& e) {
        throw Error::data("MalformedModel",
                          std::string("model file missing required fields: ") + e.what());
    }
}

} // namespace birkhoff
