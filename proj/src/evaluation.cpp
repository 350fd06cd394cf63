#include "birkhoff/evaluation.hpp"

#include "birkhoff/corpus.hpp"
#include "birkhoff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace birkhoff {

double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) throw Error::data("EmptyMatrix", "confusion matrix has no samples");
    std::int64_t trace = 0;
    for (std::size_t k = 0; k < 3; ++k) trace += cm.counts[k][k];
    return static_cast<double>(trace) / static_cast<double>(total);
}

double cohen_kappa(const ConfusionMatrix& cm, bool* degenerate) {
    if (degenerate) *degenerate = false;
    const std::int64_t total = cm.total();
    if (total == 0) throw Error::data("EmptyMatrix", "confusion matrix has no samples");
    double p_o = 0.0, p_e = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        p_o += static_cast<double>(cm.counts[k][k]);
        std::int64_t row = 0, col = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            row += cm.counts[k][j];
            col += cm.counts[j][k];
        }
        p_e += static_cast<double>(row) * static_cast<double>(col);
    }
    p_o /= static_cast<double>(total);
    p_e /= static_cast<double>(total) * static_cast<double>(total);
    if (std::abs(1.0 - p_e) < 1e-15) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return (p_o - p_e) / (1.0 - p_e);
}

FeatureMeansTable feature_means(std::span<const ClassifiedFeatures> samples) {
    FeatureMeansTable table;
    std::array<std::int64_t, 3> counts{};
    for (const ClassifiedFeatures& s : samples) {
        const auto row = static_cast<std::size_t>(s.label);
        ++counts[row];
        for (std::size_t k = 0; k < 10; ++k)
            table.means[row][k] += s.basic.get(FeatureMeansTable::columns[k]);
        table.means[row][10] += s.aesthetic.h;
        table.means[row][11] += s.aesthetic.s;
        table.means[row][12] += s.aesthetic.c;
        table.means[row][13] += s.aesthetic.r;
    }
    for (std::size_t row = 0; row < 3; ++row) {
        if (counts[row] == 0)
            throw Error::data("MissingClass", "no samples labeled '" +
                                                  std::string(kClassNames[row]) + "'");
        for (double& v : table.means[row]) v /= static_cast<double>(counts[row]);
    }
    return table;
}

EvaluatedModel train_and_evaluate(std::span<const LabeledSample> train,
                                  std::span<const LabeledSample> test,
                                  const TrainConfig& config) {
    EvaluatedModel out;
    out.model = train_model(train, config);
    if (test.empty()) throw Error::data("EmptyMatrix", "empty evaluation set");
    for (const LabeledSample& s : test)
        out.confusion.add(s.label, predict(s.features, out.model).predicted_class);
    out.accuracy = accuracy(out.confusion);
    out.kappa = cohen_kappa(out.confusion);
    return out;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_samples(
    std::span<const LabeledSample> samples, double ratio, std::uint64_t seed) {
    std::vector<std::pair<std::string, std::vector<PerformanceClass>>> piece_labels;
    std::map<std::string, std::size_t> index_of;
    for (const LabeledSample& s : samples) {
        auto [it, inserted] = index_of.emplace(s.piece_id, piece_labels.size());
        if (inserted) piece_labels.push_back({s.piece_id, {}});
        piece_labels[it->second].second.push_back(s.label);
    }
    const std::vector<std::string> train_ids = split_train_pieces(piece_labels, ratio, seed);
    const std::set<std::string> train_set(train_ids.begin(), train_ids.end());

    std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> out;
    for (const LabeledSample& s : samples)
        (train_set.contains(s.piece_id) ? out.first : out.second).push_back(s);
    return out;
}

AblationReport run_ablation(std::span<const LabeledSample> samples, const EvalConfig& config) {
    // Same piece-stratified split for every variant.
    const auto [train, test] = split_samples(samples, config.ratio, config.seed);

    AblationReport report;
    for (int variant = 0; variant < 5; ++variant) {
        TrainConfig tc;
        tc.learning_rate = config.learning_rate;
        tc.iterations = config.iterations;
        tc.seed = config.seed + static_cast<std::uint64_t>(variant);
        if (variant > 0) tc.ablated = static_cast<AestheticTerm>(variant - 1);
        const EvaluatedModel em = train_and_evaluate(train, test, tc);
        auto& entry = report.variants[static_cast<std::size_t>(variant)];
        entry.accuracy = em.accuracy;
        entry.kappa = em.kappa;
        entry.confusion = em.confusion;
    }
    return report;
}

} // namespace birkhoff
