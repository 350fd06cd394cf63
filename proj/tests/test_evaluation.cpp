#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "birkhoff/errors.hpp"
#include "birkhoff/evaluation.hpp"
#include "birkhoff/rng.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace birkhoff;

namespace {

ConfusionMatrix from_rows(const std::array<std::array<std::int64_t, 3>, 3>& rows) {
    ConfusionMatrix cm;
    cm.counts = rows;
    return cm;
}

} // namespace

TEST_CASE("accuracy hand values") {
    CHECK(accuracy(from_rows({{{5, 0, 0}, {0, 7, 0}, {0, 0, 3}}})) == doctest::Approx(1.0));
    CHECK(accuracy(from_rows({{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}})) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(accuracy(ConfusionMatrix{}), doctest::Contains("EmptyMatrix"), Error);
}

TEST_CASE("kappa hand values") {
    CHECK(cohen_kappa(from_rows({{{5, 0, 0}, {0, 7, 0}, {0, 0, 3}}})) == doctest::Approx(1.0));

    // the 2x2 case [[20, 5], [10, 15]] embedded in the 3x3 matrix
    CHECK(cohen_kappa(from_rows({{{20, 5, 0}, {10, 15, 0}, {0, 0, 0}}})) ==
          doctest::Approx(0.4).epsilon(1e-12));

    bool degenerate = false;
    CHECK(cohen_kappa(from_rows({{{9, 0, 0}, {0, 0, 0}, {0, 0, 0}}}), &degenerate) == 0.0);
    CHECK(degenerate); // p_e = 1
}

TEST_CASE("kappa stays at or below one, equality only for diagonal matrices") {
    std::mt19937_64 gen(19);
    for (int trial = 0; trial < 100; ++trial) {
        ConfusionMatrix cm;
        std::int64_t off_diagonal = 0;
        for (auto& row : cm.counts)
            for (auto& c : row) c = static_cast<std::int64_t>(rng::bounded(gen, 10));
        if (cm.total() == 0) cm.counts[0][0] = 1;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                if (r != c) off_diagonal += cm.counts[r][c];
        bool degenerate = false;
        const double kappa = cohen_kappa(cm, &degenerate);
        CHECK(kappa <= 1.0 + 1e-12);
        if (!degenerate && off_diagonal > 0) CHECK(kappa < 1.0);
    }
}

TEST_CASE("accuracy and kappa are invariant under joint row/column permutation") {
    const ConfusionMatrix cm = from_rows({{{12, 2, 1}, {3, 9, 2}, {0, 4, 10}}});
    // permutation (0 1 2) -> (2 0 1)
    const std::array<std::size_t, 3> perm{2, 0, 1};
    ConfusionMatrix permuted;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            permuted.counts[perm[r]][perm[c]] = cm.counts[r][c];
    CHECK(accuracy(permuted) == doctest::Approx(accuracy(cm)).epsilon(1e-12));
    CHECK(cohen_kappa(permuted) == doctest::Approx(cohen_kappa(cm)).epsilon(1e-12));
}

namespace {

ClassifiedFeatures sample_for(PerformanceClass label, double base) {
    ClassifiedFeatures s;
    s.label = label;
    s.basic.pd = base;
    s.basic.dh = base / 2;
    s.basic.kc = base / 4;
    s.aesthetic = {base, -base, 2 * base, 0.0};
    return s;
}

} // namespace

TEST_CASE("feature means reproduce single samples and duplicates") {
    std::vector<ClassifiedFeatures> samples{sample_for(PerformanceClass::score, 1.0),
                                            sample_for(PerformanceClass::ai, 2.0),
                                            sample_for(PerformanceClass::human, 3.0)};
    const FeatureMeansTable table = feature_means(samples);
    CHECK(table.means[0][0] == 1.0);  // pd of the score row
    CHECK(table.means[1][2] == 1.0);  // dh of the ai row
    CHECK(table.means[2][10] == 3.0); // h of the human row
    CHECK(table.means[2][11] == -3.0);

    samples.push_back(sample_for(PerformanceClass::human, 3.0));
    const FeatureMeansTable doubled = feature_means(samples);
    CHECK(doubled.means[2][10] == 3.0); // two identical samples, same mean

    const std::vector<ClassifiedFeatures> incomplete{
        sample_for(PerformanceClass::score, 1.0), sample_for(PerformanceClass::ai, 2.0)};
    CHECK_THROWS_WITH_AS(feature_means(incomplete), doctest::Contains("MissingClass"), Error);
}

TEST_CASE("feature means column order and orientation") {
    CHECK(FeatureMeansTable::columns ==
          std::array<const char*, 14>{"pd", "rd", "dh", "bs", "ds", "phe", "rhe", "adc",
                                      "tv", "kc", "h", "s", "c", "r"});
    CHECK_FALSE(FeatureMeansTable::higher_is_better[0]); // PD down
    CHECK(FeatureMeansTable::higher_is_better[2]);       // DH up
    CHECK(FeatureMeansTable::higher_is_better[7]);       // ADC up
    CHECK(FeatureMeansTable::higher_is_better[8]);       // TV up
    CHECK_FALSE(FeatureMeansTable::higher_is_better[9]); // KC down
    for (std::size_t k = 10; k < 14; ++k) CHECK(FeatureMeansTable::higher_is_better[k]);
}

namespace {

// Ten pieces whose classes are separable through dh/adc/tv while kc stays
// constant, so the redundancy regressor trains to an exactly-zero logit.
std::vector<LabeledSample> synthetic_samples() {
    std::mt19937_64 gen(101);
    std::vector<LabeledSample> samples;
    for (int piece = 0; piece < 10; ++piece) {
        for (int cls = 0; cls < 3; ++cls) {
            BasicFeatures f;
            f.dh = 0.2 + 0.25 * cls + rng::uniform_range(gen, -0.04, 0.04);
            f.adc = 0.5 + 3.0 * cls + rng::uniform_range(gen, -0.4, 0.4);
            f.tv = 1.0 + 4.0 * cls + rng::uniform_range(gen, -0.6, 0.6);
            f.bs = 0.8 - 0.15 * cls + rng::uniform_range(gen, -0.05, 0.05);
            f.ds = 0.6 - 0.1 * cls + rng::uniform_range(gen, -0.05, 0.05);
            f.phe = 3.2 + rng::uniform_range(gen, -0.1, 0.1);
            f.rhe = 1.6 + rng::uniform_range(gen, -0.1, 0.1);
            f.kc = 0.5; // constant on purpose
            samples.push_back({"piece" + std::to_string(piece),
                               static_cast<PerformanceClass>(cls), f});
        }
    }
    return samples;
}

} // namespace

TEST_CASE("run_ablation produces five variants and respects zero regressors") {
    const std::vector<LabeledSample> samples = synthetic_samples();
    EvalConfig config;
    config.ratio = 0.8;
    config.seed = 3;
    const AblationReport report = run_ablation(samples, config);

    CHECK(kAblationVariantNames.size() == 5);
    for (const auto& entry : report.variants) {
        CHECK(entry.accuracy >= 0.0);
        CHECK(entry.accuracy <= 1.0);
        CHECK(entry.kappa <= 1.0);
        CHECK(entry.confusion.total() == 6); // 2 held-out pieces x 3 renditions
    }

    // kc is constant, so the redundancy logit is identically zero and
    // removing that term cannot change anything.
    const auto& full = report.variants[static_cast<std::size_t>(AblationVariant::full)];
    const auto& no_r =
        report.variants[static_cast<std::size_t>(AblationVariant::without_redundancy)];
    CHECK(no_r.accuracy == doctest::Approx(full.accuracy).epsilon(1e-9));
    CHECK(no_r.kappa == doctest::Approx(full.kappa).epsilon(1e-9));
}

TEST_CASE("evaluation is deterministic") {
    const std::vector<LabeledSample> samples = synthetic_samples();
    EvalConfig config;
    config.seed = 5;
    const AblationReport a = run_ablation(samples, config);
    const AblationReport b = run_ablation(samples, config);
    for (std::size_t v = 0; v < 5; ++v) {
        CHECK(a.variants[v].accuracy == b.variants[v].accuracy);
        CHECK(a.variants[v].kappa == b.variants[v].kappa);
        CHECK(a.variants[v].confusion.counts == b.variants[v].confusion.counts);
    }
}

TEST_CASE("split_samples is a piece-stratified partition") {
    const std::vector<LabeledSample> samples = synthetic_samples();
    const auto [train, test] = split_samples(samples, 0.8, 9);
    CHECK(train.size() + test.size() == samples.size());
    CHECK(train.size() == 24); // 8 of 10 pieces
    for (const LabeledSample& t : test)
        for (const LabeledSample& tr : train) CHECK(t.piece_id != tr.piece_id);

    const auto [train2, test2] = split_samples(samples, 0.8, 9);
    CHECK(train2.size() == train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        CHECK(train2[i].piece_id == train[i].piece_id);
}
