#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "birkhoff/alignment.hpp"
#include "birkhoff/errors.hpp"
#include "birkhoff/midi.hpp"
#include "birkhoff/rng.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace birkhoff;

namespace {

// Sequence from (beat, pitch) pairs at 480 tpq, default tempo and meter.
NoteSequence make_seq(const std::vector<std::pair<double, int>>& notes) {
    NoteSequence seq;
    seq.ticks_per_quarter = 480;
    for (const auto& [beat, pitch] : notes) {
        Note n;
        n.onset_ticks = static_cast<std::int64_t>(std::llround(beat * 480));
        n.duration_ticks = 240;
        n.pitch = pitch;
        n.velocity = 64;
        seq.notes.push_back(n);
    }
    annotate_times(seq);
    return seq;
}

// Independent oracle: enumerate every strictly-increasing match set and
// cost it from scratch.
struct BruteForce {
    const NoteSequence& score;
    const NoteSequence& perf;
    AlignParams params;
    double best = std::numeric_limits<double>::infinity();

    double standalone_cost(const std::vector<std::pair<int, int>>& matches) const {
        const double s0 = score.notes.front().onset_beats;
        const double score_span = score.notes.back().onset_beats - s0;
        const double p0 = perf.notes.front().onset_beats;
        const double perf_span = perf.notes.back().onset_beats - p0;
        const double scale = perf_span > 0.0 ? score_span / perf_span : 0.0;
        double cost = 0.0;
        for (const auto& [i, j] : matches) {
            const double score_pos = score.notes[static_cast<std::size_t>(i)].onset_beats - s0;
            const double perf_pos =
                (perf.notes[static_cast<std::size_t>(j)].onset_beats - p0) * scale;
            cost += params.onset_weight * std::abs(score_pos - perf_pos);
            if (score.notes[static_cast<std::size_t>(i)].pitch !=
                perf.notes[static_cast<std::size_t>(j)].pitch)
                cost += params.pitch_mismatch_cost;
        }
        cost += params.gap_cost_score *
                static_cast<double>(score.notes.size() - matches.size());
        cost += params.gap_cost_perf *
                static_cast<double>(perf.notes.size() - matches.size());
        return cost;
    }

    void recurse(int min_i, int min_j, std::vector<std::pair<int, int>>& current) {
        best = std::min(best, standalone_cost(current));
        for (int i = min_i; i < static_cast<int>(score.notes.size()); ++i) {
            for (int j = min_j; j < static_cast<int>(perf.notes.size()); ++j) {
                current.emplace_back(i, j);
                recurse(i + 1, j + 1, current);
                current.pop_back();
            }
        }
    }

    double minimum() {
        std::vector<std::pair<int, int>> current;
        recurse(0, 0, current);
        return best;
    }
};

void check_partition_and_monotone(const NoteSequence& score, const NoteSequence& perf,
                                  const AlignmentResult& r) {
    std::vector<int> score_seen(score.notes.size(), 0), perf_seen(perf.notes.size(), 0);
    for (const auto& [i, j] : r.matches) {
        ++score_seen[static_cast<std::size_t>(i)];
        ++perf_seen[static_cast<std::size_t>(j)];
    }
    for (int i : r.missing_score) ++score_seen[static_cast<std::size_t>(i)];
    for (int j : r.extra_perf) ++perf_seen[static_cast<std::size_t>(j)];
    for (int c : score_seen) REQUIRE(c == 1);
    for (int c : perf_seen) REQUIRE(c == 1);
    for (std::size_t k = 1; k < r.matches.size(); ++k) {
        REQUIRE(r.matches[k].first > r.matches[k - 1].first);
        REQUIRE(r.matches[k].second > r.matches[k - 1].second);
    }
}

} // namespace

TEST_CASE("identical sequences align identity with zero cost") {
    const NoteSequence s =
        make_seq({{0, 60}, {1, 62}, {2, 64}, {3, 65}, {4, 67}});
    const AlignmentResult r = align(s, s);
    REQUIRE(r.matches.size() == 5);
    CHECK(r.missing_score.empty());
    CHECK(r.extra_perf.empty());
    CHECK(r.total_cost == doctest::Approx(0.0));
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(r.matches[k].first == static_cast<int>(k));
        CHECK(r.matches[k].second == static_cast<int>(k));
    }
}

TEST_CASE("missing note is detected") {
    const NoteSequence score = make_seq({{0, 60}, {1, 62}, {2, 64}});
    const NoteSequence perf = make_seq({{0, 60}, {1, 64}}); // onsets proportional
    const AlignmentResult r = align(score, perf);
    REQUIRE(r.matches.size() == 2);
    CHECK(r.matches[0] == std::pair<int, int>{0, 0});
    CHECK(r.matches[1] == std::pair<int, int>{2, 1});
    REQUIRE(r.missing_score.size() == 1);
    CHECK(r.missing_score[0] == 1);
    CHECK(r.extra_perf.empty());
    CHECK(r.total_cost == doctest::Approx(1.0));
}

TEST_CASE("extra note is detected") {
    const NoteSequence score = make_seq({{0, 60}, {1, 62}});
    const NoteSequence perf = make_seq({{0, 60}, {0.5, 61}, {1, 62}});
    const AlignmentResult r = align(score, perf);
    REQUIRE(r.matches.size() == 2);
    CHECK(r.matches[0] == std::pair<int, int>{0, 0});
    CHECK(r.matches[1] == std::pair<int, int>{1, 2});
    REQUIRE(r.extra_perf.size() == 1);
    CHECK(r.extra_perf[0] == 1);
    CHECK(r.missing_score.empty());
}

TEST_CASE("empty input is rejected") {
    const NoteSequence s = make_seq({{0, 60}});
    NoteSequence empty;
    CHECK_THROWS_WITH_AS(align(s, empty), doctest::Contains("EmptyInput"), Error);
    CHECK_THROWS_WITH_AS(align(empty, s), doctest::Contains("EmptyInput"), Error);
}

TEST_CASE("DP matches brute force on 100 random instances") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto random_seq = [&](int count) {
            std::vector<std::pair<double, int>> notes;
            double beat = 0.0;
            for (int i = 0; i < count; ++i) {
                beat += 0.25 * rng::uniform_int(gen, 0, 4);
                notes.push_back({beat, rng::uniform_int(gen, 60, 64)});
            }
            return make_seq(notes);
        };
        const NoteSequence score = random_seq(rng::uniform_int(gen, 1, 8));
        const NoteSequence perf = random_seq(rng::uniform_int(gen, 1, 8));

        AlignParams params;
        if (trial % 3 == 1) params = {0.7, 1.3, 3.0, 0.2};
        if (trial % 3 == 2) params = {2.0, 0.5, 5.0, 0.05};

        const AlignmentResult r = align(score, perf, params);
        check_partition_and_monotone(score, perf, r);

        BruteForce oracle{score, perf, params};
        CHECK(r.total_cost == doctest::Approx(oracle.minimum()).epsilon(1e-9));
    }
}

TEST_CASE("identity alignment has no gaps for random sequences") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<double, int>> notes;
        double beat = 0.0;
        const int count = rng::uniform_int(gen, 1, 30);
        for (int i = 0; i < count; ++i) {
            beat += 0.5 * rng::uniform_int(gen, 0, 3);
            notes.push_back({beat, rng::uniform_int(gen, 40, 90)});
        }
        const NoteSequence s = make_seq(notes);
        const AlignmentResult r = align(s, s);
        CHECK(r.matches.size() == s.notes.size());
        CHECK(r.missing_score.empty());
        CHECK(r.extra_perf.empty());
    }
}

TEST_CASE("local tempo curve: deadpan performance reads 120 bpm") {
    const NoteSequence score = make_seq({{0, 60}, {1, 62}, {2, 64}, {3, 65}});
    const AlignmentResult r = align(score, score);
    const std::vector<double> curve = local_tempo_curve(score, score, r);
    REQUIRE(curve.size() == 3);
    for (double bpm : curve) CHECK(bpm == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("local tempo curve: 1 beat in 0.6 s reads 100 bpm") {
    const NoteSequence score = make_seq({{0, 60}, {1, 62}});
    // 0.6 s at the default 120 bpm spans 1.2 beats = 576 ticks.
    const NoteSequence perf = make_seq({{0, 60}, {1.2, 62}});
    const AlignmentResult r = align(score, perf);
    REQUIRE(r.matches.size() == 2);
    const std::vector<double> curve = local_tempo_curve(score, perf, r);
    REQUIRE(curve.size() == 1);
    CHECK(curve[0] == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("chords contribute no tempo sample") {
    const NoteSequence score = make_seq({{0, 60}, {0, 64}, {1, 62}});
    const AlignmentResult r = align(score, score);
    REQUIRE(r.matches.size() == 3);
    const std::vector<double> curve = local_tempo_curve(score, score, r);
    CHECK(curve.size() == 1); // only the chord -> next-note pair qualifies
}

TEST_CASE("too few matches raise InsufficientMatches") {
    const NoteSequence score = make_seq({{0, 60}, {1, 62}});
    AlignmentResult one_match;
    one_match.matches = {{0, 0}};
    one_match.missing_score = {1};
    one_match.extra_perf = {1};
    CHECK_THROWS_WITH_AS(local_tempo_curve(score, score, one_match),
                         doctest::Contains("InsufficientMatches"), Error);

    // Two matches at the same score beat: no usable pair either.
    const NoteSequence chord = make_seq({{0, 60}, {0, 64}});
    const AlignmentResult r = align(chord, chord);
    REQUIRE(r.matches.size() == 2);
    CHECK_THROWS_WITH_AS(local_tempo_curve(chord, chord, r),
                         doctest::Contains("InsufficientMatches"), Error);
}
