#include "birkhoff/alignment.hpp"

#include "birkhoff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace birkhoff {

namespace {

enum class Step : std::uint8_t { none, match, gap_score, gap_perf };

} // namespace

AlignmentResult align(const NoteSequence& score, const NoteSequence& perf,
                      const AlignParams& params) {
    const std::size_t n = score.notes.size();
    const std::size_t m = perf.notes.size();
    if (n == 0 || m == 0)
        throw Error::data("EmptyInput", "both sequences must contain notes");

    // Rescale performance onsets so both spans are [0, total_score_beats];
    // performances have free global tempo, only relative placement counts.
    const double s0 = score.notes.front().onset_beats;
    const double score_span = score.notes.back().onset_beats - s0;
    const double p0 = perf.notes.front().onset_beats;
    const double perf_span = perf.notes.back().onset_beats - p0;
    const double scale = perf_span > 0.0 ? score_span / perf_span : 0.0;

    std::vector<double> score_pos(n), perf_pos(m);
    for (std::size_t i = 0; i < n; ++i) score_pos[i] = score.notes[i].onset_beats - s0;
    for (std::size_t j = 0; j < m; ++j)
        perf_pos[j] = (perf.notes[j].onset_beats - p0) * scale;

    const auto match_cost = [&](std::size_t i, std::size_t j) {
        double c = params.onset_weight * std::abs(score_pos[i] - perf_pos[j]);
        if (score.notes[i].pitch != perf.notes[j].pitch) c += params.pitch_mismatch_cost;
        return c;
    };

    // dp[i][j]: cost of aligning the first i score notes with the first j
    // performance notes. Tie-break on equal cost: match, then score gap,
    // then perf gap.
    const std::size_t cols = m + 1;
    std::vector<double> dp((n + 1) * cols);
    std::vector<Step> step((n + 1) * cols, Step::none);
    for (std::size_t j = 1; j <= m; ++j) {
        dp[j] = dp[j - 1] + params.gap_cost_perf;
        step[j] = Step::gap_perf;
    }
    for (std::size_t i = 1; i <= n; ++i) {
        dp[i * cols] = dp[(i - 1) * cols] + params.gap_cost_score;
        step[i * cols] = Step::gap_score;
        for (std::size_t j = 1; j <= m; ++j) {
            const double via_match = dp[(i - 1) * cols + (j - 1)] + match_cost(i - 1, j - 1);
            const double via_sgap = dp[(i - 1) * cols + j] + params.gap_cost_score;
            const double via_pgap = dp[i * cols + (j - 1)] + params.gap_cost_perf;
            double best = via_match;
            Step chosen = Step::match;
            if (via_sgap < best) {
                best = via_sgap;
                chosen = Step::gap_score;
            }
            if (via_pgap < best) {
                best = via_pgap;
                chosen = Step::gap_perf;
            }
            dp[i * cols + j] = best;
            step[i * cols + j] = chosen;
        }
    }

    AlignmentResult result;
    result.total_cost = dp[n * cols + m];
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        switch (step[i * cols + j]) {
        case Step::match:
            --i;
            --j;
            result.matches.emplace_back(static_cast<int>(i), static_cast<int>(j));
            break;
        case Step::gap_score:
            --i;
            result.missing_score.push_back(static_cast<int>(i));
            break;
        case Step::gap_perf:
            --j;
            result.extra_perf.push_back(static_cast<int>(j));
            break;
        case Step::none:
            throw Error::numerical("InternalError", "alignment backtrack escaped the table");
        }
    }
    std::reverse(result.matches.begin(), result.matches.end());
    std::reverse(result.missing_score.begin(), result.missing_score.end());
    std::reverse(result.extra_perf.begin(), result.extra_perf.end());
    return result;
}

std::vector<TempoSample> local_tempo_samples(const NoteSequence& score,
                                             const NoteSequence& perf,
                                             const AlignmentResult& alignment) {
    if (alignment.matches.size() < 2)
        throw Error::data("InsufficientMatches",
                          "need at least two matches to estimate tempo");
    std::vector<TempoSample> samples;
    for (std::size_t k = 1; k < alignment.matches.size(); ++k) {
        const auto& [si0, pj0] = alignment.matches[k - 1];
        const auto& [si1, pj1] = alignment.matches[k];
        const double db = score.notes[static_cast<std::size_t>(si1)].onset_beats -
                          score.notes[static_cast<std::size_t>(si0)].onset_beats;
        const double ds = perf.notes[static_cast<std::size_t>(pj1)].onset_seconds -
                          perf.notes[static_cast<std::size_t>(pj0)].onset_seconds;
        if (db > 0.0 && ds > 0.0)
            samples.push_back({perf.notes[static_cast<std::size_t>(pj0)].onset_seconds,
                               60.0 * db / ds});
    }
    if (samples.empty())
        throw Error::data("InsufficientMatches",
                          "no matched pair with positive beat and time deltas");
    return samples;
}

std::vector<double> local_tempo_curve(const NoteSequence& score, const NoteSequence& perf,
                                      const AlignmentResult& alignment) {
    std::vector<double> bpm;
    for (const TempoSample& s : local_tempo_samples(score, perf, alignment))
        bpm.push_back(s.bpm);
    return bpm;
}

} // namespace birkhoff
