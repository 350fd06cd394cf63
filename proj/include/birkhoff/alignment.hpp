#ifndef BIRKHOFF_ALIGNMENT_HPP
#define BIRKHOFF_ALIGNMENT_HPP

#include "birkhoff/midi.hpp"

#include <utility>
#include <vector>

namespace birkhoff {

struct AlignParams {
    double gap_cost_score = 1.0;     // unmatched score note
    double gap_cost_perf = 1.0;      // unmatched performance note
    double pitch_mismatch_cost = 4.0;
    double onset_weight = 0.1;       // per beat of normalized onset discrepancy
};

/// Order-preserving note-to-note matches plus the unmatched notes on each
/// side. Match indices are strictly increasing in both coordinates, and
/// matches + missing_score partition the score indices (likewise matches +
/// extra_perf for the performance).
struct AlignmentResult {
    std::vector<std::pair<int, int>> matches; // (score_index, perf_index)
    std::vector<int> missing_score;
    std::vector<int> extra_perf;
    double total_cost = 0.0;
};

/// Minimum-cost monotone alignment under a Needleman-Wunsch cost model:
/// match cost = pitch_mismatch_cost * [pitch differs]
///            + onset_weight * |score onset - rescaled perf onset|,
/// with performance onsets linearly rescaled onto the score beat span.
/// Ties prefer match over gap, then score-gap over perf-gap.
AlignmentResult align(const NoteSequence& score, const NoteSequence& perf,
                      const AlignParams& params = {});

/// One local tempo estimate anchored at the performance time it starts from.
struct TempoSample {
    double perf_onset_seconds;
    double bpm;
};

/// Local tempo from consecutive matched pairs: 60 * delta_beats / delta_secs
/// for pairs with both deltas positive; chord pairs (delta_beats = 0) are
/// skipped. Throws InsufficientMatches when no sample can be produced.
std::vector<TempoSample> local_tempo_samples(const NoteSequence& score,
                                             const NoteSequence& perf,
                                             const AlignmentResult& alignment);

/// Same, bpm values only.
std::vector<double> local_tempo_curve(const NoteSequence& score, const NoteSequence& perf,
                                      const AlignmentResult& alignment);

} // namespace birkhoff

#endif
