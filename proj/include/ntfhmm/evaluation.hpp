#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ntfhmm/hmm.hpp"

namespace ntfhmm {

/// Mutual information of the empirical label joint divided by the entropy sum;
/// in [0, 0.5], and 0 by convention when both sequences are constant.
double nmi(const std::vector<int>& ref_states, const std::vector<int>& pred_states);

/// Mean over sampled reference sequences of (1/T)(log P_k(o) - log P_{k-1}(o)),
/// common random sequences for both models. Sequences impossible under either model
/// are skipped and counted in *excluded; throws if every trial is excluded.
double distance(const Hmm& best_k, const Hmm& best_k_minus_1, const Hmm& reference, int trials,
                int length, std::uint64_t seed, int* excluded = nullptr);

struct EvalRow {
    int rank = 0;
    double nmi = 0.0;
    std::optional<double> distance;  // vs the rank-1 candidate, when present
    int trials_excluded = 0;
};

/// Per-rank Viterbi NMI against a common reference sample plus the adjacent-rank
/// distance scores (the data behind the paired evaluation figures).
std::vector<EvalRow> evaluate_pipeline(const Hmm& reference, const std::map<int, Hmm>& candidates,
                                       int trials, int length, std::uint64_t seed);

}  // namespace ntfhmm
