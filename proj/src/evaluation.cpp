#include "ntfhmm/evaluation.hpp"

#include <cmath>
#include <map>

#include "ntfhmm/rng.hpp"

namespace ntfhmm {

double nmi(const std::vector<int>& ref_states, const std::vector<int>& pred_states) {
    if (ref_states.size() != pred_states.size())
        throw ValidationError("nmi: sequences must have equal length");
    if (ref_states.empty()) throw ValidationError("nmi: empty sequences");

    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> px, py;
    const double n = static_cast<double>(ref_states.size());
    for (std::size_t t = 0; t < ref_states.size(); ++t) {
        joint[{ref_states[t], pred_states[t]}] += 1.0 / n;
        px[ref_states[t]] += 1.0 / n;
        py[pred_states[t]] += 1.0 / n;
    }

    double mi = 0.0, hx = 0.0, hy = 0.0;
    for (const auto& [k, p] : joint)
        if (p > 0.0) mi += p * std::log(p / (px[k.first] * py[k.second]));
    for (const auto& [k, p] : px)
        if (p > 0.0) hx -= p * std::log(p);
    for (const auto& [k, p] : py)
        if (p > 0.0) hy -= p * std::log(p);
    if (hx + hy == 0.0) return 0.0;  // both sequences constant
    return mi / (hx + hy);
}

double distance(const Hmm& best_k, const Hmm& best_k_minus_1, const Hmm& reference, int trials,
                int length, std::uint64_t seed, int* excluded) {
    if (trials < 1 || length < 1) throw ValidationError("distance: trials and length must be >= 1");
    if (best_k.n_observations != reference.n_observations ||
        best_k_minus_1.n_observations != reference.n_observations)
        throw ValidationError("distance: candidate observation alphabets must match the reference");

    double total = 0.0;
    int used = 0, skipped = 0;
    for (int i = 0; i < trials; ++i) {
        const auto [states, obs] =
            sample_observations(reference, length, mix_seed(seed, {static_cast<std::uint64_t>(i)}));
        (void)states;
        const double a = log_likelihood(best_k, obs);
        const double b = log_likelihood(best_k_minus_1, obs);
        if (!std::isfinite(a) || !std::isfinite(b)) {
            ++skipped;
            continue;
        }
        total += (a - b) / static_cast<double>(length);
        ++used;
    }
    if (excluded) *excluded = skipped;
    if (used == 0) throw ValidationError("distance: every sampled sequence was impossible");
    return total / static_cast<double>(used);
}

std::vector<EvalRow> evaluate_pipeline(const Hmm& reference, const std::map<int, Hmm>& candidates,
                                       int trials, int length, std::uint64_t seed) {
    if (candidates.empty()) throw ValidationError("evaluate: no candidate models");
    const auto [ref_states, ref_obs] =
        sample_observations(reference, length, mix_seed(seed, {0x6e6d69ULL}));

    std::vector<EvalRow> rows;
    for (const auto& [rank, hmm] : candidates) {
        EvalRow row;
        row.rank = rank;
        row.nmi = nmi(ref_states, viterbi(hmm, ref_obs));
        const auto prev = candidates.find(rank - 1);
        if (prev != candidates.end()) {
            int skipped = 0;
            row.distance = distance(hmm, prev->second, reference, trials, length,
                                    mix_seed(seed, {0x64697374ULL}), &skipped);
            row.trials_excluded = skipped;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ntfhmm
