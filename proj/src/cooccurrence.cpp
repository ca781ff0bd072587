#include "ntfhmm/cooccurrence.hpp"

namespace ntfhmm {

JointStats accumulate(const std::vector<std::vector<int>>& sequences, int n_observations) {
    if (n_observations <= 0) throw ValidationError("accumulate: n_observations must be positive");
    JointStats stats;
    stats.k = n_observations;
    stats.tensor = Tensor3(n_observations);
    stats.matrix = Matrix::Zero(n_observations, n_observations);

    for (const auto& seq : sequences) {
        for (int sym : seq)
            if (sym < 0 || sym >= n_observations)
                throw ValidationError("accumulate: symbol id " + std::to_string(sym) +
                                      " out of range");
        for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
            stats.matrix(seq[t], seq[t + 1]) += 1.0;
            ++stats.pair_count;
        }
        for (std::size_t t = 0; t + 2 < seq.size(); ++t) {
            stats.tensor(seq[t], seq[t + 1], seq[t + 2]) += 1.0;
            ++stats.triple_count;
        }
    }
    if (stats.triple_count == 0)
        throw ValidationError("accumulate: need at least one sequence of length >= 3");

    for (double& v : stats.tensor.data()) v /= static_cast<double>(stats.triple_count);
    stats.matrix /= static_cast<double>(stats.pair_count);
    return stats;
}

}  // namespace ntfhmm
