#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ntfhmm/cooccurrence.hpp"
#include "ntfhmm/hmm.hpp"
#include "ntfhmm/types.hpp"

namespace ntfhmm {

/// Non-negative factors of the joint decomposition tensor ~ [[A,B,C]], matrix ~ B D B^T.
/// A, B, C are K x L (columns indexed by hidden state), D is L x L.
struct FactorSet {
    Matrix A, B, C, D;
    double objective = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;

    int rank() const { return static_cast<int>(B.cols()); }
};

struct MuOptions {
    int max_iters = 20000;
    double tol = 1e-8;                              // relative decrease over tol_window iterations
    int tol_window = 10;
    std::vector<double>* objective_history = nullptr;  // optional per-iteration J
};

/// J = 0.5 ||tensor - [[A,B,C]]||_F^2 + 0.5 ||matrix - B D B^T||_F^2.
double objective(const JointStats& stats, const FactorSet& f);

/// Entries i.i.d. U(0.1, 1) so no factor starts at the zero fixed point.
FactorSet random_factors(int n_observations, int rank, std::uint64_t seed);

/// Multiplicative updates with the four block updates, a 1e-16 denominator floor,
/// and the closing scaling pass (A and D globally normalized, B and C column-stochastic).
/// Throws DivergenceError naming the iteration if a factor turns non-finite.
FactorSet multiplicative_updates(const JointStats& stats, const FactorSet& init,
                                 const MuOptions& opts = {});
FactorSet multiplicative_updates(const JointStats& stats, int rank, std::uint64_t seed,
                                 const MuOptions& opts = {});

/// The closing scaling pass alone (exposed for its invariants).
void post_process(FactorSet& f);

/// E = B^T, T = row-normalized D, pi = column sums of A (state occupancy).
/// Zero-sum rows of D become uniform rows, with a warning.
Hmm factors_to_hmm(const FactorSet& f, double dt, std::vector<std::string>* warnings = nullptr);

}  // namespace ntfhmm
