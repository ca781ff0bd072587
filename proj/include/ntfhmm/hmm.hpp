#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ntfhmm/process_model.hpp"
#include "ntfhmm/types.hpp"

namespace ntfhmm {

/// Discrete-observation HMM with transition matrix T(dt) for a fixed time gap.
struct Hmm {
    int n_states = 0;
    int n_observations = 0;
    double dt = 0.0;
    Vector pi;  // length n_states
    Matrix T;   // n_states x n_states, row-stochastic
    Matrix E;   // n_states x n_observations, row-stochastic

    /// Throws ValidationError unless pi/T/E are stochastic within 1e-9.
    void validate() const;
};

/// exp(A) by scaling-and-squaring with Pade approximants (orders 3/5/7/9/13).
Matrix expm(const Matrix& A);

/// CTMC generator for the state space: off-diagonal (i,j) sums 1/mean_duration of
/// every activity whose completion moves state i to state j, diagonal balances the row.
/// `means` is indexed by activity id; pass sample means for ML estimation.
Matrix build_rate_matrix(const ProcessModel& model, const std::vector<SuperActivity>& states,
                         const std::vector<double>& means);

/// e^{Q dt}, checked to be row-stochastic within 1e-9 and clipped to [0, 1].
Matrix transition_matrix(const Matrix& Q, double dt);

/// Reference HMM from simulated timelines: empirical pi, ML mean durations -> Q -> T,
/// SME emission matrix passed through. Never-observed states get pi = 0 and a warning.
Hmm estimate_reference_hmm(const ProcessModel& model, const std::vector<SuperActivity>& states,
                           const std::vector<RunTimeline>& timelines, double interval,
                           const Matrix& emission, std::vector<std::string>* warnings = nullptr);

/// Empirical emission estimate from aligned (state, observation) sequences.
Matrix estimate_emission(const std::vector<std::vector<int>>& state_seqs,
                         const std::vector<std::vector<int>>& obs_seqs, int n_states,
                         int n_observations);

std::pair<std::vector<int>, std::vector<int>> sample_observations(const Hmm& hmm, int length,
                                                                  std::uint64_t seed);

/// Max-probability hidden path (log space, ties toward the lower state id).
/// Throws ValidationError naming the step if an observation is impossible in all states.
std::vector<int> viterbi(const Hmm& hmm, const std::vector<int>& observations);

/// Scaled forward algorithm; -inf for zero-probability sequences.
double log_likelihood(const Hmm& hmm, const std::vector<int>& observations);

}  // namespace ntfhmm
