#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ntfhmm/cooccurrence.hpp"
#include "ntfhmm/factorization.hpp"
#include "ntfhmm/hmm.hpp"
#include "ntfhmm/rng.hpp"
#include "ntfhmm/types.hpp"

namespace test_util {

using ntfhmm::Hmm;
using ntfhmm::JointStats;
using ntfhmm::Matrix;
using ntfhmm::Tensor3;
using ntfhmm::Vector;

// Truncated Taylor-series oracle with pre-scaling, independent of the Pade path.
inline Matrix taylor_expm(const Matrix& A, int terms = 60) {
    const auto n = A.rows();
    const int s = 40;
    const Matrix As = A / std::pow(2.0, s);
    Matrix X = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= terms; ++k) {
        term = term * As / static_cast<double>(k);
        X += term;
    }
    for (int i = 0; i < s; ++i) X = X * X;
    return X;
}

inline Vector stationary(const Matrix& T, int iters = 200000) {
    Vector p = Vector::Constant(T.rows(), 1.0 / T.rows());
    for (int i = 0; i < iters; ++i) {
        Vector next = T.transpose() * p;
        if ((next - p).cwiseAbs().maxCoeff() < 1e-15) return next;
        p = next;
    }
    return p;
}

// Exhaustive path enumeration oracles for small instances.
inline double brute_force_log_likelihood(const Hmm& hmm, const std::vector<int>& obs) {
    const int n = hmm.n_states;
    const auto T_len = obs.size();
    double total = 0.0;
    std::vector<int> path(T_len, 0);
    for (;;) {
        double p = hmm.pi(path[0]) * hmm.E(path[0], obs[0]);
        for (std::size_t t = 1; t < T_len; ++t)
            p *= hmm.T(path[t - 1], path[t]) * hmm.E(path[t], obs[t]);
        total += p;
        std::size_t pos = 0;
        while (pos < T_len && ++path[pos] == n) path[pos++] = 0;
        if (pos == T_len) break;
    }
    return total > 0.0 ? std::log(total) : -std::numeric_limits<double>::infinity();
}

inline std::pair<std::vector<int>, double> brute_force_viterbi(const Hmm& hmm,
                                                               const std::vector<int>& obs) {
    const int n = hmm.n_states;
    const auto T_len = obs.size();
    std::vector<int> best_path(T_len, 0), path(T_len, 0);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        double lp = std::log(std::max(hmm.pi(path[0]), 0.0)) +
                    std::log(std::max(hmm.E(path[0], obs[0]), 0.0));
        for (std::size_t t = 1; t < T_len; ++t)
            lp += std::log(std::max(hmm.T(path[t - 1], path[t]), 0.0)) +
                  std::log(std::max(hmm.E(path[t], obs[t]), 0.0));
        if (lp > best) {
            best = lp;
            best_path = path;
        }
        std::size_t pos = 0;
        while (pos < T_len && ++path[pos] == n) path[pos++] = 0;
        if (pos == T_len) break;
    }
    return {best_path, best};
}

inline Matrix random_stochastic(int rows, int cols, std::mt19937_64& eng, double floor = 0.05) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = floor + ntfhmm::uniform01(eng);
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

inline Hmm random_hmm(int n_states, int n_observations, std::uint64_t seed) {
    auto eng = ntfhmm::make_engine(seed);
    Hmm hmm;
    hmm.n_states = n_states;
    hmm.n_observations = n_observations;
    hmm.dt = 1.0;
    hmm.T = random_stochastic(n_states, n_states, eng);
    hmm.E = random_stochastic(n_states, n_observations, eng);
    Vector pi(n_states);
    for (int i = 0; i < n_states; ++i) pi(i) = 0.05 + ntfhmm::uniform01(eng);
    hmm.pi = pi / pi.sum();
    return hmm;
}

// Exact joint statistics of a stationary HMM:
// A = E^T diag(p) T (per-column scaled), B = E^T, C = E^T T^T, D = diag(p) T.
inline ntfhmm::FactorSet hmm_to_factors(const Hmm& hmm) {
    const Vector p = stationary(hmm.T);
    ntfhmm::FactorSet f;
    f.B = hmm.E.transpose();
    f.C = hmm.E.transpose() * hmm.T.transpose();
    f.A = hmm.E.transpose() * (p.asDiagonal() * hmm.T);
    f.D = p.asDiagonal() * hmm.T;
    return f;
}

inline JointStats exact_stats(const ntfhmm::FactorSet& f) {
    const int K = static_cast<int>(f.B.rows());
    const int L = f.rank();
    JointStats stats;
    stats.k = K;
    stats.tensor = Tensor3(K);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                double acc = 0.0;
                for (int n = 0; n < L; ++n) acc += f.A(i, n) * f.B(j, n) * f.C(k, n);
                stats.tensor(i, j, k) = acc;
            }
    stats.matrix = f.B * f.D * f.B.transpose();
    stats.triple_count = 1;
    stats.pair_count = 1;
    return stats;
}

// Smallest max-entry deviation between rows of `got` and `want` over all row
// permutations (wraps state-label ambiguity).
inline double best_permutation_dev(const Matrix& got, const Matrix& want) {
    std::vector<int> perm(got.rows());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double dev = 0.0;
        for (Eigen::Index i = 0; i < got.rows(); ++i)
            dev = std::max(dev, (got.row(perm[i]) - want.row(i)).cwiseAbs().maxCoeff());
        best = std::min(best, dev);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// ---- printed fixtures ----

inline Matrix q_sequential() {
    Matrix Q(3, 3);
    Q << -1.0 / 86, 1.0 / 86, 0.0,
         0.0, -1.0 / 91, 1.0 / 91,
         1.0 / 163, 0.0, -1.0 / 163;
    return Q;
}

inline Matrix t20_sequential_printed() {
    Matrix T(3, 3);
    T << 0.793, 0.185, 0.021,
         0.011, 0.804, 0.185,
         0.103, 0.012, 0.885;
    return T;
}

inline Matrix emission_sequential() {
    Matrix E(3, 4);
    E << 0.1, 0.15, 0.65, 0.1,
         0.05, 0.1, 0.5, 0.35,
         0.15, 0.7, 0.05, 0.1;
    return E;
}

inline Matrix emission_tensor_sequential_printed() {
    Matrix E(3, 4);
    E << 0.098, 0.149, 0.641, 0.113,
         0.046, 0.095, 0.496, 0.363,
         0.15, 0.7, 0.05, 0.099;
    return E;
}

inline Matrix t20_tensor_sequential_printed() {
    Matrix T(3, 3);
    T << 0.809, 0.168, 0.023,
         0.011, 0.787, 0.202,
         0.093, 0.021, 0.886;
    return T;
}

inline Matrix t_quarter_banking_printed() {
    Matrix T(6, 6);
    T << 0.578, 0.323, 0.084, 0.013, 0.001, 0.001,
         0.001, 0.6, 0.314, 0.075, 0.004, 0.007,
         0.004, 0.001, 0.629, 0.301, 0.024, 0.041,
         0.029, 0.005, 0.001, 0.67, 0.111, 0.184,
         0.103, 0.027, 0.004, 0.001, 0.865, 0.0,
         0.172, 0.045, 0.008, 0.001, 0.0, 0.774;
    return T;
}

inline ntfhmm::ProcessModel model_sequential(ntfhmm::DurationMode mode =
                                                 ntfhmm::DurationMode::exponential) {
    ntfhmm::ProcessModel m;
    m.activities = {{0, "a1", 0.0, 1e9, 86.0, {0}},
                    {1, "a2", 0.0, 1e9, 91.0, {1}},
                    {2, "a3", 0.0, 1e9, 163.0, {2}}};
    m.edges = {{0, 1}, {1, 2}};
    m.periodic = true;
    m.duration_mode = mode;
    return m;
}

inline ntfhmm::ProcessModel model_concurrent() {
    ntfhmm::ProcessModel m;
    m.activities = {{0, "a1", 0.0, 1e9, 86.0, {0}},
                    {1, "a2", 0.0, 1e9, 91.0, {1}},
                    {2, "a3", 0.0, 1e9, 163.0, {2}},
                    {3, "a4", 0.0, 1e9, 100.0, {3}}};
    m.edges = {{0, 1}, {1, 2}, {1, 3}};
    m.periodic = true;
    m.duration_mode = ntfhmm::DurationMode::exponential;
    return m;
}

// Emission rows for the concurrent model in lexicographic state order:
// {a1}, {a2}, {a3}, {a3,a4}, {a4}  (the paper lists {a1},{a2},{a3,a4},{a3},{a4}).
inline Matrix emission_concurrent_lex() {
    Matrix E(5, 4);
    E << 0.1, 0.15, 0.65, 0.1,
         0.05, 0.1, 0.5, 0.35,
         0.15, 0.7, 0.05, 0.1,
         0.15, 0.7, 0.05, 0.1,
         1.0, 0.0, 0.0, 0.0;
    return E;
}

}  // namespace test_util
