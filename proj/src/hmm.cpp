#include "ntfhmm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "ntfhmm/rng.hpp"

namespace ntfhmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_stochastic_rows(const Matrix& m, const char* name) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (m.row(i).minCoeff() < 0.0)
            throw ValidationError(std::string(name) + ": negative entry in row " +
                                  std::to_string(i));
        if (std::abs(m.row(i).sum() - 1.0) > 1e-9)
            throw ValidationError(std::string(name) + ": row " + std::to_string(i) +
                                  " sums to " + std::to_string(m.row(i).sum()));
    }
}

}  // namespace

void Hmm::validate() const {
    if (n_states <= 0 || n_observations <= 0) throw ValidationError("hmm: empty state space");
    if (pi.size() != n_states || T.rows() != n_states || T.cols() != n_states ||
        E.rows() != n_states || E.cols() != n_observations)
        throw ValidationError("hmm: shape mismatch");
    if (pi.minCoeff() < 0.0 || std::abs(pi.sum() - 1.0) > 1e-9)
        throw ValidationError("hmm: pi is not a probability vector");
    check_stochastic_rows(T, "hmm T");
    check_stochastic_rows(E, "hmm E");
}

Matrix build_rate_matrix(const ProcessModel& model, const std::vector<SuperActivity>& states,
                         const std::vector<double>& means) {
    model.validate();
    const int n_states = static_cast<int>(states.size());
    std::map<std::vector<int>, int> index;
    for (const auto& s : states) index[s.members] = s.id;

    std::map<int, double> mean_of;
    for (const auto& a : model.activities) {
        double m = a.id < static_cast<int>(means.size()) ? means[a.id] : a.d_avg;
        if (!(m > 0.0))
            throw ValidationError("rate matrix: non-positive mean duration for activity " +
                                  std::to_string(a.id));
        mean_of[a.id] = m;
    }

    // Activities settled (started and finished) before a state S, assuming children
    // start as soon as their parents complete: the fixpoint of "not active and all
    // parents settled".
    auto settled_before = [&](const std::vector<int>& active) {
        std::set<int> active_set(active.begin(), active.end());
        std::set<int> settled;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& a : model.activities) {
                if (active_set.count(a.id) || settled.count(a.id)) continue;
                bool ready = true;
                for (int p : model.parents_of(a.id))
                    if (!settled.count(p)) { ready = false; break; }
                if (ready) {
                    settled.insert(a.id);
                    changed = true;
                }
            }
        }
        return settled;
    };

    Matrix Q = Matrix::Zero(n_states, n_states);
    for (const auto& state : states) {
        std::set<int> done = settled_before(state.members);
        for (int a : state.members) {
            std::set<int> done_after = done;
            done_after.insert(a);
            std::vector<int> next;
            for (int m : state.members)
                if (m != a) next.push_back(m);
            for (const auto& cand : model.activities) {
                if (done_after.count(cand.id) || cand.id == a) continue;
                if (std::find(state.members.begin(), state.members.end(), cand.id) !=
                    state.members.end())
                    continue;
                bool ready = true;
                for (int p : model.parents_of(cand.id))
                    if (!done_after.count(p)) { ready = false; break; }
                if (ready) next.push_back(cand.id);
            }
            std::sort(next.begin(), next.end());
            if (next.empty()) {
                if (!model.periodic) continue;  // terminal completion, censored
                next = model.roots();
                std::sort(next.begin(), next.end());
            }
            auto it = index.find(next);
            if (it == index.end()) {
                std::ostringstream msg;
                msg << "rate matrix: completing activity " << a << " in state " << state.id
                    << " leads to an activity set absent from the enumerated states";
                throw ValidationError(msg.str());
            }
            if (it->second == state.id) continue;  // self-transition carries no rate
            Q(state.id, it->second) += 1.0 / mean_of.at(a);
        }
        Q(state.id, state.id) = -Q.row(state.id).sum();
    }
    return Q;
}

Matrix transition_matrix(const Matrix& Q, double dt) {
    if (!Q.allFinite()) throw ValidationError("transition_matrix: non-finite rate matrix");
    if (dt < 0.0) throw ValidationError("transition_matrix: negative time gap");
    Matrix T = expm(Q * dt);
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
        if (T.row(i).minCoeff() < -1e-9)
            throw ValidationError("transition_matrix: entry below tolerance at row " +
                                  std::to_string(i));
        if (std::abs(T.row(i).sum() - 1.0) > 1e-9)
            throw ValidationError("transition_matrix: row " + std::to_string(i) +
                                  " does not sum to 1");
    }
    return T.cwiseMax(0.0).cwiseMin(1.0);
}

Hmm estimate_reference_hmm(const ProcessModel& model, const std::vector<SuperActivity>& states,
                           const std::vector<RunTimeline>& timelines, double interval,
                           const Matrix& emission, std::vector<std::string>* warnings) {
    if (interval <= 0.0) throw ValidationError("reference hmm: interval must be positive");
    if (emission.rows() != static_cast<Eigen::Index>(states.size()))
        throw ValidationError("reference hmm: emission rows must match the state count");

    Matrix E = emission;
    for (Eigen::Index i = 0; i < E.rows(); ++i) {
        const double s = E.row(i).sum();
        if (E.row(i).minCoeff() < 0.0 || std::abs(s - 1.0) > 1e-6)
            throw ValidationError("reference hmm: emission row " + std::to_string(i) +
                                  " is not a probability row");
        E.row(i) /= s;
    }

    Vector pi = starting_state_fractions(model, timelines, states);
    for (const auto& s : states)
        if (pi(s.id) == 0.0 && warnings)
            warnings->push_back("state " + std::to_string(s.id) + " never observed at stream start");

    const std::vector<double> means = mean_durations(model, timelines);
    const Matrix Q = build_rate_matrix(model, states, means);

    Hmm hmm;
    hmm.n_states = static_cast<int>(states.size());
    hmm.n_observations = static_cast<int>(E.cols());
    hmm.dt = interval;
    hmm.pi = pi;
    hmm.T = transition_matrix(Q, interval);
    hmm.E = E;
    hmm.validate();
    return hmm;
}

Matrix estimate_emission(const std::vector<std::vector<int>>& state_seqs,
                         const std::vector<std::vector<int>>& obs_seqs, int n_states,
                         int n_observations) {
    if (state_seqs.size() != obs_seqs.size())
        throw ValidationError("estimate emission: sequence count mismatch");
    Matrix counts = Matrix::Zero(n_states, n_observations);
    for (std::size_t s = 0; s < state_seqs.size(); ++s) {
        if (state_seqs[s].size() != obs_seqs[s].size())
            throw ValidationError("estimate emission: sequence length mismatch");
        for (std::size_t t = 0; t < state_seqs[s].size(); ++t)
            counts(state_seqs[s][t], obs_seqs[s][t]) += 1.0;
    }
    for (int i = 0; i < n_states; ++i) {
        const double s = counts.row(i).sum();
        if (s > 0.0)
            counts.row(i) /= s;
        else
            counts.row(i).setConstant(1.0 / n_observations);
    }
    return counts;
}

std::pair<std::vector<int>, std::vector<int>> sample_observations(const Hmm& hmm, int length,
                                                                  std::uint64_t seed) {
    if (length < 1) throw ValidationError("sample_observations: length must be >= 1");
    hmm.validate();
    auto eng = make_engine(seed);
    std::vector<int> states(length), obs(length);
    int s = categorical(eng, hmm.pi, hmm.n_states);
    for (int t = 0; t < length; ++t) {
        states[t] = s;
        obs[t] = categorical(eng, hmm.E.row(s), hmm.n_observations);
        s = categorical(eng, hmm.T.row(s), hmm.n_states);
    }
    return {std::move(states), std::move(obs)};
}

std::vector<int> viterbi(const Hmm& hmm, const std::vector<int>& observations) {
    const int n = hmm.n_states;
    const auto T_len = observations.size();
    if (T_len == 0) return {};
    for (std::size_t t = 0; t < T_len; ++t)
        if (observations[t] < 0 || observations[t] >= hmm.n_observations)
            throw ValidationError("viterbi: observation id out of range at step " +
                                  std::to_string(t));

    const Matrix logT = hmm.T.array().max(0.0).log().matrix();
    const Matrix logE = hmm.E.array().max(0.0).log().matrix();

    std::vector<Vector> delta(T_len, Vector(n));
    std::vector<std::vector<int>> back(T_len, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i)
        delta[0](i) = std::log(std::max(hmm.pi(i), 0.0)) + logE(i, observations[0]);
    if (delta[0].maxCoeff() == -kInf)
        throw ValidationError("viterbi: observation has zero probability in all states at step 0");

    for (std::size_t t = 1; t < T_len; ++t) {
        for (int j = 0; j < n; ++j) {
            double best = -kInf;
            int arg = 0;
            for (int i = 0; i < n; ++i) {
                const double v = delta[t - 1](i) + logT(i, j);
                if (v > best) { best = v; arg = i; }  // strict '>' keeps the lower id on ties
            }
            delta[t](j) = best + logE(j, observations[t]);
            back[t][j] = arg;
        }
        if (delta[t].maxCoeff() == -kInf)
            throw ValidationError("viterbi: observation has zero probability in all states at step " +
                                  std::to_string(t));
    }

    std::vector<int> path(T_len);
    int arg = 0;
    double best = -kInf;
    for (int i = 0; i < n; ++i)
        if (delta[T_len - 1](i) > best) { best = delta[T_len - 1](i); arg = i; }
    path[T_len - 1] = arg;
    for (std::size_t t = T_len - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
    return path;
}

double log_likelihood(const Hmm& hmm, const std::vector<int>& observations) {
    if (observations.empty()) return 0.0;
    for (std::size_t t = 0; t < observations.size(); ++t)
        if (observations[t] < 0 || observations[t] >= hmm.n_observations)
            throw ValidationError("log_likelihood: observation id out of range at step " +
                                  std::to_string(t));

    Vector alpha = hmm.pi.cwiseProduct(hmm.E.col(observations[0]));
    double scale = alpha.sum();
    if (scale <= 0.0) return -kInf;
    double ll = std::log(scale);
    alpha /= scale;
    for (std::size_t t = 1; t < observations.size(); ++t) {
        alpha = (hmm.T.transpose() * alpha).cwiseProduct(hmm.E.col(observations[t]));
        scale = alpha.sum();
        if (scale <= 0.0) return -kInf;
        ll += std::log(scale);
        alpha /= scale;
    }
    return ll;
}

}  // namespace ntfhmm
