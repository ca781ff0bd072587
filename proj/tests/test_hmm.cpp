#include <doctest.h>

#include <cmath>

#include "ntfhmm/hmm.hpp"
#include "ntfhmm/process_model.hpp"
#include "ntfhmm/rng.hpp"
#include "test_util.hpp"

using namespace ntfhmm;
namespace tu = test_util;

TEST_CASE("expm reproduces the sequential-process T(20)") {
    const Matrix T = transition_matrix(tu::q_sequential(), 20.0);
    // high-precision reference (50-digit arithmetic)
    Matrix ref(3, 3);
    ref << 0.7933580363, 0.1855352072, 0.02110675649,
           0.01113608011, 0.8035522785, 0.1853116414,
           0.1028087459, 0.01178352663, 0.8854077274;
    CHECK((T - ref).cwiseAbs().maxCoeff() < 1e-9);
    // the printed matrix truncated entry (0,1): 0.18553... was printed as 0.185,
    // so a correct exponential sits 5.35e-4 from the print there and < 5e-4 elsewhere
    const Matrix printed = tu::t20_sequential_printed();
    CHECK((T - printed).cwiseAbs().maxCoeff() < 6e-4);
    int within = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(T(i, j) - printed(i, j)) <= 5e-4) ++within;
    CHECK(within == 8);
}

TEST_CASE("expm of the zero matrix is the identity") {
    const Matrix T = transition_matrix(Matrix::Zero(4, 4), 17.0);
    CHECK((T - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("expm matches the closed form for a 2-state absorbing chain") {
    Matrix Q(2, 2);
    Q << -1.0, 1.0, 0.0, 0.0;
    const Matrix T = transition_matrix(Q, std::log(2.0));
    Matrix want(2, 2);
    want << 0.5, 0.5, 0.0, 1.0;
    CHECK((T - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("expm agrees with the Taylor-series oracle on random generators") {
    auto eng = make_engine(99);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(eng() % 5);
        Matrix Q(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) Q(i, j) = i == j ? 0.0 : uniform(eng, 0.0, 2.0);
            Q(i, i) = -Q.row(i).sum();
        }
        const double dt = uniform(eng, 0.0, 8.0);
        const Matrix got = expm(Q * dt);
        const Matrix want = tu::taylor_expm(Q * dt);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("expm semigroup property and stochasticity") {
    auto eng = make_engine(123);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(eng() % 4);
        Matrix Q(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) Q(i, j) = i == j ? 0.0 : uniform(eng, 0.0, 1.0);
            Q(i, i) = -Q.row(i).sum();
        }
        const double s = uniform(eng, 0.0, 3.0), t = uniform(eng, 0.0, 3.0);
        const Matrix lhs = expm(Q * (s + t));
        const Matrix rhs = expm(Q * s) * expm(Q * t);
        CHECK((lhs - rhs).norm() < 1e-8);
        const Matrix raw = expm(Q * t);
        CHECK(raw.minCoeff() > -1e-12);
        for (int i = 0; i < n; ++i) CHECK(raw.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("expm rejects non-finite input") {
    Matrix Q(2, 2);
    Q << 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0;
    CHECK_THROWS_AS(transition_matrix(Q, 1.0), ValidationError);
}

TEST_CASE("rate matrix of the sequential model matches the printed Q") {
    const auto model = tu::model_sequential();
    const auto timelines = simulate_ensemble(model, 50, 7);
    const auto states = enumerate_states(model, timelines);
    REQUIRE(states.size() == 3);
    const Matrix Q = build_rate_matrix(model, states, {86.0, 91.0, 163.0});
    CHECK((Q - tu::q_sequential()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rate matrix of a single looping activity is 1x1 zero") {
    ProcessModel m;
    m.activities = {{0, "a1", 0.0, 1e9, 10.0, {}}};
    m.periodic = true;
    m.duration_mode = DurationMode::exponential;
    const auto timelines = simulate_ensemble(m, 5, 3);
    const auto states = enumerate_states(m, timelines);
    REQUIRE(states.size() == 1);
    const Matrix Q = build_rate_matrix(m, states, {10.0});
    CHECK(Q.rows() == 1);
    CHECK(Q(0, 0) == 0.0);
}

TEST_CASE("rate matrix of the concurrent model routes residual activities") {
    const auto model = tu::model_concurrent();
    const auto timelines = simulate_ensemble(model, 400, 11);
    const auto states = enumerate_states(model, timelines);
    REQUIRE(states.size() == 5);
    // lexicographic order: {a1}, {a2}, {a3}, {a3,a4}, {a4}
    CHECK(states[2].members == std::vector<int>{2});
    CHECK(states[3].members == (std::vector<int>{2, 3}));
    const Matrix Q = build_rate_matrix(model, states, {86.0, 91.0, 163.0, 100.0});
    // completing a3 (rate 1/163) leaves {a4}; completing a4 (rate 1/100) leaves {a3}
    CHECK(Q(3, 4) == doctest::Approx(1.0 / 163).epsilon(1e-12));
    CHECK(Q(3, 2) == doctest::Approx(1.0 / 100).epsilon(1e-12));
    CHECK(Q(3, 3) == doctest::Approx(-1.0 / 163 - 1.0 / 100).epsilon(1e-12));
    // the singletons loop back to {a1}
    CHECK(Q(2, 0) == doctest::Approx(1.0 / 163).epsilon(1e-12));
    CHECK(Q(4, 0) == doctest::Approx(1.0 / 100).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) CHECK(std::abs(Q.row(i).sum()) < 1e-12);
}

TEST_CASE("reference HMM estimation on the sequential model") {
    const auto model = tu::model_sequential();
    const auto timelines = simulate_ensemble(model, 10000, 21);
    const auto states = enumerate_states(model, timelines);

    const auto means = mean_durations(model, timelines);
    CHECK(std::abs(means[0] - 86.0) / 86.0 < 0.02);
    CHECK(std::abs(means[1] - 91.0) / 91.0 < 0.02);
    CHECK(std::abs(means[2] - 163.0) / 163.0 < 0.02);

    const Hmm hmm = estimate_reference_hmm(model, states, timelines, 20.0,
                                           tu::emission_sequential());
    CHECK(hmm.pi(0) == 1.0);  // the periodic stream starts at a1
    CHECK(hmm.pi(1) == 0.0);
    CHECK(hmm.pi(2) == 0.0);
    CHECK((hmm.E - tu::emission_sequential()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((hmm.T - transition_matrix(tu::q_sequential(), 20.0)).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("sampling with identity emission reproduces the state path") {
    auto eng = make_engine(5);
    Hmm hmm;
    hmm.n_states = hmm.n_observations = 3;
    hmm.dt = 1.0;
    hmm.pi = Vector::Constant(3, 1.0 / 3);
    hmm.T = tu::random_stochastic(3, 3, eng);
    hmm.E = Matrix::Identity(3, 3);
    const auto [states, obs] = sample_observations(hmm, 2000, 17);
    CHECK(states == obs);
}

TEST_CASE("sampling an absorbing chain stays in the start state") {
    Hmm hmm;
    hmm.n_states = 2;
    hmm.n_observations = 2;
    hmm.dt = 1.0;
    hmm.pi = Vector::Zero(2);
    hmm.pi(0) = 1.0;
    hmm.T = Matrix::Identity(2, 2);
    hmm.E = Matrix::Constant(2, 2, 0.5);
    const auto [states, obs] = sample_observations(hmm, 500, 3);
    for (int s : states) CHECK(s == 0);
}

TEST_CASE("long samples reach the stationary occupancy of T(20)") {
    Hmm hmm;
    hmm.n_states = 3;
    hmm.n_observations = 4;
    hmm.dt = 20.0;
    hmm.pi = Vector::Zero(3);
    hmm.pi(0) = 1.0;
    hmm.T = transition_matrix(tu::q_sequential(), 20.0);
    hmm.E = tu::emission_sequential();
    const int n = 1000000;
    const auto [states, obs] = sample_observations(hmm, n, 41);
    Vector occupancy = Vector::Zero(3);
    for (int s : states) occupancy(s) += 1.0 / n;
    const Vector p = tu::stationary(hmm.T);
    CHECK((occupancy - p).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("viterbi decodes identity-emission observations exactly") {
    const Hmm hmm = [] {
        Hmm h = tu::random_hmm(3, 3, 8);
        h.E = Matrix::Identity(3, 3);
        return h;
    }();
    const auto [states, obs] = sample_observations(hmm, 300, 9);
    CHECK(viterbi(hmm, obs) == obs);
}

TEST_CASE("length-1 viterbi is the single-step argmax") {
    const Hmm hmm = tu::random_hmm(4, 3, 15);
    for (int j = 0; j < 3; ++j) {
        int want = 0;
        for (int i = 1; i < 4; ++i)
            if (hmm.pi(i) * hmm.E(i, j) > hmm.pi(want) * hmm.E(want, j)) want = i;
        CHECK(viterbi(hmm, {j}) == std::vector<int>{want});
    }
}

TEST_CASE("viterbi ties break toward the lower state id") {
    Hmm hmm;
    hmm.n_states = hmm.n_observations = 2;
    hmm.dt = 1.0;
    hmm.pi = Vector::Constant(2, 0.5);
    hmm.T = Matrix::Constant(2, 2, 0.5);
    hmm.E = Matrix::Constant(2, 2, 0.5);
    CHECK(viterbi(hmm, {0, 1, 0, 1}) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("viterbi reports the step of an impossible observation") {
    Hmm hmm;
    hmm.n_states = 2;
    hmm.n_observations = 2;
    hmm.dt = 1.0;
    hmm.pi = Vector::Constant(2, 0.5);
    hmm.T = Matrix::Constant(2, 2, 0.5);
    hmm.E = Matrix(2, 2);
    hmm.E << 1.0, 0.0, 1.0, 0.0;  // symbol 1 impossible everywhere
    CHECK_THROWS_WITH_AS(viterbi(hmm, {0, 0, 1}), doctest::Contains("step 2"), ValidationError);
}

TEST_CASE("viterbi and forward match exhaustive enumeration on small instances") {
    auto eng = make_engine(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(eng() % 2);   // N <= 3
        const int k = 2 + static_cast<int>(eng() % 2);   // K <= 3
        const int len = 1 + static_cast<int>(eng() % 8); // T <= 8
        const Hmm hmm = tu::random_hmm(n, k, eng());
        std::vector<int> obs(len);
        for (int t = 0; t < len; ++t) obs[t] = static_cast<int>(eng() % k);

        const auto [oracle_path, oracle_lp] = tu::brute_force_viterbi(hmm, obs);
        const auto path = viterbi(hmm, obs);
        double lp = std::log(hmm.pi(path[0])) + std::log(hmm.E(path[0], obs[0]));
        for (int t = 1; t < len; ++t)
            lp += std::log(hmm.T(path[t - 1], path[t])) + std::log(hmm.E(path[t], obs[t]));
        CHECK(lp == doctest::Approx(oracle_lp).epsilon(1e-10));

        CHECK(log_likelihood(hmm, obs) ==
              doctest::Approx(tu::brute_force_log_likelihood(hmm, obs)).epsilon(1e-10));
    }
}

TEST_CASE("deterministic chains have zero log-likelihood") {
    Hmm hmm;
    hmm.n_states = 1;
    hmm.n_observations = 1;
    hmm.dt = 1.0;
    hmm.pi = Vector::Ones(1);
    hmm.T = Matrix::Ones(1, 1);
    hmm.E = Matrix::Ones(1, 1);
    CHECK(log_likelihood(hmm, std::vector<int>(50, 0)) == 0.0);
}

TEST_CASE("length-1 log-likelihood matches the definition") {
    const Hmm hmm = tu::random_hmm(3, 4, 77);
    for (int j = 0; j < 4; ++j) {
        const double want = std::log(hmm.pi.dot(hmm.E.col(j)));
        CHECK(log_likelihood(hmm, {j}) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("impossible sequences return the -inf sentinel") {
    Hmm hmm;
    hmm.n_states = 2;
    hmm.n_observations = 2;
    hmm.dt = 1.0;
    hmm.pi = Vector::Constant(2, 0.5);
    hmm.T = Matrix::Identity(2, 2);
    hmm.E = Matrix(2, 2);
    hmm.E << 1.0, 0.0, 1.0, 0.0;
    CHECK(log_likelihood(hmm, {0, 1}) == -std::numeric_limits<double>::infinity());
}
