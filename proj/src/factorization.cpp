#include "ntfhmm/factorization.hpp"

#include <cmath>

#include "ntfhmm/rng.hpp"

namespace ntfhmm {

namespace {

constexpr double kDenominatorFloor = 1e-16;

double reconstruction_objective(const JointStats& stats, const Matrix& A, const Matrix& B,
                                const Matrix& C, const Matrix& D) {
    const int K = stats.k;
    const int L = static_cast<int>(A.cols());
    double J = 0.0;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k) {
                double acc = 0.0;
                for (int n = 0; n < L; ++n) acc += A(i, n) * B(j, n) * C(k, n);
                const double r = stats.tensor(i, j, k) - acc;
                J += 0.5 * r * r;
            }
    J += 0.5 * (stats.matrix - B * D * B.transpose()).squaredNorm();
    return J;
}

void check_shapes(const JointStats& stats, const FactorSet& f) {
    const int K = stats.k;
    const int L = f.rank();
    if (f.A.rows() != K || f.B.rows() != K || f.C.rows() != K || f.A.cols() != L ||
        f.C.cols() != L || f.D.rows() != L || f.D.cols() != L)
        throw ValidationError("factorization: factor shapes do not match the statistics");
    if (stats.tensor.dim() != K || stats.matrix.rows() != K || stats.matrix.cols() != K)
        throw ValidationError("factorization: inconsistent statistics shapes");
}

}  // namespace

double objective(const JointStats& stats, const FactorSet& f) {
    check_shapes(stats, f);
    return reconstruction_objective(stats, f.A, f.B, f.C, f.D);
}

FactorSet random_factors(int n_observations, int rank, std::uint64_t seed) {
    if (rank < 1) throw ValidationError("factorization: rank must be >= 1");
    auto eng = make_engine(seed);
    FactorSet f;
    f.seed = seed;
    auto fill = [&](Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(eng, 0.1, 1.0);
        return m;
    };
    f.A = fill(n_observations, rank);
    f.B = fill(n_observations, rank);
    f.C = fill(n_observations, rank);
    f.D = fill(rank, rank);
    return f;
}

void post_process(FactorSet& f) {
    const Eigen::Index L = f.B.cols();
    Vector sb = f.B.colwise().sum();
    Vector sc = f.C.colwise().sum();
    for (Eigen::Index n = 0; n < L; ++n) {
        f.A.col(n) *= sb(n) * sc(n);
        if (sb(n) > 0.0) f.B.col(n) /= sb(n);
        if (sc(n) > 0.0) f.C.col(n) /= sc(n);
    }
    const double sa = f.A.sum();
    if (sa > 0.0) f.A /= sa;
    f.D = sb.asDiagonal() * f.D * sb.asDiagonal();
    const double sd = f.D.sum();
    if (sd > 0.0) f.D /= sd;
}

FactorSet multiplicative_updates(const JointStats& stats, const FactorSet& init,
                                 const MuOptions& opts) {
    check_shapes(stats, init);
    if ((init.A.array() <= 0.0).any() || (init.B.array() <= 0.0).any() ||
        (init.C.array() <= 0.0).any() || (init.D.array() <= 0.0).any())
        throw ValidationError("factorization: initial factors must be strictly positive");

    const int K = stats.k;
    const int L = init.rank();
    Matrix A = init.A, B = init.B, C = init.C, D = init.D;
    Matrix numA(K, L), numB(K, L), numC(K, L);
    std::vector<double> W(static_cast<std::size_t>(K) * K * L);  // W[i,j,n] = sum_k T(i,j,k) C(k,n)
    std::vector<double> history;
    history.reserve(opts.max_iters);

    FactorSet out = init;
    int iters = 0;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        ++iters;
        // A <- A . (unfold1(T)(C x B)) / (A ((C^T C) . (B^T B)))
        std::fill(W.begin(), W.end(), 0.0);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
                double* w = &W[(static_cast<std::size_t>(i) * K + j) * L];
                for (int k = 0; k < K; ++k) {
                    const double t = stats.tensor(i, j, k);
                    if (t == 0.0) continue;
                    for (int n = 0; n < L; ++n) w[n] += t * C(k, n);
                }
            }
        numA.setZero();
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
                const double* w = &W[(static_cast<std::size_t>(i) * K + j) * L];
                for (int n = 0; n < L; ++n) numA(i, n) += w[n] * B(j, n);
            }
        Matrix denA = A * ((C.transpose() * C).cwiseProduct(B.transpose() * B));
        A = (A.array() * numA.array() / (denA.array() + kDenominatorFloor)).matrix();

        // B <- B . (unfold2(T)(C x A) + M B D^T + M^T B D) /
        //          (B ((A^T A) . (C^T C)) + B D^T B^T B D + B D B^T B D^T)
        numB.setZero();
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
                const double* w = &W[(static_cast<std::size_t>(i) * K + j) * L];
                for (int n = 0; n < L; ++n) numB(j, n) += w[n] * A(i, n);
            }
        numB += stats.matrix * B * D.transpose() + stats.matrix.transpose() * B * D;
        Matrix BtB = B.transpose() * B;
        Matrix denB = B * ((A.transpose() * A).cwiseProduct(C.transpose() * C)) +
                      B * (D.transpose() * BtB * D) + B * (D * BtB * D.transpose());
        B = (B.array() * numB.array() / (denB.array() + kDenominatorFloor)).matrix();

        // C <- C . (unfold3(T)(B x A)) / (C ((B^T B) . (A^T A)))
        numC.setZero();
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k) {
                    const double t = stats.tensor(i, j, k);
                    if (t == 0.0) continue;
                    for (int n = 0; n < L; ++n) numC(k, n) += t * A(i, n) * B(j, n);
                }
        Matrix denC = C * ((B.transpose() * B).cwiseProduct(A.transpose() * A));
        C = (C.array() * numC.array() / (denC.array() + kDenominatorFloor)).matrix();

        // D <- D . (B^T M B) / (B^T B D B^T B)
        BtB = B.transpose() * B;
        Matrix numD = B.transpose() * stats.matrix * B;
        Matrix denD = BtB * D * BtB;
        D = (D.array() * numD.array() / (denD.array() + kDenominatorFloor)).matrix();

        const double J = reconstruction_objective(stats, A, B, C, D);
        if (!std::isfinite(J))
            throw DivergenceError("factorization: non-finite objective at iteration " +
                                  std::to_string(iter + 1));
        history.push_back(J);
        if (opts.objective_history) opts.objective_history->push_back(J);
        if (iter >= opts.tol_window) {
            const double before = history[iter - opts.tol_window];
            if (before - J < opts.tol * before) break;
        }
    }

    out.A = std::move(A);
    out.B = std::move(B);
    out.C = std::move(C);
    out.D = std::move(D);
    out.iterations = iters;
    post_process(out);
    out.objective = reconstruction_objective(stats, out.A, out.B, out.C, out.D);
    return out;
}

FactorSet multiplicative_updates(const JointStats& stats, int rank, std::uint64_t seed,
                                 const MuOptions& opts) {
    FactorSet init = random_factors(stats.k, rank, seed);
    FactorSet out = multiplicative_updates(stats, init, opts);
    out.seed = seed;
    return out;
}

Hmm factors_to_hmm(const FactorSet& f, double dt, std::vector<std::string>* warnings) {
    const int L = f.rank();
    const int K = static_cast<int>(f.B.rows());
    Hmm hmm;
    hmm.n_states = L;
    hmm.n_observations = K;
    hmm.dt = dt;

    hmm.E = f.B.transpose();
    for (int i = 0; i < L; ++i) {
        const double s = hmm.E.row(i).sum();
        if (s > 0.0) {
            hmm.E.row(i) /= s;
        } else {
            hmm.E.row(i).setConstant(1.0 / K);
            if (warnings) warnings->push_back("emission row " + std::to_string(i) + " was zero");
        }
    }

    hmm.T = f.D;
    for (int i = 0; i < L; ++i) {
        const double s = hmm.T.row(i).sum();
        if (s > 0.0) {
            hmm.T.row(i) /= s;
        } else {
            hmm.T.row(i).setConstant(1.0 / L);
            if (warnings) warnings->push_back("transition row " + std::to_string(i) + " was zero");
        }
    }

    hmm.pi = f.A.colwise().sum();
    const double s = hmm.pi.sum();
    if (s > 0.0) {
        hmm.pi /= s;
    } else {
        hmm.pi.setConstant(1.0 / L);
        if (warnings) warnings->push_back("state occupancy was zero, using uniform");
    }
    hmm.validate();
    return hmm;
}

}  // namespace ntfhmm
