#include "ntfhmm/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ntfhmm/parallel.hpp"
#include "ntfhmm/rng.hpp"

namespace ntfhmm {

void SelectionConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ValidationError("selection: epsilon must be in (0, 1)");
    if (ensemble_size < 2) throw ValidationError("selection: ensemble_size must be >= 2");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw ValidationError("selection: keep_fraction must be in (0, 1]");
    if (candidate_ranks.empty()) throw ValidationError("selection: no candidate ranks");
    for (int r : candidate_ranks)
        if (r < 1) throw ValidationError("selection: ranks must be >= 1");
    if (restarts < 1) throw ValidationError("selection: restarts must be >= 1");
}

JointStats perturb(const JointStats& stats, double epsilon, std::uint64_t seed) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ValidationError("perturb: epsilon must be in (0, 1)");
    auto eng = make_engine(seed);
    JointStats out = stats;
    double sum = 0.0;
    for (double& v : out.tensor.data()) {
        v *= uniform(eng, 1.0 - epsilon, 1.0 + epsilon);
        sum += v;
    }
    for (double& v : out.tensor.data()) v /= sum;
    for (Eigen::Index i = 0; i < out.matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < out.matrix.cols(); ++j)
            out.matrix(i, j) *= uniform(eng, 1.0 - epsilon, 1.0 + epsilon);
    out.matrix /= out.matrix.sum();
    return out;
}

namespace {

// Min-cost perfect assignment (Hungarian algorithm with potentials), O(n^3).
// Returns match[column of cost] = row index.
std::vector<int> min_cost_assignment(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> match(n);
    for (int j = 1; j <= n; ++j) match[j - 1] = p[j] - 1;
    return match;
}

double cosine_distance(const Vector& a, const Vector& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return na == nb ? 0.0 : 1.0;
    return 1.0 - a.dot(b) / (na * nb);
}

}  // namespace

ClusterResult cluster_factors(const std::vector<FactorSet>& members) {
    if (members.size() < 2) throw ValidationError("cluster: need at least 2 ensemble members");
    const int L = members.front().rank();
    const int K = static_cast<int>(members.front().B.rows());
    const int m = static_cast<int>(members.size());
    for (const auto& f : members)
        if (f.rank() != L || f.B.rows() != K)
            throw ValidationError("cluster: members must share the factor shape");

    ClusterResult result;
    result.centroids = members.front().B;
    result.assignment.assign(m, std::vector<int>(L));
    for (auto& a : result.assignment) std::iota(a.begin(), a.end(), 0);

    for (int round = 0; round < 100; ++round) {
        bool changed = false;
        for (int e = 0; e < m; ++e) {
            Matrix cost(L, L);  // cost(col, cluster)
            for (int c = 0; c < L; ++c)
                for (int cl = 0; cl < L; ++cl)
                    cost(c, cl) = cosine_distance(members[e].B.col(c), result.centroids.col(cl));
            const std::vector<int> match = min_cost_assignment(cost);  // cluster -> column
            if (match != result.assignment[e]) {
                result.assignment[e] = match;
                changed = true;
            }
        }
        // centroid = renormalized elementwise median of the assigned columns
        for (int cl = 0; cl < L; ++cl) {
            for (int row = 0; row < K; ++row) {
                std::vector<double> vals(m);
                for (int e = 0; e < m; ++e) vals[e] = members[e].B(row, result.assignment[e][cl]);
                std::nth_element(vals.begin(), vals.begin() + m / 2, vals.end());
                double med = vals[m / 2];
                if (m % 2 == 0) {
                    std::nth_element(vals.begin(), vals.begin() + m / 2 - 1, vals.end());
                    med = 0.5 * (med + vals[m / 2 - 1]);
                }
                result.centroids(row, cl) = med;
            }
            const double s = result.centroids.col(cl).sum();
            if (s > 0.0) result.centroids.col(cl) /= s;
        }
        if (!changed && round > 0) break;
    }

    // cosine silhouettes over the m*L points, one cluster per column slot
    result.silhouettes.assign(static_cast<std::size_t>(m) * L, 1.0);
    if (L > 1) {
        for (int e = 0; e < m; ++e) {
            for (int cl = 0; cl < L; ++cl) {
                const Vector& x = members[e].B.col(result.assignment[e][cl]);
                double a = 0.0;
                Vector other = Vector::Zero(L);
                for (int e2 = 0; e2 < m; ++e2) {
                    for (int cl2 = 0; cl2 < L; ++cl2) {
                        if (e2 == e && cl2 == cl) continue;
                        const double d = cosine_distance(x, members[e2].B.col(result.assignment[e2][cl2]));
                        if (cl2 == cl) a += d;
                        else other(cl2) += d;
                    }
                }
                a /= (m - 1);
                double b = std::numeric_limits<double>::infinity();
                for (int cl2 = 0; cl2 < L; ++cl2)
                    if (cl2 != cl) b = std::min(b, other(cl2) / m);
                const double mx = std::max(a, b);
                result.silhouettes[static_cast<std::size_t>(e) * L + cl] =
                    mx == 0.0 ? 0.0 : (b - a) / mx;
            }
        }
    }
    result.mean = std::accumulate(result.silhouettes.begin(), result.silhouettes.end(), 0.0) /
                  static_cast<double>(result.silhouettes.size());
    result.min = *std::min_element(result.silhouettes.begin(), result.silhouettes.end());
    return result;
}

const FactorSet& SelectionReport::centroid_factors() const {
    if (!selected_rank) throw ValidationError("selection report: no rank was selected");
    return centroids.at(*selected_rank);
}

namespace {

Matrix aligned_median(const std::vector<Matrix>& mats) {
    Matrix out(mats.front().rows(), mats.front().cols());
    const int m = static_cast<int>(mats.size());
    std::vector<double> vals(m);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            for (int e = 0; e < m; ++e) vals[e] = mats[e](i, j);
            std::sort(vals.begin(), vals.end());
            out(i, j) = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
        }
    return out;
}

FactorSet centroid_factor_set(const std::vector<FactorSet>& kept,
                              const std::vector<std::vector<int>>& assignment) {
    const int L = kept.front().rank();
    std::vector<Matrix> As, Bs, Cs, Ds;
    for (std::size_t e = 0; e < kept.size(); ++e) {
        const auto& perm = assignment[e];  // cluster -> column
        Matrix A(kept[e].A.rows(), L), B(kept[e].B.rows(), L), C(kept[e].C.rows(), L), D(L, L);
        for (int cl = 0; cl < L; ++cl) {
            A.col(cl) = kept[e].A.col(perm[cl]);
            B.col(cl) = kept[e].B.col(perm[cl]);
            C.col(cl) = kept[e].C.col(perm[cl]);
        }
        for (int r = 0; r < L; ++r)
            for (int c = 0; c < L; ++c) D(r, c) = kept[e].D(perm[r], perm[c]);
        As.push_back(std::move(A));
        Bs.push_back(std::move(B));
        Cs.push_back(std::move(C));
        Ds.push_back(std::move(D));
    }
    FactorSet cent;
    cent.A = aligned_median(As);
    cent.B = aligned_median(Bs);
    cent.C = aligned_median(Cs);
    cent.D = aligned_median(Ds);
    for (int cl = 0; cl < L; ++cl) {
        double s = cent.B.col(cl).sum();
        if (s > 0.0) cent.B.col(cl) /= s;
        s = cent.C.col(cl).sum();
        if (s > 0.0) cent.C.col(cl) /= s;
    }
    if (cent.A.sum() > 0.0) cent.A /= cent.A.sum();
    if (cent.D.sum() > 0.0) cent.D /= cent.D.sum();
    double obj = 0.0;
    for (const auto& f : kept) obj += f.objective;
    cent.objective = obj / static_cast<double>(kept.size());
    return cent;
}

}  // namespace

SelectionReport select_rank(const JointStats& stats, const SelectionConfig& config) {
    config.validate();
    const double norm0 = 0.5 * (stats.tensor.squaredNorm() + stats.matrix.squaredNorm());
    if (norm0 <= 0.0) throw ValidationError("selection: empty statistics");

    const int n_ranks = static_cast<int>(config.candidate_ranks.size());
    const int n_members = config.ensemble_size;

    // one perturbed copy per member, shared across ranks
    std::vector<JointStats> perturbed(n_members);
    for (int e = 0; e < n_members; ++e)
        perturbed[e] = perturb(stats, config.epsilon,
                               mix_seed(config.seed, {0x70657274ULL, static_cast<std::uint64_t>(e)}));

    // the (rank x member) grid is embarrassingly parallel; every cell derives its
    // own seeds, so results do not depend on the worker count
    std::vector<FactorSet> grid(static_cast<std::size_t>(n_ranks) * n_members);
    const unsigned workers = config.workers == 0 ? default_workers() : config.workers;
    parallel_for(grid.size(), workers, [&](std::size_t cell) {
        const int ri = static_cast<int>(cell) / n_members;
        const int e = static_cast<int>(cell) % n_members;
        const int rank = config.candidate_ranks[ri];
        FactorSet best;
        for (int r = 0; r < config.restarts; ++r) {
            const std::uint64_t s =
                mix_seed(config.seed, {static_cast<std::uint64_t>(rank),
                                       static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(r)});
            FactorSet f = multiplicative_updates(perturbed[e], rank, s, config.mu);
            if (r == 0 || f.objective < best.objective) best = std::move(f);
        }
        grid[cell] = std::move(best);
    });

    SelectionReport report;
    for (int ri = 0; ri < n_ranks; ++ri) {
        const int rank = config.candidate_ranks[ri];
        std::vector<FactorSet> members(grid.begin() + static_cast<std::ptrdiff_t>(ri) * n_members,
                                       grid.begin() + static_cast<std::ptrdiff_t>(ri + 1) * n_members);
        std::sort(members.begin(), members.end(),
                  [](const FactorSet& a, const FactorSet& b) { return a.objective < b.objective; });
        const int keep = std::max<int>(
            2, static_cast<int>(std::ceil(config.keep_fraction * n_members)));
        members.resize(std::min<std::size_t>(members.size(), keep));

        const ClusterResult clusters = cluster_factors(members);
        double rel = 0.0;
        for (const auto& f : members) rel += f.objective;
        rel /= static_cast<double>(members.size()) * norm0;

        report.per_rank.push_back({rank, clusters.mean, clusters.min, rel});
        report.centroids[rank] = centroid_factor_set(members, clusters.assignment);
    }

    // largest rank that clusters stably and is not clearly under-fitted
    // (the next rank improving the fit by more than underfit_ratio x)
    for (const auto& row : report.per_rank) {
        if (row.silhouette_mean < config.silhouette_mean_threshold) continue;
        if (row.silhouette_min < config.silhouette_min_threshold) continue;
        const auto next = std::find_if(report.per_rank.begin(), report.per_rank.end(),
                                       [&](const RankDiagnostics& d) { return d.rank == row.rank + 1; });
        if (next != report.per_rank.end() &&
            row.rel_objective > config.underfit_ratio * next->rel_objective &&
            row.rel_objective - next->rel_objective > config.underfit_floor)
            continue;
        if (!report.selected_rank || row.rank > *report.selected_rank)
            report.selected_rank = row.rank;
    }
    return report;
}

}  // namespace ntfhmm
