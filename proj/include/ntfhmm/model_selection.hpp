#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ntfhmm/factorization.hpp"

namespace ntfhmm {

struct SelectionConfig {
    double epsilon = 0.03;       // multiplicative perturbation half-width
    int ensemble_size = 50;      // perturbed copies per rank
    std::vector<int> candidate_ranks;
    int restarts = 10;           // per ensemble member, best kept
    double keep_fraction = 0.10; // lowest-objective members retained for clustering
    double silhouette_mean_threshold = 0.8;
    double silhouette_min_threshold = 0.5;
    double underfit_ratio = 10.0;   // rank L is under-fitted if rel_obj(L) > ratio * rel_obj(L+1)
    double underfit_floor = 1e-9;   // ... and the absolute improvement exceeds this floor
    MuOptions mu;
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0 = all cores

    void validate() const;
};

struct RankDiagnostics {
    int rank = 0;
    double silhouette_mean = 0.0;
    double silhouette_min = 0.0;
    double rel_objective = 0.0;  // mean kept objective / (0.5 (||T||^2 + ||M||^2))
};

struct SelectionReport {
    std::vector<RankDiagnostics> per_rank;
    std::optional<int> selected_rank;
    std::map<int, FactorSet> centroids;  // per-rank centroid factors

    const FactorSet& centroid_factors() const;  // at the selected rank
};

/// Each entry multiplied by an independent U(1-eps, 1+eps) draw, then renormalized.
JointStats perturb(const JointStats& stats, double epsilon, std::uint64_t seed);

struct ClusterResult {
    std::vector<std::vector<int>> assignment;  // assignment[member][cluster] = column index
    Matrix centroids;                          // K x L, column-stochastic
    std::vector<double> silhouettes;           // one per (member, cluster) point
    double mean = 0.0;
    double min = 0.0;
};

/// Clusters the emission columns (B) across members into L clusters with exactly one
/// column per member per cluster: centroids seeded from the first member, members
/// matched by min-cost assignment on cosine distance, centroids updated as
/// renormalized elementwise medians, iterated to a fixed point. Cosine silhouettes.
ClusterResult cluster_factors(const std::vector<FactorSet>& members);

SelectionReport select_rank(const JointStats& stats, const SelectionConfig& config);

}  // namespace ntfhmm
