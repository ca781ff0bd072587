#pragma once

#include <cstdint>
#include <vector>

#include "ntfhmm/types.hpp"

namespace ntfhmm {

/// Empirical joint statistics of an observation stream:
/// tensor(i,j,k) = P(Y_{t-1}=i, Y_t=j, Y_{t+1}=k), matrix(i,j) = P(Y_t=i, Y_{t+1}=j).
struct JointStats {
    int k = 0;
    Tensor3 tensor;
    Matrix matrix;
    std::uint64_t triple_count = 0;
    std::uint64_t pair_count = 0;
};

/// Counts consecutive triples and pairs within each sequence (never across
/// sequence boundaries) and normalizes each array by its total count.
JointStats accumulate(const std::vector<std::vector<int>>& sequences, int n_observations);

}  // namespace ntfhmm
