#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntfhmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised on invalid inputs, malformed files, and contract violations.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an iterative solver produces non-finite values.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense cube tensor (dim x dim x dim), row-major storage: (i,j,k) -> ((i*dim)+j)*dim+k.
class Tensor3 {
  public:
    Tensor3() = default;
    explicit Tensor3(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}

    int dim() const { return dim_; }
    double& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
    double operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double sum() const;
    double squaredNorm() const;

  private:
    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + k;
    }

    int dim_ = 0;
    std::vector<double> data_;
};

inline double Tensor3::sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

inline double Tensor3::squaredNorm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
}

}  // namespace ntfhmm
