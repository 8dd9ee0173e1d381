#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace flm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-action family of matrices, e.g. the transition kernels P^a.
using MatrixFamily = std::vector<Matrix>;

}  // namespace flm
