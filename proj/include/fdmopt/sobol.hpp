#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace fdmopt {

/// Sobol points in [0,1)^dims (Joe-Kuo direction numbers), randomised by a
/// per-dimension digital shift drawn from `seed`. Rows are points; the first
/// n rows of a larger draw with the same seed are identical to a draw of n.
Eigen::MatrixXd sobol_points(int n, int dims, std::uint64_t seed);

}  // namespace fdmopt
