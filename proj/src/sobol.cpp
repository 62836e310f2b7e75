#include "fdmopt/sobol.hpp"

#include <boost/random/sobol.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace fdmopt {

Eigen::MatrixXd sobol_points(int n, int dims, std::uint64_t seed) {
  boost::random::sobol_engine<std::uint64_t, 64> engine(static_cast<std::size_t>(dims));
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> shift(static_cast<std::size_t>(dims));
  for (auto& s : shift) s = rng();

  Eigen::MatrixXd points(n, dims);
  const double scale = std::ldexp(1.0, -64);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dims; ++d) {
      const std::uint64_t bits = engine() ^ shift[static_cast<std::size_t>(d)];
      // Keep 53 significant bits so the value stays strictly below 1.
      points(i, d) = static_cast<double>(bits >> 11) * scale * 2048.0;
    }
  }
  return points;
}

}  // namespace fdmopt
