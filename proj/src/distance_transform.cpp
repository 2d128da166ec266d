#include "spe/distance_transform.hpp"

#include <vector>

namespace spe {
namespace {

// 1D squared-distance transform of a sampled function f, lower envelope of
// parabolas rooted at (i, f[i]).
void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kEdtInfinity;
  z[1] = kEdtInfinity;
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[static_cast<std::size_t>(q)] + static_cast<double>(q) * q) -
           (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s > z[static_cast<std::size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kEdtInfinity;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < static_cast<double>(q)) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    const double dq = static_cast<double>(q - p);
    d[static_cast<std::size_t>(q)] = dq * dq + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

Eigen::ArrayXXd squared_edt(const Mask& foreground) {
  const Eigen::Index rows = foreground.rows();
  const Eigen::Index cols = foreground.cols();
  Eigen::ArrayXXd dist(rows, cols);

  // Pass 1: along each column.
  std::vector<double> f(static_cast<std::size_t>(rows));
  std::vector<double> d(static_cast<std::size_t>(rows));
  for (Eigen::Index x = 0; x < cols; ++x) {
    for (Eigen::Index y = 0; y < rows; ++y)
      f[static_cast<std::size_t>(y)] = foreground(y, x) ? 0.0 : kEdtInfinity;
    edt_1d(f, d);
    for (Eigen::Index y = 0; y < rows; ++y)
      dist(y, x) = d[static_cast<std::size_t>(y)];
  }

  // Pass 2: along each row.
  f.resize(static_cast<std::size_t>(cols));
  d.resize(static_cast<std::size_t>(cols));
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x)
      f[static_cast<std::size_t>(x)] = dist(y, x);
    edt_1d(f, d);
    for (Eigen::Index x = 0; x < cols; ++x) {
      const double v = d[static_cast<std::size_t>(x)];
      dist(y, x) = v >= kEdtInfinity ? kEdtInfinity : v;
    }
  }
  return dist;
}

}  // namespace spe
