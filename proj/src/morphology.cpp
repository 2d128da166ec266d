#include "spe/morphology.hpp"

namespace spe {
namespace {

Mask morph_step(const Mask& m, bool erosion) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  Mask out(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      bool any = false;
      bool all = true;
      for (Eigen::Index dy = -1; dy <= 1; ++dy) {
        for (Eigen::Index dx = -1; dx <= 1; ++dx) {
          const Eigen::Index ny = y + dy;
          const Eigen::Index nx = x + dx;
          const bool v = ny >= 0 && ny < rows && nx >= 0 && nx < cols
                             ? m(ny, nx)
                             : false;
          any = any || v;
          all = all && v;
        }
      }
      out(y, x) = erosion ? all : any;
    }
  }
  return out;
}

}  // namespace

Mask erode(const Mask& m, int steps) {
  Mask out = m;
  for (int i = 0; i < steps; ++i) out = morph_step(out, true);
  return out;
}

Mask dilate(const Mask& m, int steps) {
  Mask out = m;
  for (int i = 0; i < steps; ++i) out = morph_step(out, false);
  return out;
}

Mask translate(const Mask& m, int dy, int dx) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  Mask out = Mask::Constant(rows, cols, false);
  for (Eigen::Index y = 0; y < rows; ++y) {
    const Eigen::Index sy = y - dy;
    if (sy < 0 || sy >= rows) continue;
    for (Eigen::Index x = 0; x < cols; ++x) {
      const Eigen::Index sx = x - dx;
      if (sx < 0 || sx >= cols) continue;
      out(y, x) = m(sy, sx);
    }
  }
  return out;
}

Mask boundary_band(const Mask& m) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  Mask out = Mask::Constant(rows, cols, false);
  constexpr int kDy[4] = {-1, 1, 0, 0};
  constexpr int kDx[4] = {0, 0, -1, 1};
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      for (int k = 0; k < 4; ++k) {
        const Eigen::Index ny = y + kDy[k];
        const Eigen::Index nx = x + kDx[k];
        if (ny < 0 || ny >= rows || nx < 0 || nx >= cols) continue;
        if (m(ny, nx) != m(y, x)) {
          out(y, x) = true;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace spe
