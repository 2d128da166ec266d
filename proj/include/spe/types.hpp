#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "spe/errors.hpp"
#include "spe/rng.hpp"

namespace spe {

/// Foreground grid. Rows are image rows (y), columns are image columns (x).
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Intensity grid with values in [0, 1], same row/column convention.
using Image = Eigen::ArrayXXf;

struct LabeledPair {
  Image image;
  Mask label;
  std::string id;
};

struct DatasetSplit {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> validation;
  std::vector<LabeledPair> test;
  std::vector<LabeledPair> extra_test;
};

/// D x H x W voxel grid, sliced into 2D images along `axis` (0 = depth).
struct Volume {
  Eigen::Index depth = 0;
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  int axis = 0;
  std::vector<float> voxels;  // row-major (d, h, w)

  float& at(Eigen::Index d, Eigen::Index h, Eigen::Index w) {
    return voxels[static_cast<std::size_t>((d * height + h) * width + w)];
  }
  float at(Eigen::Index d, Eigen::Index h, Eigen::Index w) const {
    return voxels[static_cast<std::size_t>((d * height + h) * width + w)];
  }

  static Volume zeros(Eigen::Index d, Eigen::Index h, Eigen::Index w,
                      int axis = 0) {
    Volume v;
    v.depth = d;
    v.height = h;
    v.width = w;
    v.axis = axis;
    v.voxels.assign(static_cast<std::size_t>(d * h * w), 0.0f);
    return v;
  }
};

template <typename A, typename B>
bool same_shape(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const std::string& what) {
  if (!same_shape(a, b)) {
    throw ValidationError(what + ": shape mismatch (" +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

/// 8-bit quantization used whenever an intensity image crosses a file
/// boundary. Images quantized with this are preserved bit-exactly by the
/// wire protocol.
inline unsigned char quantize8(float v) {
  float x = v;
  if (x < 0.0f) x = 0.0f;
  if (x > 1.0f) x = 1.0f;
  return static_cast<unsigned char>(x * 255.0f + 0.5f);
}

/// Content hash over the 8-bit quantized pixels, row-major.
inline std::uint64_t image_digest(const Image& img) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(img.size()));
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x)
      bytes.push_back(quantize8(img(y, x)));
  return rng::fnv1a64(bytes);
}

/// Content hash over the mask bits, row-major.
inline std::uint64_t mask_digest(const Mask& m) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index y = 0; y < m.rows(); ++y)
    for (Eigen::Index x = 0; x < m.cols(); ++x)
      bytes.push_back(m(y, x) ? 1 : 0);
  return rng::fnv1a64(bytes);
}

}  // namespace spe
