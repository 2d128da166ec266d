#include "spe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace spe {

Image normalize_minmax(const Image& img) {
  const float lo = img.minCoeff();
  const float hi = img.maxCoeff();
  if (hi <= lo) return Image::Zero(img.rows(), img.cols());
  return (img - lo) / (hi - lo);
}

namespace {

std::vector<LabeledPair> load_split(const nlohmann::json& arr,
                                    const std::filesystem::path& base,
                                    const std::string& split_name,
                                    bool label_required,
                                    png::GrayConversion conversion,
                                    std::unordered_set<std::string>& seen_ids) {
  std::vector<LabeledPair> pairs;
  pairs.reserve(arr.size());
  for (const auto& entry : arr) {
    LabeledPair pair;
    pair.id = entry.at("id").get<std::string>();
    if (!seen_ids.insert(pair.id).second)
      throw ValidationError("duplicate pair id '" + pair.id + "' in manifest");

    const auto image_path = base / entry.at("image").get<std::string>();
    if (!std::filesystem::exists(image_path))
      throw IngestionError("missing image file: " + image_path.string());
    pair.image = normalize_minmax(png::read_image(image_path, conversion));

    if (entry.contains("label") && !entry.at("label").is_null()) {
      const auto label_path = base / entry.at("label").get<std::string>();
      if (!std::filesystem::exists(label_path))
        throw IngestionError("missing label file: " + label_path.string());
      pair.label = png::read_mask(label_path);
      if (!same_shape(pair.image, pair.label))
        throw ValidationError("pair '" + pair.id +
                              "': image/label shape mismatch");
    } else if (label_required) {
      throw ValidationError("pair '" + pair.id + "' in split '" + split_name +
                            "' has no label");
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace

DatasetSplit load_dataset(const std::filesystem::path& manifest_path,
                          png::GrayConversion conversion) {
  std::ifstream in(manifest_path);
  if (!in) throw IngestionError("missing manifest: " + manifest_path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest parse error in " + manifest_path.string() +
                     ": " + e.what());
  }

  const auto base = manifest_path.has_parent_path()
                        ? manifest_path.parent_path()
                        : std::filesystem::path(".");
  const auto split_array = [&](const char* key) {
    return doc.contains(key) ? doc.at(key) : nlohmann::json::array();
  };

  std::unordered_set<std::string> seen_ids;
  DatasetSplit split;
  split.train = load_split(split_array("train"), base, "train", true,
                           conversion, seen_ids);
  split.validation = load_split(split_array("validation"), base, "validation",
                                true, conversion, seen_ids);
  split.test = load_split(split_array("test"), base, "test", true, conversion,
                          seen_ids);
  // Extra test may be a truly unlabeled cohort.
  split.extra_test = load_split(split_array("extra_test"), base, "extra_test",
                                false, conversion, seen_ids);
  return split;
}

namespace {

// Extracts slice k of the volume along its axis as an H x W grid.
Image volume_slice(const Volume& v, Eigen::Index k) {
  Eigen::Index rows, cols;
  switch (v.axis) {
    case 0: rows = v.height; cols = v.width; break;
    case 1: rows = v.depth; cols = v.width; break;
    case 2: rows = v.depth; cols = v.height; break;
    default: throw ValidationError("volume axis must be 0, 1, or 2");
  }
  Image out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      switch (v.axis) {
        case 0: out(i, j) = v.at(k, i, j); break;
        case 1: out(i, j) = v.at(i, k, j); break;
        default: out(i, j) = v.at(i, j, k); break;
      }
    }
  }
  return out;
}

Eigen::Index axis_extent(const Volume& v) {
  switch (v.axis) {
    case 0: return v.depth;
    case 1: return v.height;
    case 2: return v.width;
    default: throw ValidationError("volume axis must be 0, 1, or 2");
  }
}

}  // namespace

std::vector<LabeledPair> slice_volume(const Volume& vol, const Volume& labels,
                                      int min_foreground) {
  if (vol.depth != labels.depth || vol.height != labels.height ||
      vol.width != labels.width)
    throw ValidationError("slice_volume: volume/label shape mismatch");
  if (vol.depth < 1) throw ValidationError("slice_volume: empty volume");

  std::vector<LabeledPair> pairs;
  const Eigen::Index n = axis_extent(vol);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Image label_slice = volume_slice(labels, k);
    const Mask mask = label_slice != 0.0f;
    if (mask.count() < min_foreground) continue;
    LabeledPair pair;
    pair.image = normalize_minmax(volume_slice(vol, k));
    pair.label = mask;
    pair.id = "slice-" + std::to_string(k);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

Image resize_bilinear(const Image& img, Eigen::Index out_h,
                      Eigen::Index out_w) {
  if (out_h < 1 || out_w < 1)
    throw ValidationError("resize: target dimensions must be positive");
  if (img.rows() == out_h && img.cols() == out_w) return img;

  Image out(out_h, out_w);
  const double sy = static_cast<double>(img.rows()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(img.cols()) / static_cast<double>(out_w);
  for (Eigen::Index y = 0; y < out_h; ++y) {
    // Pixel-center mapping: src = (dst + 0.5) * scale - 0.5.
    double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.rows() - 1));
    const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min(y0 + 1, img.rows() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index x = 0; x < out_w; ++x) {
      double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.cols() - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min(x0 + 1, img.cols() - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * img(y0, x0) + wx * img(y0, x1);
      const double bot = (1.0 - wx) * img(y1, x0) + wx * img(y1, x1);
      out(y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

Mask resize_nearest(const Mask& mask, Eigen::Index out_h, Eigen::Index out_w) {
  if (out_h < 1 || out_w < 1)
    throw ValidationError("resize: target dimensions must be positive");
  if (mask.rows() == out_h && mask.cols() == out_w) return mask;

  Mask out(out_h, out_w);
  const double sy = static_cast<double>(mask.rows()) / static_cast<double>(out_h);
  const double sx = static_cast<double>(mask.cols()) / static_cast<double>(out_w);
  for (Eigen::Index y = 0; y < out_h; ++y) {
    // Nearest source under the same pixel-center mapping as the bilinear path.
    Eigen::Index sy_i = static_cast<Eigen::Index>(
        std::floor((static_cast<double>(y) + 0.5) * sy));
    sy_i = std::clamp<Eigen::Index>(sy_i, 0, mask.rows() - 1);
    for (Eigen::Index x = 0; x < out_w; ++x) {
      Eigen::Index sx_i = static_cast<Eigen::Index>(
          std::floor((static_cast<double>(x) + 0.5) * sx));
      sx_i = std::clamp<Eigen::Index>(sx_i, 0, mask.cols() - 1);
      out(y, x) = mask(sy_i, sx_i);
    }
  }
  return out;
}

LabeledPair resize_pair(const LabeledPair& pair, Eigen::Index out_h,
                        Eigen::Index out_w) {
  require_same_shape(pair.image, pair.label, "resize_pair '" + pair.id + "'");
  LabeledPair out;
  out.id = pair.id;
  out.image = resize_bilinear(pair.image, out_h, out_w);
  out.label = resize_nearest(pair.label, out_h, out_w);
  return out;
}

}  // namespace spe
