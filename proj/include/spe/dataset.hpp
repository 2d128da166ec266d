#pragma once

#include <filesystem>
#include <vector>

#include "spe/png_io.hpp"
#include "spe/types.hpp"

namespace spe {

/// Per-image min-max normalization to [0, 1]. Constant images map to 0.
Image normalize_minmax(const Image& img);

/// Loads the four splits named by a JSON manifest:
///   { "train": [{"image": p, "label": p, "id": s}, ...],
///     "validation": [...], "test": [...], "extra_test": [...] }
/// Paths are resolved against the manifest's directory. extra_test entries
/// may omit "label". Images are min-max normalized; labels binarized
/// (nonzero = foreground). Ids must be unique across all splits and each
/// image must match its label's shape.
DatasetSplit load_dataset(const std::filesystem::path& manifest_path,
                          png::GrayConversion conversion =
                              png::GrayConversion::luma);

/// Slices a volume pair along its axis into labeled 2D pairs, keeping only
/// slices whose label has at least `min_foreground` foreground voxels.
/// Slice order is preserved; image slices are min-max normalized.
std::vector<LabeledPair> slice_volume(const Volume& vol, const Volume& labels,
                                      int min_foreground = 20);

Image resize_bilinear(const Image& img, Eigen::Index out_h, Eigen::Index out_w);
Mask resize_nearest(const Mask& mask, Eigen::Index out_h, Eigen::Index out_w);

/// Image resized bilinearly, mask via nearest neighbor (stays strictly
/// binary). Default target follows the reference segmenter's input size.
LabeledPair resize_pair(const LabeledPair& pair, Eigen::Index out_h = 128,
                        Eigen::Index out_w = 128);

}  // namespace spe
