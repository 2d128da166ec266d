#pragma once

#include "spe/types.hpp"

namespace spe {

/// Exact squared Euclidean distance to the nearest foreground pixel,
/// two-pass lower-envelope algorithm over columns then rows. Pixels of an
/// all-background mask get kEdtInfinity.
inline constexpr double kEdtInfinity = 1e20;

Eigen::ArrayXXd squared_edt(const Mask& foreground);

}  // namespace spe
