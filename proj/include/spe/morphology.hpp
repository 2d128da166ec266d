#pragma once

#include "spe/types.hpp"

namespace spe {

/// Binary erosion with the full 3x3 structuring element, `steps` iterations.
/// Pixels outside the grid count as background.
Mask erode(const Mask& m, int steps);

/// Binary dilation with the full 3x3 structuring element.
Mask dilate(const Mask& m, int steps);

/// Shifts the mask by (dy, dx); pixels shifted in from outside are background.
Mask translate(const Mask& m, int dy, int dx);

/// Pixels with at least one differing 4-neighbor (the inner and outer
/// boundary band together).
Mask boundary_band(const Mask& m);

}  // namespace spe
