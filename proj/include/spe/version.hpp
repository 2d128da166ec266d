#pragma once

namespace spe {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spe
