#pragma once

namespace hurstlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hurstlab
