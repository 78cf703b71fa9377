#pragma once

namespace bridgelab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchema = "bridge-lab/1";

}  // namespace bridgelab
