#pragma once

namespace picbox {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kWireVersion = "v1";

}  // namespace picbox
