#pragma once

namespace eulab {

inline constexpr const char* kToolName = "eulab";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace eulab
