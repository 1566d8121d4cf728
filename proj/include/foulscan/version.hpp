#pragma once

namespace foulscan {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "foulscan";

}  // namespace foulscan
