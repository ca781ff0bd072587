#pragma once

namespace ntfhmm {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "ntfhmm";

}  // namespace ntfhmm
