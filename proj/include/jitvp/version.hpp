#pragma once

namespace jitvp {

inline constexpr const char* kToolName = "jitvp";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace jitvp
