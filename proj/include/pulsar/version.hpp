#pragma once

namespace pulsar {

inline constexpr const char* kToolName = "pulsar";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace pulsar
