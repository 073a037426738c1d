#pragma once

namespace causalkit {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace causalkit
