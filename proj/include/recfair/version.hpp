#pragma once

namespace recfair {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace recfair
