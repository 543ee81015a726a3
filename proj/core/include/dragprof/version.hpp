#pragma once

namespace dragprof {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dragprof
