#pragma once

namespace switchq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace switchq
