#pragma once

namespace cstress {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cstress
