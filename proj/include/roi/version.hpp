#pragma once

namespace roi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace roi
