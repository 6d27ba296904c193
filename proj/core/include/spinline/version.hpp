#pragma once

namespace spinline {

inline constexpr const char* kVersion = "0.1.0";

} // namespace spinline
