#pragma once

namespace spinbench {

inline constexpr const char* kVersion = "0.1.0";

} // namespace spinbench
