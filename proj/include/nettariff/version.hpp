#pragma once

namespace nettariff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nettariff
