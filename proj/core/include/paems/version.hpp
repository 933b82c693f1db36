#pragma once

namespace paems {

inline constexpr const char *kVersion = "1.0.0";

}  // namespace paems
