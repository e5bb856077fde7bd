#pragma once

namespace tsam {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tsam
