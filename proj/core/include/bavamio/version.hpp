#pragma once

namespace bavamio {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bavamio
