#pragma once

namespace nlmd {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr unsigned kFormatVersion = 1;  // binary array format version

}  // namespace nlmd
