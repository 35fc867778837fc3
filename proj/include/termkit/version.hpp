#pragma once

namespace termkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace termkit
