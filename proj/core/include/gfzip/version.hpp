#pragma once

namespace gfzip {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gfzip
