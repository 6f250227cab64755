// qlbe/version.hpp — library version string
#pragma once

namespace qlbe {

inline constexpr const char* version = "0.1.0";

}  // namespace qlbe
