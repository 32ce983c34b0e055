#pragma once

namespace rim {
inline constexpr const char* kVersion = "0.1.0";
}
