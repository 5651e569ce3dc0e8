#pragma once

namespace fou {
inline constexpr const char* kVersion = "0.1.0";
}
