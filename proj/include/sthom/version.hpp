#pragma once

namespace sthom {
inline constexpr const char* version = "0.1.0";
}
