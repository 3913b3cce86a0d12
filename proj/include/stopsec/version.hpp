#pragma once

namespace stopsec {
inline constexpr const char* kVersion = "0.1.0";
}
