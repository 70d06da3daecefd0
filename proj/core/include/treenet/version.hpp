#pragma once

namespace treenet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace treenet
