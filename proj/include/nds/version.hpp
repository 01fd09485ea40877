#pragma once

namespace nds {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nds
