#pragma once

namespace tep {

inline constexpr const char* kVersion = "tepkit 0.1.0";

}  // namespace tep
