#pragma once

namespace qbatt {

inline constexpr const char* kEngineVersion = "qbatt 1.0.0";

}  // namespace qbatt
