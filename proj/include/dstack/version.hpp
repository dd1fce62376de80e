#pragma once

namespace dstack {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dstack
