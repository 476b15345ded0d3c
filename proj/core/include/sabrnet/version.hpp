#pragma once

namespace sabrnet {

inline constexpr const char* kToolVersion = "sabrnet 0.1.0";

}  // namespace sabrnet
