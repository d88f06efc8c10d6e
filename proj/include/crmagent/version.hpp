#pragma once

namespace crmagent {

inline constexpr const char* kToolVersion = "0.1.0";

}
