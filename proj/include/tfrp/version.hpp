#pragma once

namespace tfrp {

inline constexpr const char* kVersion = "0.1.0";

}
