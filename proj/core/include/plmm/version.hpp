#pragma once

namespace plmm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace plmm
