#pragma once

namespace claimsift {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace claimsift
