#pragma once

namespace anchorcrc {

inline constexpr const char* kVersion = "0.1.0";

} // namespace anchorcrc
