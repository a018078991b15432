#pragma once

#include <string>
#include <string_view>

namespace carbontag {

/// FNV-1a, 128-bit variant, rendered as 32 lowercase hex digits.
std::string fnv1a_128_hex(std::string_view bytes);

}  // namespace carbontag
