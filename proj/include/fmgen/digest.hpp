#pragma once

#include <string>
#include <string_view>

namespace fmgen {

/// SHA-256 of `data` as lowercase hex.
std::string sha256_hex(std::string_view data);

}  // namespace fmgen
