#pragma once

// Small string helpers shared by the text formats.

#include <string>
#include <string_view>
#include <vector>

namespace fmgen {

/// [A-Za-z][A-Za-z0-9_]*
bool is_identifier(std::string_view s);

/// Double-quoted with \" \\ \n \t escapes.
std::string quote(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits on '\n'; a trailing newline does not produce an empty last line.
std::vector<std::string_view> split_lines(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

std::string read_file(const std::string& path);

}  // namespace fmgen
