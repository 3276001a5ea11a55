#pragma once

#include <string>
#include <vector>

namespace memmatch {

/// Normalization used for title matching: ASCII lowercase, parenthetical
/// spans removed, every character outside letters/digits/spaces (bytes
/// >= 0x80 count as letters) replaced by a space, whitespace collapsed.
std::string normalize_text(const std::string& s);

/// normalize_text followed by a whitespace split.
std::vector<std::string> normalize_tokens(const std::string& s);

std::vector<std::string> split_whitespace(const std::string& s);

std::string to_lower_ascii(const std::string& s);

}  // namespace memmatch
