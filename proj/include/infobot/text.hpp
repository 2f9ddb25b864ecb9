#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace infobot {

using Tokens = std::vector<std::string>;

// Lowercases and splits on whitespace and punctuation. '.', '\'' and '-' are
// kept when they sit between two alphanumeric characters, so "6.5", "pg-13"
// and "don't" stay single tokens.
Tokens tokenize(std::string_view text);

// Canonical form of a KB value: lowercase, trimmed, inner whitespace collapsed.
std::string normalize_value(std::string_view text);

std::string join(const Tokens& tokens, std::string_view sep = " ");

}  // namespace infobot
