#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tdc::text {

// Decodes the UTF-8 sequence starting at `pos`; advances `pos` past it.
// Malformed bytes decode as U+FFFD one byte at a time.
uint32_t decode_utf8(std::string_view s, size_t& pos);

void append_utf8(std::string& out, uint32_t cp);

bool is_whitespace(uint32_t cp);
bool is_punctuation(uint32_t cp);

// Lowercases ASCII and Latin-1 letters; other scripts pass through.
uint32_t to_lower(uint32_t cp);

// Splits on whitespace and punctuation boundaries, lowercasing cased
// scripts. Punctuation is dropped; terms are maximal runs of the remaining
// code points. Empty input gives an empty list.
std::vector<std::string> tokenize_basic(std::string_view s);

std::string trim(std::string_view s);

}  // namespace tdc::text
