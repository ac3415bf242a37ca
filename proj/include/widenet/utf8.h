#ifndef WIDENET_UTF8_H
#define WIDENET_UTF8_H

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace widenet::utf8 {

// Decodes UTF-8 into code points. Returns nullopt on malformed input
// (overlong forms, surrogates and truncated sequences are rejected).
std::optional<std::u32string> decode(std::string_view text);

std::string encode(std::u32string_view text);

// Number of code points, or nullopt when the input is not valid UTF-8.
std::optional<std::size_t> length(std::string_view text);

bool is_space(char32_t c);

}  // namespace widenet::utf8

#endif  // WIDENET_UTF8_H
