#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace dshc::text {

/// One decoded code point and the byte range it occupies.
struct CodePoint {
    char32_t value = 0;
    std::size_t offset = 0;
    std::size_t length = 0;
};

inline constexpr char32_t kInvalid = 0xFFFFFFFF;

/// Lenient UTF-8 decoding: an invalid lead or continuation byte yields a
/// one-byte CodePoint with value kInvalid.
std::vector<CodePoint> decode_utf8(std::string_view s);

/// CJK ideographs, kana, Hangul syllables and their extension blocks.
bool is_cjk(char32_t c) noexcept;

/// ASCII letters/digits, fullwidth letters/digits, and non-ASCII letters
/// outside the punctuation and symbol blocks.
bool is_word_char(char32_t c) noexcept;

std::string_view trim(std::string_view s) noexcept;

}  // namespace dshc::text
