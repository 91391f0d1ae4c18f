#include "dshc/text.hpp"

namespace dshc::text {

std::vector<CodePoint> decode_utf8(std::string_view s) {
    std::vector<CodePoint> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto lead = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (lead < 0x80) {
            len = 1;
            cp = lead;
        } else if ((lead & 0xE0) == 0xC0) {
            len = 2;
            cp = lead & 0x1F;
        } else if ((lead & 0xF0) == 0xE0) {
            len = 3;
            cp = lead & 0x0F;
        } else if ((lead & 0xF8) == 0xF0) {
            len = 4;
            cp = lead & 0x07;
        }
        bool ok = len != 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const auto c = static_cast<unsigned char>(s[i + k]);
            if ((c & 0xC0) != 0x80) {
                ok = false;
            } else {
                cp = (cp << 6) | (c & 0x3F);
            }
        }
        if (ok && len > 1) {
            static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
            ok = cp >= kMin[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
        }
        if (!ok) {
            out.push_back({kInvalid, i, 1});
            ++i;
        } else {
            out.push_back({cp, i, len});
            i += len;
        }
    }
    return out;
}

bool is_cjk(char32_t c) noexcept {
    return (c >= 0x4E00 && c <= 0x9FFF)      // unified ideographs
           || (c >= 0x3400 && c <= 0x4DBF)   // extension A
           || (c >= 0x20000 && c <= 0x2FA1F) // extensions B-F, compatibility supplement
           || (c >= 0xF900 && c <= 0xFAFF)   // compatibility ideographs
           || (c >= 0x3040 && c <= 0x30FF)   // hiragana, katakana
           || (c >= 0x31F0 && c <= 0x31FF)   // katakana phonetic extensions
           || (c >= 0xAC00 && c <= 0xD7AF);  // hangul syllables
}

bool is_word_char(char32_t c) noexcept {
    if (c < 0x80) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    }
    if (c == kInvalid || is_cjk(c)) return false;
    if (c >= 0xFF10 && c <= 0xFF19) return true;
    if ((c >= 0xFF21 && c <= 0xFF3A) || (c >= 0xFF41 && c <= 0xFF5A)) return true;
    if (c <= 0xBF) return false;                    // Latin-1 punctuation and symbols
    if (c == 0xD7 || c == 0xF7) return false;       // multiplication, division signs
    if (c >= 0x2000 && c <= 0x2BFF) return false;   // general punctuation through misc symbols
    if (c >= 0x3000 && c <= 0x303F) return false;   // CJK symbols and punctuation
    if (c >= 0xFE30 && c <= 0xFE4F) return false;   // CJK compatibility forms
    if (c >= 0xFF00 && c <= 0xFF65) return false;   // remaining fullwidth punctuation
    if (c >= 0x1F000 && c <= 0x1FAFF) return false; // emoji and pictographs
    return true;
}

std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

}  // namespace dshc::text
