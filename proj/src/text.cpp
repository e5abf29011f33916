#include "tdc/text.hpp"

namespace tdc::text {

uint32_t decode_utf8(std::string_view s, size_t& pos) {
    const uint8_t b0 = static_cast<uint8_t>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int extra;
    uint32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + extra >= s.size()) {
        // Truncated sequence.
        ++pos;
        return 0xFFFD;
    }
    for (int i = 1; i <= extra; ++i) {
        const uint8_t b = static_cast<uint8_t>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    pos += 1 + extra;
    return cp;
}

void append_utf8(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_whitespace(uint32_t cp) {
    switch (cp) {
        case ' ':
        case '\t':
        case '\n':
        case '\r':
        case '\f':
        case '\v':
        case 0x00A0:  // no-break space
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:  // ideographic space
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punctuation(uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= '!' && cp <= '/') || (cp >= ':' && cp <= '@') || (cp >= '[' && cp <= '`') ||
               (cp >= '{' && cp <= '~');
    }
    // General punctuation, CJK symbols, fullwidth forms, plus a few common
    // standalone marks (Devanagari danda, guillemets, inverted ?!).
    if (cp >= 0x2010 && cp <= 0x205E) return true;
    if (cp >= 0x3001 && cp <= 0x303F) return true;
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF40) return true;
    if (cp >= 0xFF5B && cp <= 0xFF65) return true;
    switch (cp) {
        case 0x00A1:
        case 0x00A7:
        case 0x00AB:
        case 0x00B6:
        case 0x00B7:
        case 0x00BB:
        case 0x00BF:
        case 0x0964:  // danda
        case 0x0965:  // double danda
            return true;
        default:
            return false;
    }
}

uint32_t to_lower(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    // Latin-1 uppercase block, skipping the multiplication sign.
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
    return cp;
}

std::vector<std::string> tokenize_basic(std::string_view s) {
    std::vector<std::string> terms;
    std::string current;
    size_t pos = 0;
    while (pos < s.size()) {
        const uint32_t cp = decode_utf8(s, pos);
        if (is_whitespace(cp) || is_punctuation(cp)) {
            if (!current.empty()) {
                terms.push_back(std::move(current));
                current.clear();
            }
        } else {
            append_utf8(current, to_lower(cp));
        }
    }
    if (!current.empty()) terms.push_back(std::move(current));
    return terms;
}

std::string trim(std::string_view s) {
    size_t begin = 0;
    size_t end = s.size();
    while (begin < end && (static_cast<uint8_t>(s[begin]) <= ' ')) ++begin;
    while (end > begin && (static_cast<uint8_t>(s[end - 1]) <= ' ')) --end;
    return std::string(s.substr(begin, end - begin));
}

}  // namespace tdc::text
