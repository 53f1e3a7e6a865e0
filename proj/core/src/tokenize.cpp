#include "citerec/tokenize.hpp"

#include <cstdint>

#include "citerec/error.hpp"

namespace citerec {

namespace {

// Decodes one UTF-8 code point starting at s[i]; advances i past it.
// Malformed sequences decode as U+FFFD and advance one byte.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xe0) == 0xc0) {
        len = 2;
        cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
        len = 3;
        cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xfffd;
    }
    if (i + static_cast<std::size_t>(len) > s.size()) {
        ++i;
        return 0xfffd;
    }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((b & 0xc0) != 0x80) {
            ++i;
            return 0xfffd;
        }
        cp = (cp << 6) | (b & 0x3f);
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x2e80 && cp <= 0x2eff) ||   // CJK radicals
           (cp >= 0x3400 && cp <= 0x4dbf) ||   // ideograph extension A
           (cp >= 0x4e00 && cp <= 0x9fff) ||   // unified ideographs
           (cp >= 0xf900 && cp <= 0xfaff) ||   // compatibility ideographs
           (cp >= 0x20000 && cp <= 0x2ffff);   // extensions B..F
}

bool is_ascii_word(char32_t cp) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= '0' && cp <= '9');
}

// Letters outside ASCII and outside the CJK ideograph ranges (kana, Hangul,
// Cyrillic, accented Latin, ...). Punctuation, symbol, and space blocks are
// excluded coarsely; full Unicode category tables are out of scope here.
bool is_other_letter(char32_t cp) {
    if (cp < 0x80 || is_cjk(cp)) return false;
    if (cp >= 0x2000 && cp <= 0x303f) return false;  // general punct + CJK punct
    if (cp >= 0xff00 && cp <= 0xffef) return false;  // full/half-width forms
    if (cp == 0xfffd || cp == 0xa0) return false;
    return true;
}

char32_t to_lower_ascii(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    return cp;
}

enum class Kind { kSpace, kWord, kCjk };

Kind classify(char32_t cp) {
    if (is_ascii_word(cp) || is_other_letter(cp)) return Kind::kWord;
    if (is_cjk(cp)) return Kind::kCjk;
    return Kind::kSpace;
}

std::vector<std::string> tokenize_impl(std::string_view text, bool cjk_bigrams) {
    std::vector<std::string> tokens;
    std::string word;                 // pending non-CJK word run
    std::vector<std::string> cjk_run;  // pending CJK characters (utf-8 each)

    auto flush_word = [&] {
        if (!word.empty()) {
            tokens.push_back(word);
            word.clear();
        }
    };
    auto flush_cjk = [&] {
        if (cjk_run.empty()) return;
        if (!cjk_bigrams || cjk_run.size() == 1) {
            if (cjk_bigrams) {
                tokens.push_back(cjk_run[0]);
            } else {
                for (auto& c : cjk_run) tokens.push_back(std::move(c));
            }
        } else {
            for (std::size_t i = 0; i + 1 < cjk_run.size(); ++i)
                tokens.push_back(cjk_run[i] + cjk_run[i + 1]);
        }
        cjk_run.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = decode_utf8(text, i);
        switch (classify(cp)) {
            case Kind::kWord:
                flush_cjk();
                append_utf8(word, to_lower_ascii(cp));
                break;
            case Kind::kCjk: {
                flush_word();
                std::string ch;
                append_utf8(ch, cp);
                cjk_run.push_back(std::move(ch));
                break;
            }
            case Kind::kSpace:
                flush_word();
                flush_cjk();
                break;
        }
    }
    flush_word();
    flush_cjk();
    return tokens;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const std::string& tokenizer_id) {
    if (tokenizer_id == "unicode") return tokenize_impl(text, false);
    if (tokenizer_id == "cjk-bigram") return tokenize_impl(text, true);
    throw ConfigError("unknown tokenizer: '" + tokenizer_id +
                      "' (known: unicode, cjk-bigram)");
}

bool is_known_tokenizer(const std::string& tokenizer_id) {
    return tokenizer_id == "unicode" || tokenizer_id == "cjk-bigram";
}

bool is_cjk_token(std::string_view token) {
    if (token.empty()) return false;
    std::size_t i = 0;
    while (i < token.size()) {
        if (!is_cjk(decode_utf8(token, i))) return false;
    }
    return true;
}

std::size_t codepoint_count(std::string_view s) {
    std::size_t i = 0, n = 0;
    while (i < s.size()) {
        decode_utf8(s, i);
        ++n;
    }
    return n;
}

}  // namespace citerec
