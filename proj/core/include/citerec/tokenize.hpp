#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace citerec {

/// Tokenizer registry. Two built-ins:
///   "unicode"    — runs of word characters (ASCII alphanumerics lowercased,
///                  plus non-ASCII letters); each CJK ideograph is its own
///                  token.
///   "cjk-bigram" — identical to "unicode" except maximal CJK runs emit
///                  overlapping character bigrams (a lone ideograph emits
///                  itself).
/// Unknown ids raise ConfigError.
std::vector<std::string> tokenize(std::string_view text, const std::string& tokenizer_id);

inline const char* kDefaultTokenizer = "unicode";

bool is_known_tokenizer(const std::string& tokenizer_id);

/// True when the token consists of CJK code points only (used when merged
/// keyphrases are rendered: CJK tokens concatenate without separators).
bool is_cjk_token(std::string_view token);

/// Number of Unicode code points in a UTF-8 string (malformed bytes count 1).
std::size_t codepoint_count(std::string_view s);

}  // namespace citerec
