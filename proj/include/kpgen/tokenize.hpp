// Text tokenization: lowercase, split on whitespace/punctuation with
// intra-word hyphens kept, numerals collapsed to the <digit> placeholder.
#pragma once

#include <cctype>
#include <cstring>
#include <string>
#include <vector>

#include "kpgen/common.hpp"

namespace kpgen {

namespace detail {

inline bool is_word_char(unsigned char c) {
  // non-ASCII bytes (UTF-8 sequences) are treated as letters
  return std::isalnum(c) != 0 || c >= 0x80;
}

inline bool is_digit_char(unsigned char c) { return std::isdigit(c) != 0; }

// token made only of digits, signs, commas, periods (at least one digit)
inline bool is_numeral(const std::string& tok) {
  bool has_digit = false;
  for (unsigned char c : tok) {
    if (is_digit_char(c)) {
      has_digit = true;
    } else if (c != '+' && c != '-' && c != '.' && c != ',') {
      return false;
    }
  }
  return has_digit;
}

}  // namespace detail

// Splits arbitrary UTF-8 text into lowercase tokens. Hyphens between word
// characters and '.'/',' between digits stay inside the token; a leading
// '+'/'-' attaches to a following digit. Any token that is purely numeric
// becomes the <digit> placeholder. The placeholder itself is recognized
// verbatim, so the function is idempotent on its own output.
inline std::vector<std::string> tokenize(const std::string& text) {
  using detail::is_digit_char;
  using detail::is_word_char;

  std::vector<std::string> out;
  std::string cur;
  const size_t digit_tok_len = std::strlen(kDigitToken);

  auto flush = [&]() {
    if (cur.empty()) return;
    if (detail::is_numeral(cur)) cur = kDigitToken;
    out.push_back(cur);
    cur.clear();
  };

  const size_t n = text.size();
  for (size_t i = 0; i < n; ++i) {
    if (text.compare(i, digit_tok_len, kDigitToken) == 0) {
      flush();
      out.emplace_back(kDigitToken);
      i += digit_tok_len - 1;
      continue;
    }
    unsigned char c = static_cast<unsigned char>(text[i]);
    unsigned char next = i + 1 < n ? static_cast<unsigned char>(text[i + 1]) : 0;
    if (is_word_char(c)) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (c == '-' && !cur.empty() &&
               is_word_char(static_cast<unsigned char>(cur.back())) && is_word_char(next)) {
      cur.push_back('-');
    } else if ((c == '.' || c == ',') && !cur.empty() &&
               is_digit_char(static_cast<unsigned char>(cur.back())) && is_digit_char(next)) {
      cur.push_back(static_cast<char>(c));
    } else if ((c == '+' || c == '-') && cur.empty() && is_digit_char(next)) {
      cur.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& toks) {
  std::string s;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) s.push_back(' ');
    s += toks[i];
  }
  return s;
}

}  // namespace kpgen
