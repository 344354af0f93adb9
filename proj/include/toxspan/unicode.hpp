#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "toxspan/error.hpp"
#include "toxspan/unicode_tables.hpp"

// UTF-8 codec plus the character classes the pipeline needs. All span
// offsets in the toolkit count Unicode scalar values, so text is decoded
// to char32_t once and indexed directly from then on. Classification is
// table-driven (see scripts/gen_unicode_tables.py) instead of
// locale-driven so results do not depend on the host environment.

namespace toxspan::uni {

namespace detail {

template <std::size_t N>
inline bool in_ranges(char32_t cp, const char32_t (&table)[N][2]) {
  std::size_t lo = 0, hi = N;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (cp < table[mid][0]) {
      hi = mid;
    } else if (cp > table[mid][1]) {
      lo = mid + 1;
    } else {
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// White_Space property.
inline bool is_whitespace(char32_t cp) {
  return detail::in_ranges(cp, tables::kWhiteSpace);
}

/// Letter (L*), letter number (Nl) or decimal digit (Nd). This is the
/// "alphanumeric" class used for word-boundary expansion.
inline bool is_word_char(char32_t cp) {
  return detail::in_ranges(cp, tables::kWordChar);
}

/// General category P*.
inline bool is_punctuation(char32_t cp) {
  return detail::in_ranges(cp, tables::kPunct);
}

/// Simple 1:1 lowercase mapping. Code points whose full lowercase
/// expansion is longer than one character map to themselves so that
/// lowercasing never changes string length (offset bookkeeping relies
/// on this).
inline char32_t to_lower(char32_t cp) {
  constexpr std::size_t n = sizeof(tables::kLowerPairs) / sizeof(tables::kLowerPairs[0]);
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (tables::kLowerPairs[mid][0] < cp) {
      lo = mid + 1;
    } else if (tables::kLowerPairs[mid][0] > cp) {
      hi = mid;
    } else {
      return tables::kLowerPairs[mid][1];
    }
  }
  return cp;
}

inline std::u32string lowercase(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t cp : text) out.push_back(to_lower(cp));
  return out;
}

/// Strict UTF-8 decoder. Rejects truncated sequences, overlong encodings
/// and surrogate code points; the error names the byte offset.
inline std::u32string decode_utf8(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto fail = [&](const char* why) -> char32_t {
      throw Error("invalid UTF-8 at byte " + std::to_string(i) + ": " + why);
    };
    const unsigned char b0 = static_cast<unsigned char>(bytes[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      fail("bad leading byte");
    }
    if (i + len > bytes.size()) fail("truncated sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char bk = static_cast<unsigned char>(bytes[i + k]);
      if ((bk & 0xC0) != 0x80) fail("bad continuation byte");
      cp = (cp << 6) | (bk & 0x3F);
    }
    constexpr char32_t kMinForLen[] = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMinForLen[len]) fail("overlong encoding");
    if (cp >= 0xD800 && cp <= 0xDFFF) fail("surrogate code point");
    if (cp > 0x10FFFF) fail("code point out of range");
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) append_utf8(out, cp);
  return out;
}

}  // namespace toxspan::uni
