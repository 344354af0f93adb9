#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/unicode.hpp"

// Renders comments with their predicted (and optionally gold) spans
// marked up, for eyeballing model output. Terminal mode uses SGR codes:
// red for predicted, underline for gold, both when they agree. HTML mode
// wraps predicted spans in <span class="pred"> and gold in <u>.

namespace toxspan {

enum class HighlightMode { kTerminal, kHtml };

namespace detail {

inline void append_html_escaped(std::string& out, std::string_view utf8) {
  for (char c : utf8) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
}

}  // namespace detail

/// `gold` may be null when only predictions are available.
inline std::string highlight_comment(std::u32string_view text, const OffsetSet& pred,
                                     const OffsetSet* gold, HighlightMode mode) {
  std::string out;
  const auto n = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < n) {
    const bool in_pred = pred.contains(i);
    const bool in_gold = gold && gold->contains(i);
    int32_t j = i;
    while (j < n && pred.contains(j) == in_pred && (gold && gold->contains(j)) == in_gold) ++j;
    const std::string run = uni::encode_utf8(text.substr(i, j - i));
    if (mode == HighlightMode::kTerminal) {
      if (in_pred && in_gold) {
        out += "\x1b[4;31m" + run + "\x1b[0m";
      } else if (in_pred) {
        out += "\x1b[31m" + run + "\x1b[0m";
      } else if (in_gold) {
        out += "\x1b[4m" + run + "\x1b[0m";
      } else {
        out += run;
      }
    } else {
      if (in_gold) out += "<u>";
      if (in_pred) out += "<span class=\"pred\">";
      detail::append_html_escaped(out, run);
      if (in_pred) out += "</span>";
      if (in_gold) out += "</u>";
    }
    i = j;
  }
  return out;
}

/// Self-contained HTML page, one paragraph per comment.
inline std::string highlight_html_page(const std::vector<Comment>& comments,
                                       std::span<const OffsetSet> preds,
                                       std::span<const OffsetSet> golds) {
  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
      "<style>.pred{color:#c00;font-weight:bold}u{text-decoration-color:#06c;"
      "text-decoration-thickness:2px}</style>\n</head>\n<body>\n";
  for (std::size_t i = 0; i < comments.size(); ++i) {
    const std::u32string text32 = uni::decode_utf8(comments[i].text);
    const OffsetSet* gold = golds.empty() ? nullptr : &golds[i];
    out += "<p id=\"c" + std::to_string(comments[i].id) + "\">";
    out += highlight_comment(text32, preds[i], gold, HighlightMode::kHtml);
    out += "</p>\n";
  }
  out += "</body>\n</html>\n";
  return out;
}

}  // namespace toxspan
