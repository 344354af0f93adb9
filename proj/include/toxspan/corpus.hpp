#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toxspan/error.hpp"
#include "toxspan/unicode.hpp"

// Span-annotated comment corpora. The on-disk format is a two-column CSV
// with header `spans,text`; the spans column is a bracketed list of the
// character indices annotated as toxic, e.g. "[11, 12, 13, 14, 15]".
// All indices count Unicode scalar values from 0.

namespace toxspan {

/// Sorted duplicate-free set of character indices.
class OffsetSet {
 public:
  OffsetSet() = default;

  static OffsetSet from_unsorted(std::vector<int32_t> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    OffsetSet s;
    s.values_ = std::move(values);
    return s;
  }

  const std::vector<int32_t>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  bool contains(int32_t offset) const {
    return std::binary_search(values_.begin(), values_.end(), offset);
  }

  void insert(int32_t offset) {
    auto it = std::lower_bound(values_.begin(), values_.end(), offset);
    if (it == values_.end() || *it != offset) values_.insert(it, offset);
  }

  friend bool operator==(const OffsetSet&, const OffsetSet&) = default;

 private:
  std::vector<int32_t> values_;
};

inline OffsetSet set_union(const OffsetSet& a, const OffsetSet& b) {
  std::vector<int32_t> merged;
  merged.reserve(a.size() + b.size());
  std::set_union(a.values().begin(), a.values().end(), b.values().begin(), b.values().end(),
                 std::back_inserter(merged));
  return OffsetSet::from_unsorted(std::move(merged));
}

inline std::size_t intersection_size(const OffsetSet& a, const OffsetSet& b) {
  std::size_t n = 0;
  auto ia = a.values().begin();
  auto ib = b.values().begin();
  while (ia != a.values().end() && ib != b.values().end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

/// Inclusive [start, end] character range.
struct Span {
  int32_t start = 0;
  int32_t end = 0;

  int32_t length() const { return end - start + 1; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Maximal runs of consecutive offsets, sorted by start.
inline std::vector<Span> offsets_to_spans(const OffsetSet& offsets) {
  std::vector<Span> spans;
  const auto& v = offsets.values();
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[j] + 1) ++j;
    spans.push_back({v[i], v[j]});
    i = j + 1;
  }
  return spans;
}

/// Union of all [start, end] ranges; overlaps merge silently.
inline OffsetSet spans_to_offsets(const std::vector<Span>& spans) {
  std::vector<int32_t> v;
  for (const Span& s : spans) {
    for (int32_t o = s.start; o <= s.end; ++o) v.push_back(o);
  }
  return OffsetSet::from_unsorted(std::move(v));
}

/// One corpus record.
struct Comment {
  int32_t id = 0;            // zero-based row order
  std::string text;          // UTF-8, preserved byte-exactly
  OffsetSet toxic_offsets;   // character indices into the decoded text
};

/// "[11, 12, 13]" with canonical ", " separators. parse_offset_list
/// accepts arbitrary spacing, so parse/serialize round-trips up to
/// whitespace normalization inside the brackets.
inline std::string format_offset_list(const OffsetSet& offsets) {
  std::string out = "[";
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(offsets.values()[i]);
  }
  out += "]";
  return out;
}

inline OffsetSet parse_offset_list(std::string_view field) {
  std::size_t i = 0;
  const auto skip_ws = [&] {
    while (i < field.size() && (field[i] == ' ' || field[i] == '\t')) ++i;
  };
  const auto fail = [&](const std::string& why) -> OffsetSet {
    throw Error("malformed offset list \"" + std::string(field) + "\": " + why);
  };

  skip_ws();
  if (i >= field.size() || field[i] != '[') fail("expected '['");
  ++i;
  std::vector<int32_t> values;
  skip_ws();
  if (i < field.size() && field[i] == ']') {
    ++i;
  } else {
    while (true) {
      skip_ws();
      if (i >= field.size() || field[i] < '0' || field[i] > '9') fail("expected digit");
      int64_t value = 0;
      while (i < field.size() && field[i] >= '0' && field[i] <= '9') {
        value = value * 10 + (field[i] - '0');
        if (value > INT32_MAX) fail("offset too large");
        ++i;
      }
      values.push_back(static_cast<int32_t>(value));
      skip_ws();
      if (i < field.size() && field[i] == ',') {
        ++i;
        continue;
      }
      if (i < field.size() && field[i] == ']') {
        ++i;
        break;
      }
      fail("expected ',' or ']'");
    }
  }
  skip_ws();
  if (i != field.size()) fail("trailing characters after ']'");
  return OffsetSet::from_unsorted(std::move(values));
}

namespace detail {

// RFC-4180-style record reader: double-quote quoting, embedded quotes
// doubled, LF or CRLF row endings, newlines allowed inside quoted fields.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool quoted = false;
  while (true) {
    if (quoted) {
      if (c == EOF) throw Error("unterminated quoted CSV field");
      if (c == '"') {
        int next = in.get();
        if (next == '"') {
          field += '"';
        } else {
          quoted = false;
          c = next;
          continue;
        }
      } else {
        field += static_cast<char>(c);
      }
    } else {
      if (c == EOF || c == '\n') {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(std::move(field));
        return true;
      }
      if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else {
        field += static_cast<char>(c);
      }
    }
    c = in.get();
  }
}

inline std::string csv_quote(std::string_view field) {
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';  // double embedded quotes
    out += c;
  }
  out += "\"";
  return out;
}

}  // namespace detail

/// Parses a TSD-style CSV. Row numbers in errors are 1-based file rows
/// (the header is row 1).
inline std::vector<Comment> parse_tsd_csv(std::istream& in, std::string_view name = "<stream>") {
  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields)) {
    throw Error(std::string(name) + ": empty file, expected header \"spans,text\"");
  }
  // Tolerate a UTF-8 BOM in front of the header.
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  if (fields.size() != 2 || fields[0] != "spans" || fields[1] != "text") {
    throw Error(std::string(name) + ": expected header \"spans,text\"");
  }

  std::vector<Comment> comments;
  int32_t row = 1;
  while (detail::read_csv_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank trailing line
    if (fields.size() != 2) {
      throw Error(std::string(name) + " row " + std::to_string(row) + ": expected 2 fields, got " +
                  std::to_string(fields.size()));
    }
    Comment c;
    c.id = static_cast<int32_t>(comments.size());
    try {
      c.toxic_offsets = parse_offset_list(fields[0]);
    } catch (const Error& e) {
      throw Error(std::string(name) + " row " + std::to_string(row) + ": " + e.what());
    }
    c.text = std::move(fields[1]);
    std::u32string decoded;
    try {
      decoded = uni::decode_utf8(c.text);
    } catch (const Error& e) {
      throw Error(std::string(name) + " row " + std::to_string(row) + ": " + e.what());
    }
    const auto len = static_cast<int32_t>(decoded.size());
    if (!c.toxic_offsets.empty() && c.toxic_offsets.values().back() >= len) {
      throw Error(std::string(name) + " row " + std::to_string(row) + ": offset " +
                  std::to_string(c.toxic_offsets.values().back()) + " out of range (text length " +
                  std::to_string(len) + ")");
    }
    comments.push_back(std::move(c));
  }
  return comments;
}

inline std::vector<Comment> parse_tsd_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file: " + path);
  return parse_tsd_csv(in, path);
}

inline void write_tsd_csv(std::ostream& out, const std::vector<Comment>& comments) {
  out << "spans,text\n";
  for (const Comment& c : comments) {
    out << detail::csv_quote(format_offset_list(c.toxic_offsets)) << ","
        << detail::csv_quote(c.text) << "\n";
  }
}

inline void write_tsd_csv_file(const std::string& path, const std::vector<Comment>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  write_tsd_csv(out, comments);
}

}  // namespace toxspan
