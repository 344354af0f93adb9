#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/unicode.hpp"

// Annotation cleaning. Raw spans frequently disagree with word boundaries
// in three mechanical ways: whitespace hanging off a span edge, stray
// singleton characters, and words marked only partially. Each maximal run
// of consecutive annotated offsets is repaired with three rules, applied
// in order:
//   1. trim whitespace off the span boundaries
//   2. drop the span if it is a single character
//   3. expand the span outward while the neighboring character is
//      alphanumeric, so partially-marked words become whole words
// The surviving spans are unioned and the pass is run once more, so the
// result is a fixpoint even when expansion merges adjacent runs.

namespace toxspan {

/// Counts of rule applications, for audit output.
struct CleanReport {
  int64_t trimmed_whitespace = 0;   // offsets removed by rule 1
  int64_t dropped_singletons = 0;   // groups removed by rule 2
  int64_t expanded_left = 0;        // offsets added by left expansion
  int64_t expanded_right = 0;       // offsets added by right expansion

  CleanReport& operator+=(const CleanReport& o) {
    trimmed_whitespace += o.trimmed_whitespace;
    dropped_singletons += o.dropped_singletons;
    expanded_left += o.expanded_left;
    expanded_right += o.expanded_right;
    return *this;
  }
};

/// Rule 1: shrink while the first or last character is whitespace.
/// Returns nothing if the span vanishes.
inline std::optional<Span> trim_whitespace_boundaries(std::u32string_view text, Span group,
                                                      CleanReport* report = nullptr) {
  while (group.start <= group.end && uni::is_whitespace(text[group.start])) {
    ++group.start;
    if (report) ++report->trimmed_whitespace;
  }
  while (group.start <= group.end && uni::is_whitespace(text[group.end])) {
    --group.end;
    if (report) ++report->trimmed_whitespace;
  }
  if (group.start > group.end) return std::nullopt;
  return group;
}

/// Rule 2: a single consecutive character marked as toxic is discarded.
inline std::optional<Span> drop_singleton(std::u32string_view /*text*/, Span group,
                                          CleanReport* report = nullptr) {
  if (group.start == group.end) {
    if (report) ++report->dropped_singletons;
    return std::nullopt;
  }
  return group;
}

/// Rule 3: while the character just outside the span is alphanumeric,
/// grow the span over it, so partially marked words become fully marked.
inline Span expand_to_word_boundaries(std::u32string_view text, Span group,
                                      CleanReport* report = nullptr) {
  while (group.start > 0 && uni::is_word_char(text[group.start - 1])) {
    --group.start;
    if (report) ++report->expanded_left;
  }
  while (group.end + 1 < static_cast<int32_t>(text.size()) &&
         uni::is_word_char(text[group.end + 1])) {
    ++group.end;
    if (report) ++report->expanded_right;
  }
  return group;
}

namespace detail {

inline OffsetSet clean_pass(std::u32string_view text, const OffsetSet& offsets,
                            CleanReport& report) {
  std::vector<Span> kept;
  for (Span group : offsets_to_spans(offsets)) {
    auto trimmed = trim_whitespace_boundaries(text, group, &report);
    if (!trimmed) continue;
    auto survived = drop_singleton(text, *trimmed, &report);
    if (!survived) continue;
    kept.push_back(expand_to_word_boundaries(text, *survived, &report));
  }
  return spans_to_offsets(kept);
}

}  // namespace detail

/// Cleans one comment's annotation. All offsets must be < text length.
inline std::pair<OffsetSet, CleanReport> clean_offsets(std::u32string_view text,
                                                       const OffsetSet& raw) {
  CleanReport report;
  OffsetSet once = detail::clean_pass(text, raw, report);
  OffsetSet twice = detail::clean_pass(text, once, report);
  return {std::move(twice), report};
}

/// Alternative to rule 3 (off by default in the CLI): instead of
/// expanding partial marks outward, drop the characters of any word that
/// was not marked in full. A "word" is a maximal run of alphanumeric
/// characters; non-word characters inside the span are kept, then rules
/// 1 and 2 run once more so discarded words never leave dangling
/// whitespace or singletons behind.
inline std::pair<OffsetSet, CleanReport> clean_offsets_discard_partial(std::u32string_view text,
                                                                       const OffsetSet& raw) {
  CleanReport report;
  std::vector<Span> kept;
  for (Span group : offsets_to_spans(raw)) {
    auto trimmed = trim_whitespace_boundaries(text, group, &report);
    if (!trimmed) continue;
    auto survived = drop_singleton(text, *trimmed, &report);
    if (!survived) continue;
    const Span g = *survived;
    int32_t i = g.start;
    if (uni::is_word_char(text[i])) {
      while (i > 0 && uni::is_word_char(text[i - 1])) --i;  // back to word start
    }
    while (i <= g.end) {
      if (!uni::is_word_char(text[i])) {
        if (i >= g.start) kept.push_back({i, i});
        ++i;
        continue;
      }
      int32_t j = i;
      while (j + 1 < static_cast<int32_t>(text.size()) && uni::is_word_char(text[j + 1])) ++j;
      if (i >= g.start && j <= g.end) kept.push_back({i, j});
      i = j + 1;
    }
  }
  std::vector<Span> polished;
  for (Span run : offsets_to_spans(spans_to_offsets(kept))) {
    auto trimmed = trim_whitespace_boundaries(text, run, &report);
    if (!trimmed) continue;
    auto survived = drop_singleton(text, *trimmed, &report);
    if (!survived) continue;
    polished.push_back(*survived);
  }
  return {spans_to_offsets(polished), report};
}

}  // namespace toxspan
