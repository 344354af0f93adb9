#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"
#include "toxspan/tokenizer.hpp"
#include "toxspan/unicode.hpp"

// Bridges character-offset annotations and per-token binary labels.
// Going in, a token is toxic iff any character of its range is annotated.
// Coming out, toxic token ranges are unioned and whitespace between
// consecutive toxic tokens is filled in, since the tokenizer never emits
// whitespace but the metric is computed over character offsets.

namespace toxspan {

struct LabeledSequence {
  std::vector<TokenAlignment> tokens;
  std::vector<uint8_t> labels;  // 1 = toxic, aligned 1:1 with tokens
};

/// Any-overlap rule: >= 1 annotated character makes the token toxic.
inline LabeledSequence offsets_to_labels(std::vector<TokenAlignment> tokens,
                                         const OffsetSet& toxic) {
  LabeledSequence seq;
  seq.labels.reserve(tokens.size());
  const auto& v = toxic.values();
  std::size_t cursor = 0;
  for (const TokenAlignment& tok : tokens) {
    while (cursor < v.size() && v[cursor] < tok.start) ++cursor;
    seq.labels.push_back(cursor < v.size() && v[cursor] <= tok.end ? 1 : 0);
  }
  seq.tokens = std::move(tokens);
  return seq;
}

/// Adds the offsets of whitespace characters lying strictly between each
/// pair of consecutive tokens that are both toxic. Never adds anything
/// else.
inline OffsetSet whitespace_fill(std::u32string_view text, const LabeledSequence& seq,
                                 const OffsetSet& offsets) {
  OffsetSet out = offsets;
  for (std::size_t i = 0; i + 1 < seq.tokens.size(); ++i) {
    if (!seq.labels[i] || !seq.labels[i + 1]) continue;
    for (int32_t o = seq.tokens[i].end + 1; o < seq.tokens[i + 1].start; ++o) {
      if (uni::is_whitespace(text[o])) out.insert(o);
    }
  }
  return out;
}

/// Union of toxic token ranges, then whitespace fill.
inline OffsetSet labels_to_offsets(std::u32string_view text, const LabeledSequence& seq) {
  if (seq.tokens.size() != seq.labels.size()) {
    throw Error("labeled sequence has " + std::to_string(seq.tokens.size()) + " tokens but " +
                std::to_string(seq.labels.size()) + " labels");
  }
  std::vector<Span> toxic_spans;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (seq.labels[i]) toxic_spans.push_back({seq.tokens[i].start, seq.tokens[i].end});
  }
  return whitespace_fill(text, seq, spans_to_offsets(toxic_spans));
}

}  // namespace toxspan
