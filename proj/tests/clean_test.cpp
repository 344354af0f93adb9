#include <catch_amalgamated.hpp>
#include <random>

#include "testutil.hpp"
#include "toxspan/clean.hpp"

using namespace toxspan;
using testutil::offs;
using testutil::offs_range;
using testutil::u32;

namespace {

const std::u32string kIdiot = u32("You are an idiot");
//                                 0123456789012345
//                                           1111111

OffsetSet clean(const std::u32string& text, const OffsetSet& raw) {
  return clean_offsets(text, raw).first;
}

}  // namespace

TEST_CASE("boundary whitespace is trimmed") {
  // " idiot" marked including the leading space.
  REQUIRE(clean(kIdiot, offs_range(10, 15)) == offs_range(11, 15));
}

TEST_CASE("singletons are dropped") {
  // A random single character ('a' of "are").
  REQUIRE(clean(kIdiot, offs({4})) == offs({}));
}

TEST_CASE("partially marked words are completed") {
  // "ou are an idiot" missing the leading 'Y'.
  REQUIRE(clean(kIdiot, offs_range(1, 15)) == offs_range(0, 15));
}

TEST_CASE("clean rule building blocks") {
  REQUIRE(trim_whitespace_boundaries(kIdiot, {10, 15}) == Span{11, 15});
  REQUIRE_FALSE(trim_whitespace_boundaries(u32("a   b"), {1, 3}).has_value());
  REQUIRE(trim_whitespace_boundaries(kIdiot, {11, 15}) == Span{11, 15});

  REQUIRE_FALSE(drop_singleton(kIdiot, {4, 4}).has_value());
  REQUIRE(drop_singleton(kIdiot, {11, 15}) == Span{11, 15});

  REQUIRE(expand_to_word_boundaries(kIdiot, {1, 15}) == Span{0, 15});
  REQUIRE(expand_to_word_boundaries(u32("abc"), {1, 1}) == Span{0, 2});
  REQUIRE(expand_to_word_boundaries(kIdiot, {11, 15}) == Span{11, 15});
}

TEST_CASE("clean handles empty and already-clean input") {
  REQUIRE(clean(kIdiot, offs({})) == offs({}));
  REQUIRE(clean(kIdiot, offs_range(11, 15)) == offs_range(11, 15));
}

TEST_CASE("rules apply per maximal group") {
  // Two groups: a singleton (dropped) and a partial word (expanded).
  REQUIRE(clean(kIdiot, offs({4, 12, 13})) == offs_range(11, 15));
}

TEST_CASE("trim happens before the singleton check") {
  // " i" trims to the singleton "i", which is then dropped.
  REQUIRE(clean(kIdiot, offs({10, 11})) == offs({}));
}

TEST_CASE("clean report counts rule applications") {
  auto [cleaned, report] = clean_offsets(kIdiot, offs_range(10, 15));
  REQUIRE(cleaned == offs_range(11, 15));
  REQUIRE(report.trimmed_whitespace == 1);
  REQUIRE(report.dropped_singletons == 0);

  auto [cleaned2, report2] = clean_offsets(kIdiot, offs({4}));
  REQUIRE(cleaned2.empty());
  REQUIRE(report2.dropped_singletons == 1);

  auto [cleaned3, report3] = clean_offsets(kIdiot, offs_range(1, 15));
  REQUIRE(cleaned3 == offs_range(0, 15));
  REQUIRE(report3.expanded_left == 1);
}

TEST_CASE("cleaning is idempotent on the documented examples") {
  for (const auto& raw : {offs_range(10, 15), offs({4}), offs_range(1, 15), offs({4, 12, 13})}) {
    const OffsetSet once = clean(kIdiot, raw);
    REQUIRE(clean(kIdiot, once) == once);
  }
}

TEST_CASE("unicode whitespace and letters participate in the rules") {
  // "idiot" U+00A0 (no-break space) "fou"; span covers "ot<nbsp>fo".
  const std::u32string text = u32("idiôt fou");
  // Marking "t<nbsp>f" expands over both words; nbsp stays inside the run.
  REQUIRE(clean(text, offs({4, 5, 6})) == offs_range(0, 8));
}

TEST_CASE("discard-partial strategy drops partially marked words") {
  // "id" of "idiot": word not fully covered, so it goes away.
  const std::u32string text = u32("you idiot");
  REQUIRE(clean_offsets_discard_partial(text, offs({4, 5})).first == offs({}));
  // Fully covered word survives.
  REQUIRE(clean_offsets_discard_partial(text, offs_range(4, 8)).first == offs_range(4, 8));
  // Mixed: "you" fully marked, "idiot" partially -> only "you" (and not
  // the trailing space).
  REQUIRE(clean_offsets_discard_partial(text, offs({0, 1, 2, 3, 4, 5})).first == offs_range(0, 2));
}

TEST_CASE("fuzz: cleaned spans are word-aligned, unpadded, idempotent") {
  std::mt19937_64 rng(99);
  const std::u32string alphabet = u32("abcdef  ..!?'-XY3");
  for (int iter = 0; iter < 2000; ++iter) {
    const int32_t n = 1 + static_cast<int32_t>(rng() % 30);
    std::u32string text;
    for (int32_t i = 0; i < n; ++i) text += alphabet[rng() % alphabet.size()];
    std::vector<int32_t> raw;
    for (int32_t i = 0; i < n; ++i) {
      if (rng() % 3 == 0) raw.push_back(i);
    }
    const OffsetSet input = OffsetSet::from_unsorted(std::move(raw));
    const OffsetSet cleaned = clean(text, input);

    for (const Span& s : offsets_to_spans(cleaned)) {
      CAPTURE(uni::encode_utf8(text), s.start, s.end);
      REQUIRE_FALSE(uni::is_whitespace(text[s.start]));
      REQUIRE_FALSE(uni::is_whitespace(text[s.end]));
      REQUIRE(s.length() >= 2);
      // Word-aligned: no word continues across either boundary.
      if (s.start > 0) REQUIRE_FALSE(uni::is_word_char(text[s.start - 1]));
      if (s.end + 1 < n) REQUIRE_FALSE(uni::is_word_char(text[s.end + 1]));
    }
    REQUIRE(clean(text, cleaned) == cleaned);
  }
}
