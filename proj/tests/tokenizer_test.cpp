#include <catch_amalgamated.hpp>
#include <sstream>

#include "testutil.hpp"
#include "toxspan/tokenizer.hpp"

using namespace toxspan;
using testutil::u32;

namespace {

Vocab make_vocab(std::vector<std::string> extra) {
  std::vector<std::string> pieces = {"[PAD]", "[UNK]"};
  for (auto& p : extra) pieces.push_back(std::move(p));
  return Vocab::from_pieces(std::move(pieces));
}

std::vector<std::string> piece_texts(const std::vector<TokenAlignment>& tokens,
                                     const Vocab& vocab) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(vocab.piece(t.piece_id));
  return out;
}

}  // namespace

TEST_CASE("vocab construction validates pieces") {
  REQUIRE_THROWS_WITH(Vocab::from_pieces({"[PAD]", "[UNK]", "a", "a"}),
                      Catch::Matchers::ContainsSubstring("duplicate"));
  REQUIRE_THROWS_WITH(Vocab::from_pieces({"[PAD]", "[UNK]", ""}),
                      Catch::Matchers::ContainsSubstring("empty"));
  REQUIRE_THROWS_WITH(Vocab::from_pieces({"[UNK]", "a"}),
                      Catch::Matchers::ContainsSubstring("[PAD]"));
  REQUIRE_THROWS_WITH(Vocab::from_pieces({"[PAD]", "a"}),
                      Catch::Matchers::ContainsSubstring("[UNK]"));

  const Vocab v = make_vocab({"hello"});
  REQUIRE(v.size() == 3);
  REQUIRE(v.pad_id() == 0);
  REQUIRE(v.unk_id() == 1);
  REQUIRE(v.id_of_utf8("hello") == 2);
  REQUIRE_FALSE(v.id_of_utf8("absent").has_value());
}

TEST_CASE("vocab save/load round-trip preserves ids and fingerprint") {
  const Vocab v = make_vocab({"cat", "##s", "\xC3\xA9"});
  std::ostringstream out;
  v.save(out);
  std::istringstream in(out.str());
  const Vocab back = Vocab::load(in);
  REQUIRE(back.size() == v.size());
  for (int32_t id = 0; id < v.size(); ++id) REQUIRE(back.piece(id) == v.piece(id));
  REQUIRE(back.fingerprint() == v.fingerprint());

  const Vocab other = make_vocab({"cat", "##s"});
  REQUIRE(other.fingerprint() != v.fingerprint());

  std::istringstream interior_blank("[PAD]\n\n[UNK]\n");
  REQUIRE_THROWS_WITH(Vocab::load(interior_blank),
                      Catch::Matchers::ContainsSubstring("empty"));
}

TEST_CASE("basic_split isolates punctuation and skips whitespace") {
  const auto words = basic_split(u32("you, fool"));
  REQUIRE(words.size() == 3);
  REQUIRE(words[0] == RawWord{U"you", 0, 2});
  REQUIRE(words[1] == RawWord{U",", 3, 3});
  REQUIRE(words[2] == RawWord{U"fool", 5, 8});

  const auto spaced = basic_split(u32("a  b"));
  REQUIRE(spaced.size() == 2);
  REQUIRE(spaced[0] == RawWord{U"a", 0, 0});
  REQUIRE(spaced[1] == RawWord{U"b", 3, 3});

  REQUIRE(basic_split(u32("")).empty());
  REQUIRE(basic_split(u32("   ")).empty());

  // Unicode punctuation splits too.
  const auto uni_punct = basic_split(u32("«hi»"));
  REQUIRE(uni_punct.size() == 3);
  REQUIRE(uni_punct[1] == RawWord{U"hi", 1, 2});
}

TEST_CASE("wordpiece segments by greedy longest match") {
  const Vocab v = make_vocab({"un", "##aff", "##able", "aff", "able"});
  const auto pieces = wordpiece_word(U"unaffable", v);
  REQUIRE(pieces.size() == 3);
  REQUIRE(pieces[0] == WordPiece{*v.id_of_utf8("un"), 0, 1, false});
  REQUIRE(pieces[1] == WordPiece{*v.id_of_utf8("##aff"), 2, 4, true});
  REQUIRE(pieces[2] == WordPiece{*v.id_of_utf8("##able"), 5, 8, true});
}

TEST_CASE("wordpiece falls back to [UNK]") {
  const Vocab v = make_vocab({"cat", "##s"});
  SECTION("no usable segmentation") {
    const auto pieces = wordpiece_word(U"dog", v);
    REQUIRE(pieces.size() == 1);
    REQUIRE(pieces[0] == WordPiece{v.unk_id(), 0, 2, false});
  }
  SECTION("match exists for the head but not the tail") {
    const auto pieces = wordpiece_word(U"catz", v);
    REQUIRE(pieces.size() == 1);
    REQUIRE(pieces[0].piece_id == v.unk_id());
    REQUIRE(pieces[0].end == 3);
  }
  SECTION("overlong words are [UNK] even when segmentable") {
    std::vector<std::string> pieces = {"a", "##a"};
    const Vocab v2 = make_vocab(std::move(pieces));
    const std::u32string word(kMaxWordPieceChars + 1, U'a');
    const auto out = wordpiece_word(word, v2);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].piece_id == v2.unk_id());
  }
}

TEST_CASE("tokenize aligns pieces to the original text") {
  const Vocab v = make_vocab({"the", "cat", "##s"});
  const auto tokens = tokenize(u32("The cats"), v);
  REQUIRE(piece_texts(tokens, v) == std::vector<std::string>{"the", "cat", "##s"});
  REQUIRE(tokens[0] == TokenAlignment{*v.id_of_utf8("the"), 0, 2, false});
  REQUIRE(tokens[1] == TokenAlignment{*v.id_of_utf8("cat"), 4, 6, false});
  REQUIRE(tokens[2] == TokenAlignment{*v.id_of_utf8("##s"), 7, 7, true});
}

TEST_CASE("tokenize lowercases without moving offsets") {
  const Vocab v = make_vocab({"idiot"});
  const auto tokens = tokenize(u32("IDIOT"), v);
  REQUIRE(tokens.size() == 1);
  REQUIRE(tokens[0].start == 0);
  REQUIRE(tokens[0].end == 4);
  REQUIRE(tokens[0].piece_id == *v.id_of_utf8("idiot"));
}

TEST_CASE("tokenize splits punctuation attached to words") {
  const Vocab v = make_vocab({"kill", "yourself", "!", "?"});
  const auto tokens = tokenize(u32("kill yourself!?"), v);
  REQUIRE(piece_texts(tokens, v) == std::vector<std::string>{"kill", "yourself", "!", "?"});
  REQUIRE(tokens[1].start == 5);
  REQUIRE(tokens[1].end == 12);
  REQUIRE(tokens[3] == TokenAlignment{*v.id_of_utf8("?"), 14, 14, false});
}

TEST_CASE("built vocab covers its corpus without [UNK]") {
  std::vector<Comment> corpus(3);
  corpus[0].text = "You fools, you!";
  corpus[1].text = "fools everywhere";
  corpus[2].text = "stay kind";
  const auto pieces = build_vocab_pieces(corpus, 2);

  // [PAD] and [UNK] lead, and the repeated word made the cut.
  REQUIRE(pieces[0] == "[PAD]");
  REQUIRE(pieces[1] == "[UNK]");
  REQUIRE(std::find(pieces.begin(), pieces.end(), "fools") != pieces.end());
  REQUIRE(std::find(pieces.begin(), pieces.end(), "everywhere") == pieces.end());

  const Vocab v = Vocab::from_pieces(pieces);
  for (const Comment& c : corpus) {
    for (const TokenAlignment& t : tokenize(testutil::u32(c.text), v)) {
      REQUIRE(t.piece_id != v.unk_id());
    }
  }
}

TEST_CASE("vocab builder keeps single characters and continuations") {
  std::vector<Comment> corpus(1);
  corpus[0].text = "ab";
  const auto pieces = build_vocab_pieces(corpus, 2);
  REQUIRE(std::find(pieces.begin(), pieces.end(), "a") != pieces.end());
  REQUIRE(std::find(pieces.begin(), pieces.end(), "b") != pieces.end());
  REQUIRE(std::find(pieces.begin(), pieces.end(), "##b") != pieces.end());
  // "ab" appears once, below the count threshold.
  REQUIRE(std::find(pieces.begin(), pieces.end(), "ab") == pieces.end());
}
