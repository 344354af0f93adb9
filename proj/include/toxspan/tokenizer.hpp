#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"
#include "toxspan/unicode.hpp"

// Offset-preserving WordPiece tokenization. Text is lowercased
// character-wise (length-preserving), split on whitespace with every
// punctuation character isolated, then each word is segmented by greedy
// longest-match-first lookup against the vocabulary. Every emitted token
// carries its inclusive character range in the *original* text.

namespace toxspan {

inline constexpr std::string_view kPadPiece = "[PAD]";
inline constexpr std::string_view kUnkPiece = "[UNK]";
inline constexpr std::u32string_view kContinuationPrefix = U"##";

/// Words longer than this become a single [UNK].
inline constexpr int32_t kMaxWordPieceChars = 100;

class Vocab {
 public:
  /// Builds from pieces in id order. [PAD] and [UNK] must be present;
  /// duplicates are rejected.
  static Vocab from_pieces(std::vector<std::string> pieces) {
    Vocab v;
    v.pieces_utf8_ = std::move(pieces);
    v.pieces_.reserve(v.pieces_utf8_.size());
    for (std::size_t id = 0; id < v.pieces_utf8_.size(); ++id) {
      const std::string& piece = v.pieces_utf8_[id];
      if (piece.empty()) throw Error("vocab piece " + std::to_string(id) + " is empty");
      std::u32string decoded = uni::decode_utf8(piece);
      auto [it, inserted] = v.index_.emplace(decoded, static_cast<int32_t>(id));
      if (!inserted) throw Error("duplicate vocab piece: \"" + piece + "\"");
      v.pieces_.push_back(std::move(decoded));
    }
    auto pad = v.id_of_utf8(kPadPiece);
    auto unk = v.id_of_utf8(kUnkPiece);
    if (!pad) throw Error("vocab is missing [PAD]");
    if (!unk) throw Error("vocab is missing [UNK]");
    v.pad_id_ = *pad;
    v.unk_id_ = *unk;
    return v;
  }

  /// One piece per line, UTF-8, LF. A single trailing newline is allowed.
  static Vocab load(std::istream& in) {
    std::vector<std::string> pieces;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        if (in.peek() == EOF) break;  // trailing newline
        throw Error("vocab line " + std::to_string(pieces.size() + 1) + " is empty");
      }
      pieces.push_back(line);
    }
    return from_pieces(std::move(pieces));
  }

  static Vocab load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open vocab file: " + path);
    try {
      return load(in);
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  }

  void save(std::ostream& out) const {
    for (const std::string& p : pieces_utf8_) out << p << "\n";
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open vocab output file: " + path);
    save(out);
  }

  int32_t size() const { return static_cast<int32_t>(pieces_.size()); }
  const std::string& piece(int32_t id) const { return pieces_utf8_[id]; }
  const std::u32string& piece_u32(int32_t id) const { return pieces_[id]; }
  int32_t pad_id() const { return pad_id_; }
  int32_t unk_id() const { return unk_id_; }

  std::optional<int32_t> id_of(const std::u32string& piece) const {
    auto it = index_.find(piece);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<int32_t> id_of_utf8(std::string_view piece) const {
    return id_of(uni::decode_utf8(piece));
  }

  /// FNV-1a over the pieces, used to pair checkpoints with the vocab
  /// they were trained against.
  uint64_t fingerprint() const {
    uint64_t h = 1469598103934665603ULL;
    for (const std::string& p : pieces_utf8_) {
      for (char c : p) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
      }
      h ^= '\n';
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  std::vector<std::string> pieces_utf8_;
  std::vector<std::u32string> pieces_;
  std::unordered_map<std::u32string, int32_t> index_;
  int32_t pad_id_ = 0;
  int32_t unk_id_ = 0;
};

/// A subword token with its inclusive character range in the original text.
struct TokenAlignment {
  int32_t piece_id = 0;
  int32_t start = 0;
  int32_t end = 0;
  bool is_continuation = false;

  friend bool operator==(const TokenAlignment&, const TokenAlignment&) = default;
};

/// Pre-tokenization word with its character range.
struct RawWord {
  std::u32string text;
  int32_t start = 0;
  int32_t end = 0;

  friend bool operator==(const RawWord&, const RawWord&) = default;
};

/// Splits on whitespace (no token emitted) and isolates every punctuation
/// character as its own word.
inline std::vector<RawWord> basic_split(std::u32string_view text) {
  std::vector<RawWord> words;
  const auto n = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < n) {
    if (uni::is_whitespace(text[i])) {
      ++i;
      continue;
    }
    if (uni::is_punctuation(text[i])) {
      words.push_back({std::u32string(1, text[i]), i, i});
      ++i;
      continue;
    }
    int32_t j = i;
    while (j + 1 < n && !uni::is_whitespace(text[j + 1]) && !uni::is_punctuation(text[j + 1])) ++j;
    words.push_back({std::u32string(text.substr(i, j - i + 1)), i, j});
    i = j + 1;
  }
  return words;
}

/// Piece with its in-word character range.
struct WordPiece {
  int32_t piece_id = 0;
  int32_t start = 0;  // relative to the word
  int32_t end = 0;
  bool is_continuation = false;

  friend bool operator==(const WordPiece&, const WordPiece&) = default;
};

/// Greedy longest-match-first segmentation of one (already lowercased)
/// word. Falls back to a single [UNK] covering the whole word when no
/// piece matches at some cursor or the word is longer than
/// kMaxWordPieceChars.
inline std::vector<WordPiece> wordpiece_word(std::u32string_view word, const Vocab& vocab) {
  const auto n = static_cast<int32_t>(word.size());
  const std::vector<WordPiece> unk{{vocab.unk_id(), 0, n - 1, false}};
  if (n == 0) return {};
  if (n > kMaxWordPieceChars) return unk;

  std::vector<WordPiece> pieces;
  int32_t cursor = 0;
  while (cursor < n) {
    int32_t match_end = -1;
    int32_t match_id = -1;
    std::u32string candidate;
    for (int32_t end = n; end > cursor; --end) {
      candidate.assign(cursor > 0 ? kContinuationPrefix : std::u32string_view{});
      candidate.append(word.substr(cursor, end - cursor));
      if (auto id = vocab.id_of(candidate)) {
        match_end = end;
        match_id = *id;
        break;
      }
    }
    if (match_id < 0) return unk;
    pieces.push_back({match_id, cursor, match_end - 1, cursor > 0});
    cursor = match_end;
  }
  return pieces;
}

/// Lowercase, split, segment. Token ranges index the original text.
inline std::vector<TokenAlignment> tokenize(std::u32string_view text, const Vocab& vocab) {
  const std::u32string lowered = uni::lowercase(text);
  std::vector<TokenAlignment> tokens;
  for (const RawWord& word : basic_split(lowered)) {
    for (const WordPiece& p : wordpiece_word(word.text, vocab)) {
      tokens.push_back({p.piece_id, word.start + p.start, word.start + p.end, p.is_continuation});
    }
  }
  return tokens;
}

/// Frequency-based vocabulary builder: whole words at or above the count
/// threshold, plus every single character seen and its ## continuation
/// form. The character fallback guarantees the building corpus tokenizes
/// without [UNK].
inline std::vector<std::string> build_vocab_pieces(const std::vector<Comment>& corpus,
                                                   int32_t min_count = 2) {
  std::map<std::u32string, int64_t> word_counts;
  std::map<char32_t, int64_t> char_counts;
  for (const Comment& c : corpus) {
    const std::u32string lowered = uni::lowercase(uni::decode_utf8(c.text));
    for (const RawWord& w : basic_split(lowered)) {
      ++word_counts[w.text];
      for (char32_t cp : w.text) ++char_counts[cp];
    }
  }

  std::vector<std::string> pieces{std::string(kPadPiece), std::string(kUnkPiece)};
  for (const auto& [cp, count] : char_counts) {
    pieces.push_back(uni::encode_utf8(std::u32string(1, cp)));
  }
  for (const auto& [cp, count] : char_counts) {
    pieces.push_back("##" + uni::encode_utf8(std::u32string(1, cp)));
  }
  // Whole words, most frequent first; single characters are already in.
  std::vector<std::pair<int64_t, std::u32string>> words;
  for (const auto& [word, count] : word_counts) {
    if (count >= min_count && word.size() >= 2) words.emplace_back(-count, word);
  }
  std::sort(words.begin(), words.end());
  for (const auto& [neg_count, word] : words) pieces.push_back(uni::encode_utf8(word));
  return pieces;
}

}  // namespace toxspan
