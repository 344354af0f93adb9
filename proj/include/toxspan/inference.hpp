#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/encoder.hpp"
#include "toxspan/labeling.hpp"
#include "toxspan/tokenizer.hpp"
#include "toxspan/unicode.hpp"

// Glue between text-space and tensor-space: turning comments into padded
// id batches with aligned labels, and turning predicted labels back into
// character offset sets (whitespace fill included).

namespace toxspan {

struct EncodedComment {
  std::u32string text32;
  LabeledSequence seq;  // tokens truncated to max_len; labels 0 if encoded without gold
  std::vector<int32_t> ids;
};

inline EncodedComment encode_comment(const Comment& comment, const Vocab& vocab, int32_t max_len,
                                     bool with_labels = true) {
  EncodedComment enc;
  enc.text32 = uni::decode_utf8(comment.text);
  std::vector<TokenAlignment> tokens = tokenize(enc.text32, vocab);
  if (static_cast<int32_t>(tokens.size()) > max_len) tokens.resize(max_len);
  enc.ids.reserve(tokens.size());
  for (const TokenAlignment& t : tokens) enc.ids.push_back(t.piece_id);
  if (with_labels) {
    enc.seq = offsets_to_labels(std::move(tokens), comment.toxic_offsets);
  } else {
    enc.seq.labels.assign(tokens.size(), 0);
    enc.seq.tokens = std::move(tokens);
  }
  return enc;
}

/// Labels for one packed batch, aligned to TokenBatch layout (pad
/// positions get label 0; the loss masks them out anyway).
inline std::vector<uint8_t> pack_labels(const std::vector<EncodedComment>& encoded,
                                        const TokenBatch& batch) {
  std::vector<uint8_t> labels(static_cast<std::size_t>(batch.rows()), 0);
  for (int32_t b = 0; b < batch.batch_size; ++b) {
    const auto& src = encoded[b].seq.labels;
    for (int32_t t = 0; t < batch.seq_len && t < static_cast<int32_t>(src.size()); ++t) {
      labels[b * batch.seq_len + t] = src[t];
    }
  }
  return labels;
}

/// Predicted toxic offsets for a batch of comments, in order,
/// `batch_size` comments per forward pass. Deterministic for fixed
/// inputs and parameters.
template <typename S>
std::vector<OffsetSet> predict_corpus(const Parameters<S>& params, const EncoderConfig& config,
                                      const Vocab& vocab, const std::vector<Comment>& comments,
                                      int32_t batch_size) {
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  std::vector<OffsetSet> out(comments.size());
  for (std::size_t begin = 0; begin < comments.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(comments.size(), begin + static_cast<std::size_t>(batch_size));
    std::vector<EncodedComment> encoded;
    std::vector<std::vector<int32_t>> id_seqs;
    for (std::size_t i = begin; i < end; ++i) {
      encoded.push_back(encode_comment(comments[i], vocab, config.max_len, false));
      id_seqs.push_back(encoded.back().ids);
    }
    const TokenBatch batch = TokenBatch::pack(id_seqs, vocab.pad_id(), config.max_len);
    const auto pred = predict_labels(params, config, batch);
    for (std::size_t i = begin; i < end; ++i) {
      EncodedComment& enc = encoded[i - begin];
      if (enc.seq.tokens.empty()) continue;
      LabeledSequence labeled;
      labeled.tokens = std::move(enc.seq.tokens);
      labeled.labels = pred[i - begin];
      out[i] = labels_to_offsets(enc.text32, labeled);
    }
  }
  return out;
}

template <typename S>
OffsetSet predict_comment(const Parameters<S>& params, const EncoderConfig& config,
                          const Vocab& vocab, const Comment& comment) {
  return predict_corpus(params, config, vocab, {comment}, 1).front();
}

}  // namespace toxspan
