#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "toxspan/corpus.hpp"
#include "toxspan/error.hpp"

// Majority voting over aligned per-comment offset sets. Voting is at
// character-offset granularity so members are free to differ in
// tokenization and architecture.

namespace toxspan {

struct VoteConfig {
  int32_t member_count = 1;
  int32_t threshold = 1;  // votes required for an offset to survive

  /// Strict majority: floor(k/2) + 1.
  static VoteConfig majority(int32_t member_count) {
    if (member_count < 1) throw Error("ensemble needs at least one member");
    return {member_count, member_count / 2 + 1};
  }
};

inline OffsetSet majority_vote(std::span<const OffsetSet> members, const VoteConfig& config) {
  if (static_cast<int32_t>(members.size()) != config.member_count) {
    throw Error("expected " + std::to_string(config.member_count) + " member predictions, got " +
                std::to_string(members.size()));
  }
  std::map<int32_t, int32_t> votes;
  for (const OffsetSet& member : members) {
    for (int32_t o : member.values()) ++votes[o];
  }
  std::vector<int32_t> winners;
  for (const auto& [offset, count] : votes) {
    if (count >= config.threshold) winners.push_back(offset);
  }
  return OffsetSet::from_unsorted(std::move(winners));
}

/// Votes comment-by-comment; members[i] holds model i's predictions for
/// the whole corpus, all aligned by comment index.
inline std::vector<OffsetSet> majority_vote_corpus(
    std::span<const std::vector<OffsetSet>> members, const VoteConfig& config) {
  if (members.empty()) throw Error("ensemble needs at least one member");
  const std::size_t n = members.front().size();
  for (const auto& m : members) {
    if (m.size() != n) {
      throw Error("ensemble members disagree on corpus size: " + std::to_string(m.size()) +
                  " vs " + std::to_string(n));
    }
  }
  std::vector<OffsetSet> out;
  out.reserve(n);
  std::vector<OffsetSet> column(members.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < members.size(); ++k) column[k] = members[k][i];
    out.push_back(majority_vote(column, config));
  }
  return out;
}

}  // namespace toxspan
