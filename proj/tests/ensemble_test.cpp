#include <catch_amalgamated.hpp>
#include <algorithm>
#include <random>

#include "testutil.hpp"
#include "toxspan/ensemble.hpp"

using namespace toxspan;
using testutil::offs;

TEST_CASE("majority threshold is floor(k/2)+1") {
  REQUIRE(VoteConfig::majority(1).threshold == 1);
  REQUIRE(VoteConfig::majority(2).threshold == 2);
  REQUIRE(VoteConfig::majority(3).threshold == 2);
  REQUIRE(VoteConfig::majority(4).threshold == 3);
  REQUIRE(VoteConfig::majority(5).threshold == 3);
  REQUIRE(VoteConfig::majority(6).threshold == 4);
  REQUIRE_THROWS_AS(VoteConfig::majority(0), Error);
}

TEST_CASE("three members keep exactly the offsets two of them share") {
  const std::vector<OffsetSet> members = {offs({1, 2}), offs({2, 3}), offs({2, 4})};
  REQUIRE(majority_vote(members, VoteConfig::majority(3)) == offs({2}));
}

TEST_CASE("voting with one member is the identity") {
  const std::vector<OffsetSet> one = {offs({4, 7, 9})};
  REQUIRE(majority_vote(one, VoteConfig::majority(1)) == offs({4, 7, 9}));
}

TEST_CASE("identical members vote for themselves") {
  const OffsetSet p = offs({0, 5, 6});
  for (int k = 1; k <= 6; ++k) {
    const std::vector<OffsetSet> members(k, p);
    REQUIRE(majority_vote(members, VoteConfig::majority(k)) == p);
  }
}

TEST_CASE("voting is permutation invariant") {
  std::vector<OffsetSet> members = {offs({1, 2, 3}), offs({2, 3, 4}), offs({3, 4, 5}),
                                    offs({1, 3, 5})};
  const OffsetSet base = majority_vote(members, VoteConfig::majority(4));
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 10; ++iter) {
    std::shuffle(members.begin(), members.end(), rng);
    REQUIRE(majority_vote(members, VoteConfig::majority(4)) == base);
  }
}

TEST_CASE("result lies between intersection and union") {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<OffsetSet> members;
    const int k = 1 + static_cast<int>(rng() % 5);
    for (int m = 0; m < k; ++m) {
      std::vector<int32_t> v;
      for (int32_t i = 0; i < 20; ++i) {
        if (rng() % 3 == 0) v.push_back(i);
      }
      members.push_back(OffsetSet::from_unsorted(std::move(v)));
    }
    const OffsetSet voted = majority_vote(members, VoteConfig::majority(k));
    for (int32_t o = 0; o < 20; ++o) {
      const auto votes = static_cast<int32_t>(
          std::count_if(members.begin(), members.end(),
                        [&](const OffsetSet& m) { return m.contains(o); }));
      if (votes == k) REQUIRE(voted.contains(o));       // intersection is kept
      if (votes == 0) REQUIRE_FALSE(voted.contains(o)); // union bounds it
    }
  }
}

TEST_CASE("two members require unanimity") {
  const std::vector<OffsetSet> members = {offs({1, 2}), offs({2, 3})};
  REQUIRE(majority_vote(members, VoteConfig::majority(2)) == offs({2}));
}

TEST_CASE("member count must match the config") {
  const std::vector<OffsetSet> members = {offs({1}), offs({2})};
  REQUIRE_THROWS_AS(majority_vote(members, VoteConfig::majority(3)), Error);
}

TEST_CASE("corpus-level voting aligns comments across members") {
  const std::vector<std::vector<OffsetSet>> members = {
      {offs({1, 2}), offs({7})},
      {offs({2, 3}), offs({7, 8})},
      {offs({2, 4}), offs({9})},
  };
  const auto voted = majority_vote_corpus(members, VoteConfig::majority(3));
  REQUIRE(voted.size() == 2);
  REQUIRE(voted[0] == offs({2}));
  REQUIRE(voted[1] == offs({7}));

  const std::vector<std::vector<OffsetSet>> ragged = {{offs({1})}, {offs({1}), offs({2})}};
  REQUIRE_THROWS_AS(majority_vote_corpus(ragged, VoteConfig::majority(2)), Error);
}
