#include <gtest/gtest.h>

#include <random>

#include "mixinfer/bpe.hpp"
#include "mixinfer/error.hpp"
#include "support/oracles.hpp"

using namespace mixinfer;

namespace {

WordTable table(std::initializer_list<std::pair<const char*, std::uint64_t>> items) {
  WordTable t;
  for (const auto& [w, c] : items) t.add(w, c);
  return t;
}

std::vector<MergeRule> rules(std::initializer_list<std::pair<const char*, const char*>> items) {
  std::vector<MergeRule> out;
  for (const auto& [l, r] : items) out.push_back({l, r});
  return out;
}

std::vector<std::string> token_strings(const MergeList& ml, const std::vector<TokenId>& ids) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(ml.token(id));
  return out;
}

}  // namespace

TEST(Train, LowLowerExample) {
  const auto ml = train(table({{"low", 3}, {"lower", 2}}), 3);
  EXPECT_EQ(ml.rules(), rules({{"l", "o"}, {"lo", "w"}, {"e", "r"}}));
}

TEST(Train, UniqueMaximaExample) {
  const auto ml = train(table({{"ab", 7}, {"cd", 3}}), 2);
  EXPECT_EQ(ml.rules(), rules({{"a", "b"}, {"c", "d"}}));
}

TEST(Train, ZeroMerges) { EXPECT_TRUE(train(table({{"abc", 5}}), 0).empty()); }

TEST(Train, EmptyTableGivesEmptyList) { EXPECT_TRUE(train(WordTable{}, 10).empty()); }

TEST(Train, StopsWhenNoPairRepeats) {
  const auto ml = train(table({{"abcd", 1}}), 10);
  EXPECT_TRUE(ml.empty());
}

TEST(Train, LargestTieBreakPicksOtherPair) {
  TrainOptions opt;
  opt.tie_break = TieBreak::lexicographic_largest;
  const auto ml = train(table({{"low", 3}, {"lower", 2}}), 1, opt);
  EXPECT_EQ(ml.rules(), rules({{"o", "w"}}));
}

TEST(Encode, LowerExample) {
  const auto ml = MergeList::byte_level(rules({{"l", "o"}, {"lo", "w"}, {"e", "r"}}));
  const auto enc = encode("lower", PretokenRules{}, ml);
  EXPECT_EQ(token_strings(ml, enc.tokens), (std::vector<std::string>{"low", "er"}));
  EXPECT_EQ(token_strings(ml, encode("low", PretokenRules{}, ml).tokens), (std::vector<std::string>{"low"}));
  EXPECT_TRUE(encode("", PretokenRules{}, ml).tokens.empty());
}

TEST(Encode, RatioExamples) {
  const auto ml = MergeList::byte_level(rules({{"l", "o"}, {"lo", "w"}, {"e", "r"}}));
  EXPECT_DOUBLE_EQ(byte_to_token_ratio("lower", PretokenRules{}, ml), 2.5);
  EXPECT_DOUBLE_EQ(byte_to_token_ratio("plain ascii", PretokenRules::commercial(), MergeList{}), 1.0);
  EXPECT_THROW(byte_to_token_ratio("", PretokenRules{}, ml), InvalidArgument);
  const auto more = MergeList::byte_level(rules({{"l", "o"}}));
  EXPECT_LT(byte_to_token_ratio("lower", PretokenRules{}, more), byte_to_token_ratio("lower", PretokenRules{}, ml));
}

TEST(Encode, CharacterAlphabetFallback) {
  const auto ml = MergeList::with_alphabet({"a", "b", "\xce\xb1"}, rules({{"a", "\xce\xb1"}}));
  const auto enc = encode("a\xce\xb1z b", PretokenRules{}, ml);
  EXPECT_EQ(enc.fallback_units, 1u);
  ASSERT_EQ(enc.tokens.size(), 3u);
  EXPECT_EQ(ml.token(enc.tokens[0]), "a\xce\xb1");
  EXPECT_GE(enc.tokens[1], kByteFallbackBase);
}

TEST(MergeListIds, DuplicateProductsShareCanonicalId) {
  const auto ml = MergeList::byte_level(rules({{"a", "b"}, {"c", "d"}, {"a", "b"}}));
  EXPECT_EQ(ml.vocab().size(), 259u);
  EXPECT_EQ(ml.output_id(2), ml.output_id(0));
  EXPECT_EQ(ml.token_id("ab"), 256u);
}

TEST(MergeListIds, UnproducibleSideIsDead) {
  const auto ml = MergeList::byte_level(rules({{"ab", "c"}, {"a", "b"}}));
  EXPECT_FALSE(ml.rule_live(0));
  EXPECT_TRUE(ml.rule_live(1));
  EXPECT_EQ(ml.unproducible_rules(), (std::vector<std::size_t>{0}));
}

// Encoder output must equal the literal in-order application of every rule.
TEST(EncodeProperty, MatchesLiteralOracle) {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 15; ++round) {
    const auto text = oracle::toy_text(rng, 3000, 4 + round % 5, 120);
    const auto words = pretokenize(text, PretokenRules{});
    const auto ml = train(words, 80);
    Encoder enc(ml);
    for (const auto& [w, c] : words.entries) {
      std::vector<TokenId> ids;
      enc.encode_word(w, ids);
      EXPECT_EQ(token_strings(ml, ids), oracle::encode_word(w, ml, ml.size())) << w;
    }
  }
}

TEST(EncodeProperty, Deterministic) {
  std::mt19937_64 rng(4);
  const auto text = oracle::toy_text(rng, 2000, 6);
  const auto ml = train(pretokenize(text, PretokenRules{}), 50);
  EXPECT_EQ(encode(text, PretokenRules{}, ml).tokens, encode(text, PretokenRules{}, ml).tokens);
}

// Each trained token is produced by exactly one rule: encoding the token's
// bytes fires only its own rule among those producing it.
TEST(EncodeProperty, MergePathUniqueness) {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 5; ++round) {
    const auto ml = train(pretokenize(oracle::toy_text(rng, 4000, 5, 150), PretokenRules{}), 100);
    Encoder enc(ml);
    for (std::size_t t = 0; t < ml.size(); ++t) {
      std::vector<std::size_t> fired;
      const auto ids = enc.encode_word_traced(ml.rules()[t].merged(), fired);
      ASSERT_EQ(ids.size(), 1u);
      ASSERT_FALSE(fired.empty());
      EXPECT_EQ(fired.back(), t);
    }
  }
}

// Each chosen pair is a true argmax of the counts at its step.
TEST(TrainProperty, ChosenPairIsArgmax) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 8; ++round) {
    const auto words = pretokenize(oracle::toy_text(rng, 2500, 5, 100), PretokenRules{});
    const auto ml = train(words, 60);
    for (std::size_t t = 0; t < ml.size(); ++t) {
      const auto counts = oracle::recount(words, ml, t);
      std::int64_t best = 0;
      for (const auto& [p, c] : counts) best = std::max(best, c);
      const auto& r = ml.rules()[t];
      ASSERT_EQ(counts.at({r.left, r.right}), best) << "step " << t + 1;
      for (const auto& [p, c] : counts)
        if (c == best && p != oracle::StringPair{r.left, r.right})
          EXPECT_TRUE(tie_break_prefers(TieBreak::lexicographic_smallest, r.left, r.right, p.first, p.second));
    }
  }
}
