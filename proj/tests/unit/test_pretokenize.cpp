#include <gtest/gtest.h>

#include <random>

#include "mixinfer/error.hpp"
#include "mixinfer/pretokenize.hpp"

using namespace mixinfer;

TEST(Pretokenize, WhitespaceSplit) {
  const auto t = pretokenize("ab cd ab", PretokenRules{});
  EXPECT_EQ(t.entries.size(), 2u);
  EXPECT_EQ(t.count("ab"), 2u);
  EXPECT_EQ(t.count("cd"), 1u);
  EXPECT_EQ(t.total_bytes, 6u);
  EXPECT_EQ(t.raw_bytes, 8u);
}

TEST(Pretokenize, DigitRunsIsolated) {
  const auto t = pretokenize("x12y", PretokenRules{});
  EXPECT_EQ(t.entries.size(), 3u);
  EXPECT_EQ(t.count("x"), 1u);
  EXPECT_EQ(t.count("12"), 1u);
  EXPECT_EQ(t.count("y"), 1u);
}

TEST(Pretokenize, EmptyInput) { EXPECT_TRUE(pretokenize("", PretokenRules{}).empty()); }

TEST(Pretokenize, AttachLeadingSpaceKeepsEveryByte) {
  const std::string text = "the cat  sat 42 times\n\tok";
  const auto t = pretokenize(text, PretokenRules::commercial());
  EXPECT_EQ(t.count(" cat"), 1u);
  EXPECT_EQ(t.count(" sat"), 1u);
  EXPECT_EQ(t.count("42"), 1u);
  EXPECT_EQ(t.total_bytes, text.size());
}

TEST(Pretokenize, NoActiveRuleIsInvalid) {
  PretokenRules r;
  r.split_on_whitespace = false;
  r.isolate_digit_runs = false;
  EXPECT_THROW(r.validate(), InvalidArgument);
}

TEST(Pretokenize, SpaceAttachmentNamesRoundTrip) {
  for (auto m : {SpaceAttachment::discard_separators, SpaceAttachment::attach_leading_space})
    EXPECT_EQ(parse_space_attachment(to_string(m)), m);
  EXPECT_THROW(parse_space_attachment("sideways"), InvalidArgument);
}

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t n) {
  const std::string alphabet = "abc d1 2\n\t\xce\xb1\xce\xb2  xyz9";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
  return s;
}

}  // namespace

// Parallel sharding must agree exactly with the serial reference.
TEST(PretokenizeProperty, ParallelEqualsSerial) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 30; ++round) {
    const auto text = random_text(rng, 1000 + round * 5000);
    for (const auto& rules : {PretokenRules{}, PretokenRules::commercial()}) {
      const auto a = pretokenize(text, rules);
      const auto b = pretokenize_serial(text, rules);
      EXPECT_EQ(a.entries, b.entries);
      EXPECT_EQ(a.total_bytes, b.total_bytes);
      EXPECT_EQ(a.raw_bytes, b.raw_bytes);
    }
  }
}

TEST(PretokenizeProperty, WordBytesBoundedByInput) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 20; ++round) {
    const auto text = random_text(rng, 3000);
    const auto discard = pretokenize(text, PretokenRules{});
    EXPECT_LE(discard.total_bytes, text.size());
    std::uint64_t sum = 0;
    for (const auto& [w, c] : discard.entries) sum += w.size() * c;
    EXPECT_EQ(sum, discard.total_bytes);
    EXPECT_EQ(pretokenize(text, PretokenRules::commercial()).total_bytes, text.size());
  }
}

TEST(PretokenizeProperty, IdempotentOnWords) {
  std::mt19937_64 rng(5);
  const auto text = random_text(rng, 20000);
  for (const auto& rules : {PretokenRules{}, PretokenRules::commercial()}) {
    for (const auto& [w, c] : pretokenize(text, rules).entries) {
      const auto again = pretokenize(w, rules);
      ASSERT_EQ(again.entries.size(), 1u) << w;
      EXPECT_EQ(again.entries.begin()->first, w);
    }
  }
}

TEST(PretokenizeProperty, NoWordSpansABoundary) {
  std::mt19937_64 rng(8);
  const auto text = random_text(rng, 20000);
  for (const auto& [w, c] : pretokenize(text, PretokenRules{}).entries) {
    bool digit = false, other = false;
    for (unsigned char ch : w) {
      EXPECT_FALSE(is_ascii_space(ch));
      (is_ascii_digit(ch) ? digit : other) = true;
    }
    EXPECT_FALSE(digit && other) << w;
  }
}
