#include <gtest/gtest.h>

#include <set>

#include "mixinfer/error.hpp"
#include "mixinfer/synthetic.hpp"

using namespace mixinfer;

TEST(Synthetic, DisjointAlphabetsWithoutOverlap) {
  SyntheticSpec spec;
  spec.categories = 6;
  std::set<std::string> seen;
  for (std::size_t c = 0; c < spec.categories; ++c) {
    const auto a = category_alphabet(spec, c);
    EXPECT_EQ(a.size(), spec.alphabet_size);
    for (const auto& s : a) EXPECT_TRUE(seen.insert(s).second) << "shared symbol in category " << c;
  }
}

TEST(Synthetic, OverlapSharesSymbols) {
  SyntheticSpec spec;
  spec.overlap = 0.5;
  const auto a = category_alphabet(spec, 0), b = category_alphabet(spec, 1);
  std::set<std::string> sa(a.begin(), a.end());
  std::size_t shared = 0;
  for (const auto& s : b) shared += sa.count(s);
  EXPECT_GT(shared, 0u);
}

TEST(Synthetic, DeterministicSizedAndStreamed) {
  SyntheticSpec spec;
  spec.categories = 2;
  const auto a = generate_category(spec, 1, 20'000);
  const auto b = generate_category(spec, 1, 20'000);
  EXPECT_EQ(a.bytes, b.bytes);
  EXPECT_GE(a.bytes.size(), 20'000u);
  EXPECT_LT(a.bytes.size(), 21'000u);
  EXPECT_EQ(a.bytes.back(), '\n');
  EXPECT_NE(generate_category(spec, 1, 20'000, 0.0, 1).bytes, a.bytes);
  EXPECT_NE(generate_category(spec, 1, 20'000, 0.5).bytes, a.bytes);
  EXPECT_EQ(generate_pool(spec, 5'000).size(), 2u);
}

TEST(Synthetic, Validation) {
  SyntheticSpec spec;
  spec.categories = 0;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec = {};
  spec.overlap = 1.5;
  EXPECT_THROW(spec.validate(), InvalidArgument);
}
