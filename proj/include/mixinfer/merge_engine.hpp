#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mixinfer/bpe.hpp"
#include "mixinfer/pretokenize.hpp"
#include "mixinfer/types.hpp"

namespace mixinfer {

struct PairDelta {
  PairKey pair;
  std::int64_t change;
  bool operator==(const PairDelta&) const = default;
};

using PairCounts = std::unordered_map<PairKey, std::int64_t>;

// Distinct words as token sequences with live adjacent-pair counts. Applying
// a merge rewrites only the words containing the merged pair and returns the
// net count change per pair. kNoToken units act as barriers: pairs touching
// them are never counted.
class MergeEngine {
 public:
  MergeEngine(const WordTable& words, const MergeList& merges);

  const PairCounts& pair_counts() const { return counts_; }
  std::int64_t count(PairKey key) const;
  std::size_t num_words() const { return words_.size(); }
  std::size_t unknown_units() const { return unknown_units_; }

  // Replaces every left-to-right occurrence of (left, right) with `merged`.
  // Returns the nonzero net changes sorted by pair key.
  std::vector<PairDelta> apply_merge(TokenId left, TokenId right, TokenId merged);

  // Word state for oracle checks: token sequence and multiplicity.
  const std::vector<TokenId>& word(std::size_t i) const { return words_[i]; }
  std::uint64_t word_count(std::size_t i) const { return multiplicity_[i]; }

 private:
  std::vector<std::vector<TokenId>> words_;
  std::vector<std::uint64_t> multiplicity_;
  PairCounts counts_;
  std::unordered_map<PairKey, std::vector<std::uint32_t>> where_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::size_t unknown_units_ = 0;
};

// Pair counts of token sequences weighted by multiplicity. The parallel
// version reduces thread-local maps and must equal the serial one exactly.
PairCounts count_pairs(const std::vector<std::vector<TokenId>>& words,
                       const std::vector<std::uint64_t>& multiplicity);
PairCounts count_pairs_serial(const std::vector<std::vector<TokenId>>& words,
                              const std::vector<std::uint64_t>& multiplicity);

}  // namespace mixinfer
