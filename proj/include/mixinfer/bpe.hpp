#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mixinfer/pretokenize.hpp"
#include "mixinfer/types.hpp"

namespace mixinfer {

struct MergeRule {
  std::string left;
  std::string right;

  std::string merged() const { return left + right; }
  bool operator==(const MergeRule&) const = default;
};

// Ordered merge rules over a base alphabet. Token ids follow creation order:
// base units first, then one id per rule. A rule whose product duplicates an
// earlier token keeps its own vocab slot, but all matching uses the
// canonical (first) id of each string.
class MergeList {
 public:
  MergeList();  // byte-level, no rules

  static MergeList byte_level(std::vector<MergeRule> rules);
  // Character-level base vocabulary (each entry one UTF-8 character).
  static MergeList with_alphabet(std::vector<std::string> base, std::vector<MergeRule> rules);

  bool is_byte_level() const { return byte_level_; }
  const std::vector<std::string>& base_alphabet() const { return base_; }
  const std::vector<MergeRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  // Creation-ordered vocabulary: base alphabet followed by each rule's product.
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::string& token(TokenId id) const { return vocab_.at(id); }

  // Canonical id of a token string, or kNoToken.
  TokenId token_id(std::string_view token) const;

  // Ids of rule t (0-based). Sides resolve to kNoToken when the side string
  // is not created before rule t; such a rule can never fire.
  TokenId left_id(std::size_t t) const { return left_ids_[t]; }
  TokenId right_id(std::size_t t) const { return right_ids_[t]; }
  TokenId output_id(std::size_t t) const { return output_ids_[t]; }
  PairKey rule_pair(std::size_t t) const { return make_pair_key(left_ids_[t], right_ids_[t]); }
  bool rule_live(std::size_t t) const { return left_ids_[t] != kNoToken && right_ids_[t] != kNoToken; }

  // Rule indices whose sides are not producible from earlier rules.
  std::vector<std::size_t> unproducible_rules() const;

  // FNV-1a over the vocabulary; guards timelines against list mismatch.
  std::uint64_t vocab_hash() const { return vocab_hash_; }

  // Splits a word into base-unit ids. Units outside a character alphabet
  // become kNoToken; `unknown` (if given) receives their count.
  std::vector<TokenId> split_units(std::string_view word, std::size_t* unknown = nullptr) const;

  MergeList truncated(std::size_t count) const;
  MergeList with_rules(std::vector<MergeRule> rules) const;

  bool operator==(const MergeList& other) const {
    return byte_level_ == other.byte_level_ && base_ == other.base_ && rules_ == other.rules_;
  }

 private:
  void rebuild();

  bool byte_level_ = true;
  std::vector<std::string> base_;
  std::vector<MergeRule> rules_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> canonical_;
  std::vector<TokenId> left_ids_, right_ids_, output_ids_;
  std::size_t max_unit_bytes_ = 1;
  std::uint64_t vocab_hash_ = 0;
};

// Equal-count candidates are ordered by (left bytes, right bytes).
enum class TieBreak { lexicographic_smallest, lexicographic_largest };

struct TrainOptions {
  TieBreak tie_break = TieBreak::lexicographic_smallest;
};

// Returns true if pair (a_left, a_right) wins a count tie against (b_left, b_right).
bool tie_break_prefers(TieBreak rule, std::string_view a_left, std::string_view a_right,
                       std::string_view b_left, std::string_view b_right);

// Byte-level BPE. Stops early once no pair occurs at least twice.
MergeList train(const WordTable& words, std::size_t num_merges, const TrainOptions& options = {});

// Ids >= kByteFallbackBase stand for raw bytes of characters missing from a
// character-level alphabet.
inline constexpr TokenId kByteFallbackBase = 0xFFFFFF00u;

struct Encoding {
  std::vector<TokenId> tokens;
  std::size_t fallback_units = 0;
};

// Applies merges to each word in list order, each exhaustively left to
// right before the next. Caches word encodings.
class Encoder {
 public:
  explicit Encoder(const MergeList& merges);

  const MergeList& merges() const { return *merges_; }

  // Appends the tokens of one word; returns the count of fallback units.
  std::size_t encode_word(std::string_view word, std::vector<TokenId>& out);

  // Like encode_word, additionally reporting which rules fired (in order).
  std::vector<TokenId> encode_word_traced(std::string_view word, std::vector<std::size_t>& fired) const;

  Encoding encode(std::string_view text, const PretokenRules& rules);

 private:
  std::size_t encode_uncached(std::string_view word, std::vector<TokenId>& out,
                              std::vector<std::size_t>* fired) const;
  std::uint32_t next_rank(PairKey key, std::uint32_t from) const;

  const MergeList* merges_;
  std::unordered_map<PairKey, std::vector<std::uint32_t>> ranks_;
  std::unordered_map<std::string, std::pair<std::vector<TokenId>, std::size_t>> cache_;
};

Encoding encode(std::string_view text, const PretokenRules& rules, const MergeList& merges);

// Bytes of `text` divided by its token count.
double byte_to_token_ratio(std::string_view text, const PretokenRules& rules, const MergeList& merges);

}  // namespace mixinfer
