#include "mixinfer/bpe.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"
#include "mixinfer/merge_engine.hpp"

namespace mixinfer {
namespace {

std::vector<std::string> byte_alphabet() {
  std::vector<std::string> base(256);
  for (int b = 0; b < 256; ++b) base[b] = std::string(1, static_cast<char>(b));
  return base;
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

// Splits into UTF-8 characters; malformed sequences fall back to single bytes.
std::vector<std::string_view> utf8_units(std::string_view word) {
  std::vector<std::string_view> units;
  for (std::size_t i = 0; i < word.size();) {
    std::size_t len = utf8_length(static_cast<unsigned char>(word[i]));
    if (i + len > word.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(word[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    units.push_back(word.substr(i, len));
    i += len;
  }
  return units;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

MergeList::MergeList() : base_(byte_alphabet()) { rebuild(); }

MergeList MergeList::byte_level(std::vector<MergeRule> rules) {
  MergeList ml;
  ml.rules_ = std::move(rules);
  ml.rebuild();
  return ml;
}

MergeList MergeList::with_alphabet(std::vector<std::string> base, std::vector<MergeRule> rules) {
  MergeList ml;
  ml.byte_level_ = false;
  ml.base_ = std::move(base);
  ml.rules_ = std::move(rules);
  ml.rebuild();
  return ml;
}

void MergeList::rebuild() {
  for (const auto& r : rules_)
    if (r.left.empty() || r.right.empty()) throw InvalidArgument("merge rule with an empty side");
  vocab_.clear();
  canonical_.clear();
  vocab_.reserve(base_.size() + rules_.size());
  for (const auto& b : base_) {
    if (b.empty()) throw InvalidArgument("empty base alphabet entry");
    canonical_.emplace(b, static_cast<TokenId>(vocab_.size()));
    vocab_.push_back(b);
  }
  left_ids_.assign(rules_.size(), kNoToken);
  right_ids_.assign(rules_.size(), kNoToken);
  output_ids_.assign(rules_.size(), kNoToken);
  for (std::size_t t = 0; t < rules_.size(); ++t) {
    const auto here = static_cast<TokenId>(base_.size() + t);
    auto resolve = [&](const std::string& s) {
      auto it = canonical_.find(s);
      return it != canonical_.end() && it->second < here ? it->second : kNoToken;
    };
    left_ids_[t] = resolve(rules_[t].left);
    right_ids_[t] = resolve(rules_[t].right);
    std::string product = rules_[t].merged();
    auto [it, inserted] = canonical_.emplace(product, here);
    output_ids_[t] = it->second;
    vocab_.push_back(std::move(product));
  }
  std::uint64_t h = 0xCBF29CE484222325ull;
  const unsigned char mode = byte_level_ ? 1 : 2;
  h = fnv1a(h, &mode, 1);
  for (const auto& tok : vocab_) {
    const auto len = static_cast<std::uint32_t>(tok.size());
    h = fnv1a(h, &len, sizeof len);
    h = fnv1a(h, tok.data(), tok.size());
  }
  vocab_hash_ = h;
}

TokenId MergeList::token_id(std::string_view token) const {
  auto it = canonical_.find(std::string(token));
  return it == canonical_.end() ? kNoToken : it->second;
}

std::vector<std::size_t> MergeList::unproducible_rules() const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < rules_.size(); ++t)
    if (!rule_live(t)) out.push_back(t);
  return out;
}

std::vector<TokenId> MergeList::split_units(std::string_view word, std::size_t* unknown) const {
  std::vector<TokenId> ids;
  std::size_t missing = 0;
  if (byte_level_) {
    ids.reserve(word.size());
    for (unsigned char c : word) ids.push_back(c);
  } else {
    for (auto unit : utf8_units(word)) {
      auto it = canonical_.find(std::string(unit));
      if (it == canonical_.end() || it->second >= base_.size()) {
        ids.push_back(kNoToken);
        ++missing;
      } else {
        ids.push_back(it->second);
      }
    }
  }
  if (unknown) *unknown = missing;
  return ids;
}

MergeList MergeList::truncated(std::size_t count) const {
  std::vector<MergeRule> rules(rules_.begin(),
                               rules_.begin() + static_cast<std::ptrdiff_t>(std::min(count, rules_.size())));
  return with_rules(std::move(rules));
}

MergeList MergeList::with_rules(std::vector<MergeRule> rules) const {
  MergeList ml;
  ml.byte_level_ = byte_level_;
  ml.base_ = base_;
  ml.rules_ = std::move(rules);
  ml.rebuild();
  return ml;
}

// ---------------------------------------------------------------------------
// Training

bool tie_break_prefers(TieBreak rule, std::string_view a_left, std::string_view a_right,
                       std::string_view b_left, std::string_view b_right) {
  const int c = a_left != b_left ? a_left.compare(b_left) : a_right.compare(b_right);
  return rule == TieBreak::lexicographic_smallest ? c < 0 : c > 0;
}

MergeList train(const WordTable& words, std::size_t num_merges, const TrainOptions& options) {
  if (num_merges == 0) return MergeList{};
  if (words.empty()) {
    log::warning("train: empty word table, returning an empty merge list");
    return MergeList{};
  }
  const MergeList bytes;
  MergeEngine engine(words, bytes);
  std::vector<std::string> vocab = bytes.vocab();
  std::unordered_map<std::string, TokenId> canonical;
  for (TokenId id = 0; id < vocab.size(); ++id) canonical.emplace(vocab[id], id);

  struct Candidate {
    std::int64_t count;
    PairKey key;
  };
  // Max-heap: higher count first, ties resolved by the configured rule.
  auto lower = [&](const Candidate& a, const Candidate& b) {
    if (a.count != b.count) return a.count < b.count;
    return tie_break_prefers(options.tie_break, vocab[pair_left(b.key)], vocab[pair_right(b.key)],
                             vocab[pair_left(a.key)], vocab[pair_right(a.key)]);
  };
  std::vector<Candidate> initial;
  initial.reserve(engine.pair_counts().size());
  for (const auto& [k, c] : engine.pair_counts()) initial.push_back({c, k});
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(lower)> heap(lower, std::move(initial));

  std::vector<MergeRule> rules;
  rules.reserve(num_merges);
  while (rules.size() < num_merges && !heap.empty()) {
    const Candidate top = heap.top();
    heap.pop();
    if (engine.count(top.key) != top.count) continue;  // stale
    if (top.count < 2) break;
    const TokenId l = pair_left(top.key), r = pair_right(top.key);
    std::string product = vocab[l] + vocab[r];
    rules.push_back({vocab[l], vocab[r]});
    auto [it, inserted] = canonical.emplace(product, static_cast<TokenId>(vocab.size()));
    const TokenId out = it->second;
    vocab.push_back(std::move(product));
    for (const auto& d : engine.apply_merge(l, r, out)) {
      const auto c = engine.count(d.pair);
      if (c > 0) heap.push({c, d.pair});
    }
  }
  return MergeList::byte_level(std::move(rules));
}

// ---------------------------------------------------------------------------
// Encoding

Encoder::Encoder(const MergeList& merges) : merges_(&merges) {
  for (std::size_t t = 0; t < merges.size(); ++t)
    if (merges.rule_live(t)) ranks_[merges.rule_pair(t)].push_back(static_cast<std::uint32_t>(t));
}

std::uint32_t Encoder::next_rank(PairKey key, std::uint32_t from) const {
  auto it = ranks_.find(key);
  if (it == ranks_.end()) return std::numeric_limits<std::uint32_t>::max();
  auto pos = std::lower_bound(it->second.begin(), it->second.end(), from);
  return pos == it->second.end() ? std::numeric_limits<std::uint32_t>::max() : *pos;
}

std::size_t Encoder::encode_uncached(std::string_view word, std::vector<TokenId>& out,
                                     std::vector<std::size_t>* fired) const {
  const auto& ml = *merges_;
  std::vector<TokenId> seq;
  std::vector<std::string_view> unknown_units;
  if (ml.is_byte_level()) {
    seq = ml.split_units(word);
  } else {
    for (auto unit : utf8_units(word)) {
      const TokenId id = ml.token_id(unit);
      if (id == kNoToken || id >= ml.base_alphabet().size()) {
        seq.push_back(kNoToken);
        unknown_units.push_back(unit);
      } else {
        seq.push_back(id);
      }
    }
  }
  constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t cursor = 0;
  std::vector<TokenId> next;
  while (seq.size() > 1) {
    std::uint32_t best = kNone;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      if (seq[i] == kNoToken || seq[i + 1] == kNoToken) continue;
      best = std::min(best, next_rank(make_pair_key(seq[i], seq[i + 1]), cursor));
    }
    if (best == kNone) break;
    const TokenId l = ml.left_id(best), r = ml.right_id(best), m = ml.output_id(best);
    next.clear();
    for (std::size_t i = 0; i < seq.size();) {
      if (i + 1 < seq.size() && seq[i] == l && seq[i + 1] == r) {
        next.push_back(m);
        i += 2;
      } else {
        next.push_back(seq[i++]);
      }
    }
    seq.swap(next);
    if (fired) fired->push_back(best);
    cursor = best + 1;
  }
  std::size_t fallback = 0, u = 0;
  for (TokenId id : seq) {
    if (id != kNoToken) {
      out.push_back(id);
      continue;
    }
    for (unsigned char b : unknown_units[u++]) {
      out.push_back(kByteFallbackBase + b);
      ++fallback;
    }
  }
  return fallback;
}

std::size_t Encoder::encode_word(std::string_view word, std::vector<TokenId>& out) {
  auto it = cache_.find(std::string(word));
  if (it == cache_.end()) {
    std::vector<TokenId> toks;
    const std::size_t fallback = encode_uncached(word, toks, nullptr);
    it = cache_.emplace(std::string(word), std::make_pair(std::move(toks), fallback)).first;
  }
  out.insert(out.end(), it->second.first.begin(), it->second.first.end());
  return it->second.second;
}

std::vector<TokenId> Encoder::encode_word_traced(std::string_view word,
                                                 std::vector<std::size_t>& fired) const {
  std::vector<TokenId> out;
  encode_uncached(word, out, &fired);
  return out;
}

Encoding Encoder::encode(std::string_view text, const PretokenRules& rules) {
  rules.validate();
  Encoding enc;
  for_each_word(text, rules, [&](std::string_view w) { enc.fallback_units += encode_word(w, enc.tokens); });
  if (enc.fallback_units > 0)
    log::debug("encode: " + std::to_string(enc.fallback_units) + " bytes fell back to byte tokens");
  return enc;
}

Encoding encode(std::string_view text, const PretokenRules& rules, const MergeList& merges) {
  Encoder encoder(merges);
  return encoder.encode(text, rules);
}

double byte_to_token_ratio(std::string_view text, const PretokenRules& rules, const MergeList& merges) {
  if (text.empty()) throw InvalidArgument("byte_to_token_ratio: empty text");
  const auto enc = encode(text, rules, merges);
  if (enc.tokens.empty()) throw InvalidArgument("byte_to_token_ratio: text has no tokens");
  return static_cast<double>(text.size()) / static_cast<double>(enc.tokens.size());
}

}  // namespace mixinfer
