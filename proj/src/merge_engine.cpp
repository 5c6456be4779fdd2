#include "mixinfer/merge_engine.hpp"

#include <algorithm>
#include <omp.h>

namespace mixinfer {
namespace {

template <typename Fn>
void for_each_pair(const std::vector<TokenId>& toks, Fn&& fn) {
  for (std::size_t i = 0; i + 1 < toks.size(); ++i)
    if (toks[i] != kNoToken && toks[i + 1] != kNoToken) fn(make_pair_key(toks[i], toks[i + 1]));
}

}  // namespace

PairCounts count_pairs_serial(const std::vector<std::vector<TokenId>>& words,
                              const std::vector<std::uint64_t>& multiplicity) {
  PairCounts counts;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto c = static_cast<std::int64_t>(multiplicity[w]);
    for_each_pair(words[w], [&](PairKey k) { counts[k] += c; });
  }
  return counts;
}

PairCounts count_pairs(const std::vector<std::vector<TokenId>>& words,
                       const std::vector<std::uint64_t>& multiplicity) {
  const int threads = omp_get_max_threads();
  if (threads <= 1 || words.size() < 4096) return count_pairs_serial(words, multiplicity);
  std::vector<PairCounts> local(static_cast<std::size_t>(threads));
#pragma omp parallel
  {
    auto& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto c = static_cast<std::int64_t>(multiplicity[w]);
      for_each_pair(words[w], [&](PairKey k) { mine[k] += c; });
    }
  }
  PairCounts counts = std::move(local[0]);
  for (std::size_t t = 1; t < local.size(); ++t)
    for (const auto& [k, c] : local[t]) counts[k] += c;
  return counts;
}

MergeEngine::MergeEngine(const WordTable& table, const MergeList& merges) {
  const auto entries = table.sorted_entries();
  words_.reserve(entries.size());
  multiplicity_.reserve(entries.size());
  for (const auto& [word, count] : entries) {
    std::size_t unknown = 0;
    auto units = merges.split_units(word, &unknown);
    unknown_units_ += unknown * count;
    if (units.size() < 2 && unknown == 0) continue;  // no pairs, never changes
    words_.push_back(std::move(units));
    multiplicity_.push_back(count);
  }
  counts_ = count_pairs(words_, multiplicity_);
  for (std::uint32_t w = 0; w < words_.size(); ++w)
    for_each_pair(words_[w], [&](PairKey k) {
      auto& list = where_[k];
      if (list.empty() || list.back() != w) list.push_back(w);
    });
  stamp_.assign(words_.size(), 0);
}

std::int64_t MergeEngine::count(PairKey key) const {
  auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<PairDelta> MergeEngine::apply_merge(TokenId left, TokenId right, TokenId merged) {
  std::vector<PairDelta> raw;
  if (left == kNoToken || right == kNoToken) return raw;
  const PairKey target = make_pair_key(left, right);
  auto node = where_.extract(target);
  if (node.empty()) return raw;
  ++epoch_;
  std::vector<TokenId> rewritten;
  for (const std::uint32_t w : node.mapped()) {
    if (stamp_[w] == epoch_) continue;
    stamp_[w] = epoch_;
    auto& toks = words_[w];
    rewritten.clear();
    bool changed = false;
    for (std::size_t i = 0; i < toks.size();) {
      if (i + 1 < toks.size() && toks[i] == left && toks[i + 1] == right) {
        rewritten.push_back(merged);
        i += 2;
        changed = true;
      } else {
        rewritten.push_back(toks[i]);
        ++i;
      }
    }
    if (!changed) continue;
    const auto c = static_cast<std::int64_t>(multiplicity_[w]);
    for_each_pair(toks, [&](PairKey k) { raw.push_back({k, -c}); });
    for_each_pair(rewritten, [&](PairKey k) {
      raw.push_back({k, c});
      if (pair_left(k) == merged || pair_right(k) == merged) {
        auto& list = where_[k];
        if (list.empty() || list.back() != w) list.push_back(w);
      }
    });
    toks.swap(rewritten);
  }
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.pair < b.pair; });
  std::vector<PairDelta> delta;
  for (std::size_t i = 0; i < raw.size();) {
    std::int64_t sum = 0;
    std::size_t j = i;
    for (; j < raw.size() && raw[j].pair == raw[i].pair; ++j) sum += raw[j].change;
    if (sum != 0) {
      delta.push_back({raw[i].pair, sum});
      auto it = counts_.find(raw[i].pair);
      if (it == counts_.end()) {
        counts_.emplace(raw[i].pair, sum);
      } else if ((it->second += sum) == 0) {
        counts_.erase(it);
      }
    }
    i = j;
  }
  return delta;
}

}  // namespace mixinfer
