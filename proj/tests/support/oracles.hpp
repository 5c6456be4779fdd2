#pragma once

// Independent reference implementations used as test oracles. They work on
// token strings rather than ids and favour obviousness over speed.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mixinfer/bpe.hpp"
#include "mixinfer/inference.hpp"
#include "mixinfer/pretokenize.hpp"
#include "mixinfer/timeline.hpp"

namespace oracle {

using StringPair = std::pair<std::string, std::string>;
using StringCounts = std::map<StringPair, std::int64_t>;

// Units of a word: single bytes, or characters of the list's base alphabet.
inline std::vector<std::string> units(const std::string& word, const mixinfer::MergeList& merges) {
  std::vector<std::string> out;
  if (merges.is_byte_level()) {
    for (char c : word) out.emplace_back(1, c);
    return out;
  }
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t best = 0;
    for (const auto& b : merges.base_alphabet())
      if (b.size() > best && word.compare(i, b.size(), b) == 0) best = b.size();
    if (best == 0) best = 1;
    out.push_back(word.substr(i, best));
    i += best;
  }
  return out;
}

// Applies one rule left to right without overlaps.
inline void apply_rule(std::vector<std::string>& seq, const mixinfer::MergeRule& rule) {
  std::vector<std::string> next;
  for (std::size_t i = 0; i < seq.size();) {
    if (i + 1 < seq.size() && seq[i] == rule.left && seq[i + 1] == rule.right) {
      next.push_back(rule.left + rule.right);
      i += 2;
    } else {
      next.push_back(seq[i]);
      ++i;
    }
  }
  seq = std::move(next);
}

// First `t` rules applied to `word`, each exhaustively before the next.
inline std::vector<std::string> encode_word(const std::string& word, const mixinfer::MergeList& merges,
                                            std::size_t t) {
  auto seq = units(word, merges);
  for (std::size_t k = 0; k < t && k < merges.size(); ++k) apply_rule(seq, merges.rules()[k]);
  return seq;
}

// Adjacent pair counts after `t` rules, recounted from scratch.
inline StringCounts recount(const mixinfer::WordTable& words, const mixinfer::MergeList& merges, std::size_t t) {
  StringCounts out;
  for (const auto& [word, count] : words.entries) {
    const auto seq = encode_word(word, merges, t);
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) out[{seq[i], seq[i + 1]}] += static_cast<std::int64_t>(count);
  }
  return out;
}

inline StringCounts to_strings(const std::unordered_map<mixinfer::PairKey, std::int64_t>& counts,
                               const mixinfer::MergeList& merges) {
  StringCounts out;
  for (const auto& [key, c] : counts)
    if (c != 0) out[{merges.token(mixinfer::pair_left(key)), merges.token(mixinfer::pair_right(key))}] += c;
  return out;
}

// All (step, pair) constraints violated by `sol`, by scanning every pair at
// every step. Scores use the library's shared accumulation order.
inline std::set<mixinfer::ConstraintRef> naive_violations(const mixinfer::LpSolution& sol,
                                                          const std::vector<mixinfer::PairCountTimeline>& timelines,
                                                          const mixinfer::MergeList& merges, std::size_t T,
                                                          double epsilon) {
  std::set<mixinfer::ConstraintRef> out;
  const std::size_t n = timelines.size();
  const std::size_t offset = timelines.front().offset;
  std::vector<double> norms;
  for (const auto& tl : timelines) norms.push_back(static_cast<double>(tl.norm_denominator));
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t rule = offset + k;
    if (!merges.rule_live(rule)) continue;
    const auto step = static_cast<std::uint32_t>(rule + 1);
    std::vector<std::unordered_map<mixinfer::PairKey, std::int64_t>> counts;
    std::set<mixinfer::PairKey> pairs;
    for (const auto& tl : timelines) {
      counts.push_back(mixinfer::counts_at(tl, k));
      for (const auto& [p, c] : counts.back())
        if (c != 0) pairs.insert(p);
    }
    const auto score_of = [&](mixinfer::PairKey p) {
      std::vector<std::int64_t> c(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = counts[i].find(p);
        if (it != counts[i].end()) c[i] = it->second;
      }
      return mixinfer::mixture_score(sol.alpha, c.data(), norms);
    };
    const auto m = merges.rule_pair(rule);
    const auto vt_it = sol.v_t.find(step);
    const double vt = vt_it == sol.v_t.end() ? 0.0 : vt_it->second;
    const double sm = score_of(m);
    for (auto p : pairs) {
      if (p == m) continue;
      const auto vp_it = sol.v_p.find(p);
      const double vp = vp_it == sol.v_p.end() ? 0.0 : vp_it->second;
      if (score_of(p) - vp > sm + vt + epsilon) out.insert({step, p});
    }
  }
  return out;
}

// Random toy text: words over the first `letters` lowercase letters with a
// skewed length and letter distribution, separated by spaces and newlines.
inline std::string toy_text(std::mt19937_64& rng, std::size_t words, std::size_t letters,
                            std::size_t lexicon_size = 60) {
  std::geometric_distribution<int> extra(0.35);
  std::vector<double> w;
  for (std::size_t i = 0; i < letters; ++i) w.push_back(1.0 / static_cast<double>(i + 1));
  std::discrete_distribution<std::size_t> letter(w.begin(), w.end());
  // A small lexicon makes repeated words, so merges have real counts.
  std::vector<std::string> lexicon;
  for (std::size_t i = 0; i < lexicon_size; ++i) {
    std::string word;
    const int len = 1 + std::min(extra(rng), 9);
    for (int k = 0; k < len; ++k) word.push_back(static_cast<char>('a' + letter(rng)));
    lexicon.push_back(word);
  }
  std::vector<double> zipf;
  for (std::size_t i = 0; i < lexicon.size(); ++i) zipf.push_back(1.0 / static_cast<double>(i + 1));
  std::discrete_distribution<std::size_t> pick(zipf.begin(), zipf.end());
  std::string text;
  for (std::size_t i = 0; i < words; ++i) {
    text += lexicon[pick(rng)];
    text += (i % 11 == 10) ? '\n' : ' ';
  }
  return text;
}

inline std::vector<std::string> letters(std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(1, static_cast<char>('a' + i));
  return out;
}

}  // namespace oracle
