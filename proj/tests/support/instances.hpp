#pragma once

// Small end-to-end attack instances shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mixinfer/bpe.hpp"
#include "mixinfer/corpus.hpp"
#include "mixinfer/inference.hpp"
#include "mixinfer/pretokenize.hpp"
#include "mixinfer/timeline.hpp"

namespace instances {

// A Zipf-weighted word list over an alphabet of single-byte letters.
class Lexicon {
 public:
  Lexicon(std::mt19937_64& rng, std::size_t size, std::size_t letters)
      : Lexicon(rng, size, std::string("abcdefghijklmnopqrstuvwxyz").substr(0, letters)) {}

  Lexicon(std::mt19937_64& rng, std::size_t size, const std::string& alphabet) {
    std::geometric_distribution<int> extra(0.35);
    std::vector<double> w;
    for (std::size_t i = 0; i < alphabet.size(); ++i) w.push_back(1.0 / static_cast<double>(i + 1));
    std::shuffle(w.begin(), w.end(), rng);
    std::discrete_distribution<std::size_t> letter(w.begin(), w.end());
    for (std::size_t i = 0; i < size; ++i) {
      std::string word;
      const int len = 1 + std::min(extra(rng), 9);
      for (int k = 0; k < len; ++k) word.push_back(alphabet[letter(rng)]);
      words_.push_back(word);
      zipf_.push_back(1.0 / static_cast<double>(i + 1));
    }
  }

  std::string sample(std::mt19937_64& rng, std::size_t count) const {
    std::discrete_distribution<std::size_t> pick(zipf_.begin(), zipf_.end());
    std::string text;
    for (std::size_t i = 0; i < count; ++i) {
      text += words_[pick(rng)];
      text += (i % 11 == 10) ? '\n' : ' ';
    }
    return text;
  }

 private:
  std::vector<std::string> words_;
  std::vector<double> zipf_;
};

struct Instance {
  mixinfer::MergeList merges;
  std::vector<mixinfer::PairCountTimeline> timelines;
  std::vector<double> alpha_star;
};

struct InstanceSpec {
  std::size_t categories = 3;
  std::size_t letters = 6;
  std::size_t lexicon_size = 60;
  std::size_t train_words = 3000;  // total over the mixture
  std::size_t estimate_words = 800;  // per category
  std::size_t merges = 60;
  std::size_t T = 60;
  bool same_data = false;  // estimate on the training slices themselves
};

// Trains on a sampled mixture and replays per-category estimation text.
inline Instance make_instance(std::mt19937_64& rng, const InstanceSpec& spec) {
  std::vector<Lexicon> lex;
  for (std::size_t c = 0; c < spec.categories; ++c) lex.emplace_back(rng, spec.lexicon_size, spec.letters);
  const auto mix = mixinfer::sample_simplex_weights(spec.categories, rng());
  std::vector<std::string> train_text(spec.categories);
  mixinfer::WordTable all;
  for (std::size_t c = 0; c < spec.categories; ++c) {
    const auto words = static_cast<std::size_t>(std::llround(mix.weights[c] * static_cast<double>(spec.train_words)));
    train_text[c] = lex[c].sample(rng, words);
    all.merge(mixinfer::pretokenize(train_text[c], mixinfer::PretokenRules{}));
  }
  Instance inst;
  inst.merges = mixinfer::train(all, spec.merges);
  std::vector<mixinfer::WordTable> est;
  double total = 0.0;
  for (std::size_t c = 0; c < spec.categories; ++c) {
    const auto text = spec.same_data ? train_text[c] : lex[c].sample(rng, spec.estimate_words);
    est.push_back(mixinfer::pretokenize(text.empty() ? std::string("a") : text, mixinfer::PretokenRules{}));
    total += static_cast<double>(train_text[c].size());
  }
  for (std::size_t c = 0; c < spec.categories; ++c)
    inst.alpha_star.push_back(static_cast<double>(train_text[c].size()) / total);
  inst.timelines = mixinfer::replay_all(est, inst.merges, std::min(spec.T, inst.merges.size()));
  return inst;
}

}  // namespace instances
