#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixinfer/corpus.hpp"

namespace mixinfer {

// Language-like synthetic categories: each draws words from its own lexicon
// over its own symbol alphabet, with Zipf word frequencies. Alphabets are
// disjoint unless `overlap` > 0, in which case that fraction of each
// alphabet comes from a shared Latin set.
struct SyntheticSpec {
  std::size_t categories = 5;
  std::size_t alphabet_size = 24;
  double overlap = 0.0;
  std::size_t lexicon_size = 3000;
  double zipf_exponent = 1.1;
  double letter_skew = 1.0;
  std::uint64_t seed = 1;
  void validate() const;
};

// UTF-8 symbols of one category.
std::vector<std::string> category_alphabet(const SyntheticSpec& spec, std::size_t category);

// About `bytes` of newline-separated documents (never less). `shift` in
// [0, 1] swaps that fraction of word-frequency ranks, keeping the lexicon;
// `stream` selects an independent text sample.
CategorySource generate_category(const SyntheticSpec& spec, std::size_t category, std::uint64_t bytes,
                                 double shift = 0.0, std::uint64_t stream = 0);

std::vector<CategorySource> generate_pool(const SyntheticSpec& spec, std::uint64_t bytes_per_category,
                                          double shift = 0.0, std::uint64_t stream = 0);

}  // namespace mixinfer
