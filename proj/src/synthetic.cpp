#include "mixinfer/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "mixinfer/error.hpp"

namespace mixinfer {

namespace {

constexpr char32_t kBlockStarts[] = {0x3B1, 0x430, 0x561, 0x5D0, 0x905, 0x985, 0xE01, 0x10D0,
                                     0x1200, 0x3041, 0x30A1, 0xAC00, 0x4E00, 0xA000, 0x1400, 0x0B85};

std::string utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::vector<double> zipf_weights(std::size_t n, double s) {
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), s);
  return w;
}

struct Language {
  std::vector<std::string> lexicon;  // in frequency-rank order
};

Language build_language(const SyntheticSpec& spec, std::size_t category) {
  std::mt19937_64 rng(derive_seed(spec.seed, 1000 + category));
  auto letters = category_alphabet(spec, category);
  std::shuffle(letters.begin(), letters.end(), rng);
  const auto lw = zipf_weights(letters.size(), spec.letter_skew);
  std::discrete_distribution<std::size_t> letter(lw.begin(), lw.end());
  std::binomial_distribution<int> extra(9, 0.4);
  Language lang;
  std::unordered_set<std::string> seen;
  for (std::size_t attempts = 0; lang.lexicon.size() < spec.lexicon_size && attempts < spec.lexicon_size * 50;
       ++attempts) {
    const int len = 1 + extra(rng);
    std::string word;
    for (int k = 0; k < len; ++k) word += letters[letter(rng)];
    if (seen.insert(word).second) lang.lexicon.push_back(std::move(word));
  }
  return lang;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (categories == 0) throw InvalidArgument("synthetic pool needs at least one category");
  if (alphabet_size < 2) throw InvalidArgument("synthetic alphabet needs at least two symbols");
  if (alphabet_size > 26) throw InvalidArgument("synthetic alphabet is limited to 26 symbols");
  if (overlap < 0 || overlap > 1) throw InvalidArgument("synthetic overlap must lie in [0, 1]");
  if (lexicon_size == 0) throw InvalidArgument("synthetic lexicon must be non-empty");
  if (!(zipf_exponent > 0) || !(letter_skew >= 0)) throw InvalidArgument("synthetic exponents must be positive");
}

std::vector<std::string> category_alphabet(const SyntheticSpec& spec, std::size_t category) {
  const std::size_t shared = static_cast<std::size_t>(std::llround(spec.overlap * static_cast<double>(spec.alphabet_size)));
  const std::size_t blocks = sizeof(kBlockStarts) / sizeof(kBlockStarts[0]);
  const char32_t start = category < blocks ? kBlockStarts[category]
                                           : static_cast<char32_t>(0x5000 + (category - blocks) * 64);
  std::vector<std::string> out;
  // Shared symbols rotate through the Latin set so overlapping categories
  // still differ in which letters they use.
  for (std::size_t k = 0; k < shared; ++k) out.push_back(utf8(U'a' + static_cast<char32_t>((k + category * 3) % 26)));
  for (std::size_t k = shared; k < spec.alphabet_size; ++k) out.push_back(utf8(start + static_cast<char32_t>(k)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CategorySource generate_category(const SyntheticSpec& spec, std::size_t category, std::uint64_t bytes,
                                 double shift, std::uint64_t stream) {
  spec.validate();
  if (shift < 0 || shift > 1) throw InvalidArgument("shift must lie in [0, 1]");
  Language lang = build_language(spec, category);
  if (shift > 0) {
    std::mt19937_64 rng(derive_seed(spec.seed, 2000 + category));
    std::bernoulli_distribution pick(shift);
    std::uniform_int_distribution<std::size_t> any(0, lang.lexicon.size() - 1);
    for (std::size_t r = 0; r < lang.lexicon.size(); ++r)
      if (pick(rng)) std::swap(lang.lexicon[r], lang.lexicon[any(rng)]);
  }
  const auto w = zipf_weights(lang.lexicon.size(), spec.zipf_exponent);
  std::discrete_distribution<std::size_t> word(w.begin(), w.end());
  std::mt19937_64 rng(derive_seed(derive_seed(spec.seed, 3000 + category), stream));
  std::uniform_int_distribution<int> doc_len(8, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> digits(0, 9999);
  std::string text;
  text.reserve(bytes + 512);
  while (text.size() < bytes) {
    const int words = doc_len(rng);
    for (int k = 0; k < words; ++k) {
      if (k) text += ' ';
      const double r = u(rng);
      if (r < 0.02) {
        text += std::to_string(digits(rng));
      } else {
        text += lang.lexicon[word(rng)];
        if (r > 0.93) text += ',';
      }
    }
    text += ".\n";
  }
  return CategorySource::from_bytes(static_cast<std::uint32_t>(category), "synthetic-" + std::to_string(category),
                                    std::move(text));
}

std::vector<CategorySource> generate_pool(const SyntheticSpec& spec, std::uint64_t bytes_per_category, double shift,
                                          std::uint64_t stream) {
  spec.validate();
  std::vector<CategorySource> pool(spec.categories);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < spec.categories; ++c) {
    try {
      pool[c] = generate_category(spec, c, bytes_per_category, shift, stream);
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return pool;
}

}  // namespace mixinfer
