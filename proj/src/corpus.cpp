#include "mixinfer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"

namespace mixinfer {
namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

CategorySource CategorySource::from_bytes(std::uint32_t id, std::string name, std::string bytes) {
  CategorySource src;
  src.spec.id = id;
  src.spec.name = std::move(name);
  src.spec.available_bytes = bytes.size();
  src.bytes = std::move(bytes);
  return src;
}

std::vector<CategorySpec> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open manifest " + manifest.string());
  std::vector<CategorySpec> specs;
  std::string line;
  std::size_t lineno = 0;
  const fs::path base = manifest.parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw ConfigError("expected id<TAB>name<TAB>path", lineno);
    CategorySpec spec;
    try {
      std::size_t used = 0;
      const auto id = std::stoul(line.substr(0, tab1), &used);
      if (used != tab1) throw std::invalid_argument("trailing characters");
      spec.id = static_cast<std::uint32_t>(id);
    } catch (const std::exception&) {
      throw ConfigError("bad category id '" + line.substr(0, tab1) + "'", lineno);
    }
    spec.name = line.substr(tab1 + 1, tab2 - tab1 - 1);
    fs::path p = line.substr(tab2 + 1);
    spec.source = p.is_absolute() ? p : base / p;
    std::error_code ec;
    const auto size = fs::file_size(spec.source, ec);
    if (ec) throw ConfigError("cannot stat " + spec.source.string(), lineno);
    spec.available_bytes = size;
    specs.push_back(std::move(spec));
  }
  std::set<std::uint32_t> ids;
  for (const auto& s : specs) ids.insert(s.id);
  if (ids.size() != specs.size()) throw ConfigError("duplicate category ids in " + manifest.string());
  if (!specs.empty() && *ids.rbegin() + 1 != specs.size())
    throw ConfigError("category ids must be dense 0..n-1 in " + manifest.string());
  std::sort(specs.begin(), specs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return specs;
}

void write_manifest(const fs::path& manifest, const std::vector<CategorySpec>& specs) {
  std::ofstream out(manifest);
  if (!out) throw DataError("cannot write manifest " + manifest.string());
  for (const auto& s : specs) out << s.id << '\t' << s.name << '\t' << s.source.string() << '\n';
}

CategorySource load_category(const CategorySpec& spec) {
  std::ifstream in(spec.source, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + spec.source.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  CategorySource src;
  src.spec = spec;
  src.bytes = std::move(buf).str();
  src.spec.available_bytes = src.bytes.size();
  return src;
}

std::vector<DocumentSpan> split_documents(std::string_view text) {
  std::vector<DocumentSpan> docs;
  std::size_t begin = 0;
  while (begin < text.size()) {
    auto end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    if (end > begin) docs.push_back({begin, end});
    begin = end + 1;
  }
  return docs;
}

MixtureSpec sample_simplex_weights(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_simplex_weights: n must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> cuts(n + 1);
  cuts[0] = 0.0;
  cuts[n] = 1.0;
  for (std::size_t i = 1; i < n; ++i) cuts[i] = unif(rng);
  std::sort(cuts.begin() + 1, cuts.end() - 1);
  MixtureSpec mix;
  mix.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) mix.weights[i] = cuts[i + 1] - cuts[i];
  const double sum = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  for (auto& w : mix.weights) w /= sum;
  return mix;
}

std::vector<std::uint64_t> allocate_budgets(const MixtureSpec& mix, std::uint64_t total_bytes) {
  const std::size_t n = mix.size();
  std::vector<std::uint64_t> budget(n);
  std::vector<std::pair<double, std::size_t>> remainder(n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mix.weights[i] < 0.0) throw InvalidArgument("mixture weights must be non-negative");
    const double exact = mix.weights[i] * static_cast<double>(total_bytes);
    budget[i] = static_cast<std::uint64_t>(std::floor(exact));
    remainder[i] = {exact - std::floor(exact), i};
    assigned += budget[i];
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total_bytes && k < n; ++k) {
    if (mix.weights[remainder[k].second] == 0.0) continue;
    ++budget[remainder[k].second];
    ++assigned;
  }
  return budget;
}

namespace {

// Cycles through documents in a seeded random order.
class DocumentSampler {
 public:
  DocumentSampler(std::string_view text, std::uint64_t seed) : text_(text), rng_(seed) {
    docs_ = split_documents(text);
    order_.resize(docs_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  bool empty() const { return docs_.empty(); }
  std::size_t position() const { return pos_; }
  std::size_t size() const { return docs_.size(); }

  // Appends documents until `out` grows by at least `budget` bytes.
  // Returns false if the order wrapped around.
  bool take(std::uint64_t budget, std::string& out) {
    bool wrapped = false;
    const std::size_t start = out.size();
    while (out.size() - start < budget) {
      if (pos_ == order_.size()) {
        pos_ = 0;
        wrapped = true;
      }
      const auto& d = docs_[order_[pos_++]];
      out.append(text_.substr(d.begin, d.length()));
      out.push_back('\n');
    }
    return !wrapped;
  }

 private:
  std::string_view text_;
  std::mt19937_64 rng_;
  std::vector<DocumentSpan> docs_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

std::uint64_t document_bytes(std::string_view text) {
  std::uint64_t total = 0;
  for (const auto& d : split_documents(text)) total += d.length() + 1;
  return total;
}

std::string sample_with_repetition(const CategorySource& src, std::uint64_t budget,
                                   std::uint64_t seed) {
  std::string out;
  if (budget == 0) return out;
  DocumentSampler sampler(src.bytes, seed);
  if (sampler.empty())
    throw DataError("category '" + src.spec.name + "' has no data but positive weight");
  const std::uint64_t whole = document_bytes(src.bytes);
  out.reserve(budget + 4096);
  if (whole < budget) {
    // Whole-buffer repetition keeps relative document frequencies intact.
    std::string canonical;
    canonical.reserve(whole);
    for (const auto& d : split_documents(src.bytes)) {
      canonical.append(src.bytes, d.begin, d.length());
      canonical.push_back('\n');
    }
    const std::uint64_t copies = budget / whole;
    for (std::uint64_t c = 0; c < copies; ++c) out += canonical;
    budget -= copies * whole;
  }
  sampler.take(budget, out);
  return out;
}

}  // namespace

std::vector<std::string> materialize_mixture(const std::vector<CategorySource>& sources,
                                             const MixtureSpec& mix, std::uint64_t total_bytes,
                                             std::uint64_t seed) {
  if (total_bytes == 0) throw InvalidArgument("materialize_mixture: total_bytes must be positive");
  if (sources.size() != mix.size())
    throw InvalidArgument("materialize_mixture: mixture length does not match category count");
  const auto budgets = allocate_budgets(mix, total_bytes);
  std::vector<std::string> out(sources.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < sources.size(); ++i) {
    try {
      out[i] = sample_with_repetition(sources[i], budgets[i], derive_seed(seed, i));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

TrainEstimateSplit split_train_estimate(const CategorySource& source, std::uint64_t train_bytes,
                                        std::uint64_t estimate_bytes, std::uint64_t seed) {
  if (train_bytes == 0 && estimate_bytes == 0)
    throw InvalidArgument("split_train_estimate: both budgets are zero");
  TrainEstimateSplit split;
  DocumentSampler sampler(source.bytes, seed);
  if (sampler.empty()) throw DataError("category '" + source.spec.name + "' has no documents");
  const std::uint64_t whole = document_bytes(source.bytes);
  if (train_bytes + estimate_bytes <= whole) {
    bool fresh = sampler.take(train_bytes, split.train);
    if (estimate_bytes > 0) fresh = sampler.take(estimate_bytes, split.estimate) && fresh;
    split.overlapping = !fresh;
  } else {
    split.train = sample_with_repetition(source, train_bytes, seed);
    split.estimate = sample_with_repetition(source, estimate_bytes, derive_seed(seed, 1));
    split.overlapping = estimate_bytes > 0 && train_bytes > 0;
  }
  if (split.overlapping)
    log::warning("category '" + source.spec.name +
                 "' is too small for disjoint train/estimate samples; they overlap");
  return split;
}

}  // namespace mixinfer
