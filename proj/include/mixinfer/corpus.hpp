#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mixinfer {

struct CategorySpec {
  std::uint32_t id = 0;
  std::string name;
  std::filesystem::path source;
  std::uint64_t available_bytes = 0;
};

struct MixtureSpec {
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

// A category's raw text held in memory. Documents are newline-delimited records.
struct CategorySource {
  CategorySpec spec;
  std::string bytes;

  static CategorySource from_bytes(std::uint32_t id, std::string name, std::string bytes);
};

// Reads `id<TAB>name<TAB>path` lines. Relative paths resolve against the
// manifest's directory. Ids must be dense 0..n-1 and unique.
std::vector<CategorySpec> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<CategorySpec>& specs);

CategorySource load_category(const CategorySpec& spec);

// Offsets of every document in `text`; a document spans [begin, end) and
// excludes its terminating newline. Empty lines are skipped.
struct DocumentSpan {
  std::size_t begin;
  std::size_t end;
  std::size_t length() const { return end - begin; }
};
std::vector<DocumentSpan> split_documents(std::string_view text);

// Uniform draw from the (n-1)-simplex via gaps between sorted uniforms.
MixtureSpec sample_simplex_weights(std::size_t n, std::uint64_t seed);

// Largest-remainder rounding of weights[i] * total; the result sums to total.
std::vector<std::uint64_t> allocate_budgets(const MixtureSpec& mix, std::uint64_t total_bytes);

// Per-category training buffers whose sizes follow the mixture. A category
// short on data is repeated whole until its budget is met.
std::vector<std::string> materialize_mixture(const std::vector<CategorySource>& sources,
                                             const MixtureSpec& mix, std::uint64_t total_bytes,
                                             std::uint64_t seed);

struct TrainEstimateSplit {
  std::string train;
  std::string estimate;
  bool overlapping = false;
};

// Two document samples from one source; disjoint whenever the source holds
// enough documents for both budgets.
TrainEstimateSplit split_train_estimate(const CategorySource& source, std::uint64_t train_bytes,
                                        std::uint64_t estimate_bytes, std::uint64_t seed);

// Mixes a base seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mixinfer
