#include "mixinfer/pretokenize.hpp"

#include <algorithm>
#include <omp.h>

#include "mixinfer/error.hpp"

namespace mixinfer {

void PretokenRules::validate() const {
  if (!split_on_whitespace && !isolate_digit_runs)
    throw InvalidArgument("pretokenizer rules: enable whitespace splitting or digit isolation");
}

std::string to_string(SpaceAttachment mode) {
  return mode == SpaceAttachment::discard_separators ? "discard" : "attach";
}

SpaceAttachment parse_space_attachment(std::string_view text) {
  if (text == "discard" || text == "discard-separators") return SpaceAttachment::discard_separators;
  if (text == "attach" || text == "attach-leading-space") return SpaceAttachment::attach_leading_space;
  throw InvalidArgument("unknown space attachment mode '" + std::string(text) + "'");
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

void WordTable::add(std::string_view word, std::uint64_t count) {
  if (word.empty() || count == 0) return;
  auto it = entries.find(std::string(word));
  if (it == entries.end())
    entries.emplace(std::string(word), count);
  else
    it->second += count;
  total_bytes += word.size() * count;
}

void WordTable::merge(const WordTable& other) {
  for (const auto& [w, c] : other.entries) entries[w] += c;
  total_bytes += other.total_bytes;
  raw_bytes += other.raw_bytes;
}

std::uint64_t WordTable::count(std::string_view word) const {
  auto it = entries.find(std::string(word));
  return it == entries.end() ? 0 : it->second;
}

std::vector<std::pair<std::string, std::uint64_t>> WordTable::sorted_entries() const {
  std::vector<std::pair<std::string, std::uint64_t>> out(entries.begin(), entries.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

using ViewCounts = std::unordered_map<std::string_view, std::uint64_t>;

void count_words(std::string_view text, const PretokenRules& rules, ViewCounts& counts) {
  for_each_word(text, rules, [&](std::string_view w) { ++counts[w]; });
}

WordTable to_table(const ViewCounts& counts, std::uint64_t raw_bytes) {
  WordTable table;
  table.entries.reserve(counts.size());
  for (const auto& [w, c] : counts) {
    table.entries.emplace(std::string(w), c);
    table.total_bytes += w.size() * c;
  }
  table.raw_bytes = raw_bytes;
  return table;
}

// Shard boundaries sit right after a newline that is followed by a
// non-space byte, so no whitespace run or word straddles two shards.
std::vector<std::size_t> shard_bounds(std::string_view text, std::size_t shards) {
  std::vector<std::size_t> bounds{0};
  const std::size_t step = text.size() / shards + 1;
  for (std::size_t s = 1; s < shards; ++s) {
    std::size_t p = std::max(bounds.back(), s * step);
    while (p < text.size() &&
           !(text[p - 1] == '\n' && !is_ascii_space(static_cast<unsigned char>(text[p]))))
      ++p;
    if (p >= text.size()) break;
    bounds.push_back(p);
  }
  bounds.push_back(text.size());
  return bounds;
}

}  // namespace

WordTable pretokenize_serial(std::string_view text, const PretokenRules& rules) {
  rules.validate();
  ViewCounts counts;
  count_words(text, rules, counts);
  return to_table(counts, text.size());
}

WordTable pretokenize(std::string_view text, const PretokenRules& rules) {
  rules.validate();
  const int threads = omp_get_max_threads();
  if (threads <= 1 || text.size() < (1u << 20)) return pretokenize_serial(text, rules);
  const auto bounds = shard_bounds(text, static_cast<std::size_t>(threads) * 4);
  const std::size_t shards = bounds.size() - 1;
  std::vector<ViewCounts> local(shards);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < shards; ++s)
    count_words(text.substr(bounds[s], bounds[s + 1] - bounds[s]), rules, local[s]);
  ViewCounts merged = std::move(local[0]);
  for (std::size_t s = 1; s < shards; ++s)
    for (const auto& [w, c] : local[s]) merged[w] += c;
  return to_table(merged, text.size());
}

}  // namespace mixinfer
