#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mixinfer {

enum class SpaceAttachment { discard_separators, attach_leading_space };

struct PretokenRules {
  bool split_on_whitespace = true;
  bool isolate_digit_runs = true;
  SpaceAttachment space_attachment = SpaceAttachment::discard_separators;

  // Throws InvalidArgument if no splitting rule is active.
  void validate() const;

  // Commercial byte-level lists carry leading-space tokens.
  static PretokenRules commercial() {
    return {true, true, SpaceAttachment::attach_leading_space};
  }
};

std::string to_string(SpaceAttachment mode);
SpaceAttachment parse_space_attachment(std::string_view text);

// Word -> occurrence count. total_bytes counts word bytes (sum len*count);
// raw_bytes is the size of the text that was split.
struct WordTable {
  std::unordered_map<std::string, std::uint64_t> entries;
  std::uint64_t total_bytes = 0;
  std::uint64_t raw_bytes = 0;

  void add(std::string_view word, std::uint64_t count = 1);
  void merge(const WordTable& other);
  bool empty() const { return entries.empty(); }
  std::uint64_t count(std::string_view word) const;

  // Entries ordered by word bytes; used wherever iteration order must be
  // reproducible.
  std::vector<std::pair<std::string, std::uint64_t>> sorted_entries() const;
};

bool is_ascii_space(unsigned char c);
bool is_ascii_digit(unsigned char c);

// Calls `emit(word)` for every word of `text` in order. Words are always
// contiguous substrings of `text`.
template <typename Emit>
void for_each_word(std::string_view text, const PretokenRules& rules, Emit&& emit);

WordTable pretokenize(std::string_view text, const PretokenRules& rules);

// Single-threaded reference; `pretokenize` shards the input across OpenMP
// threads at line boundaries and must agree with this exactly.
WordTable pretokenize_serial(std::string_view text, const PretokenRules& rules);

// ---------------------------------------------------------------------------

template <typename Emit>
void for_each_word(std::string_view text, const PretokenRules& rules, Emit&& emit) {
  enum Cls { kSpace, kDigit, kOther };
  const auto cls = [&](unsigned char c) {
    if (rules.split_on_whitespace && is_ascii_space(c)) return kSpace;
    if (rules.isolate_digit_runs && is_ascii_digit(c)) return kDigit;
    return kOther;
  };
  const bool attach = rules.split_on_whitespace &&
                      rules.space_attachment == SpaceAttachment::attach_leading_space;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const Cls c = cls(static_cast<unsigned char>(text[i]));
    std::size_t j = i + 1;
    while (j < n && cls(static_cast<unsigned char>(text[j])) == c) ++j;
    if (c != kSpace) {
      emit(text.substr(i, j - i));
      i = j;
      continue;
    }
    if (!attach) {
      i = j;
      continue;
    }
    // Whitespace run [i, j): a final ' ' joins the following non-digit run.
    if (j < n && text[j - 1] == ' ' && cls(static_cast<unsigned char>(text[j])) == kOther) {
      if (j - 1 > i) emit(text.substr(i, j - 1 - i));
      std::size_t k = j + 1;
      while (k < n && cls(static_cast<unsigned char>(text[k])) == kOther) ++k;
      emit(text.substr(j - 1, k - j + 1));
      i = k;
    } else {
      emit(text.substr(i, j - i));
      i = j;
    }
  }
}

}  // namespace mixinfer
