#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mixinfer/bpe.hpp"
#include "mixinfer/merge_engine.hpp"
#include "mixinfer/pretokenize.hpp"
#include "mixinfer/types.hpp"

namespace mixinfer {

struct StepDelta {
  std::uint32_t step = 0;  // 1-based index of the merge that caused it
  std::vector<PairDelta> entries;
  bool operator==(const StepDelta&) const = default;
};

// Raw pair counts of one category as merges are applied: a snapshot taken
// after `offset` merges, then one delta per subsequent merge. Counts are
// divided by norm_denominator (the sample's raw byte size) only when read.
struct PairCountTimeline {
  std::uint32_t category_id = 0;
  std::uint64_t norm_denominator = 0;
  std::uint64_t vocab_hash = 0;
  std::uint32_t offset = 0;
  std::vector<std::pair<PairKey, std::uint64_t>> base_counts;  // sorted by key
  std::vector<StepDelta> deltas;

  std::size_t steps() const { return deltas.size(); }
  std::size_t max_delta_size() const;
  bool operator==(const PairCountTimeline&) const = default;
};

// Applies rules [offset, offset + steps) after silently applying the first
// `offset` rules. Throws InvalidArgument if the list is too short.
PairCountTimeline replay(const WordTable& words, const MergeList& merges, std::size_t steps,
                         std::uint32_t category_id = 0, std::size_t offset = 0);

// One timeline per category; categories run on separate OpenMP threads.
std::vector<PairCountTimeline> replay_all(const std::vector<WordTable>& categories,
                                          const MergeList& merges, std::size_t steps,
                                          std::size_t offset = 0);
std::vector<PairCountTimeline> replay_all_serial(const std::vector<WordTable>& categories,
                                                 const MergeList& merges, std::size_t steps,
                                                 std::size_t offset = 0);

// Counts after `t` of the timeline's steps; zero counts are omitted.
std::unordered_map<PairKey, std::int64_t> counts_at(const PairCountTimeline& timeline, std::size_t t);

// Binary layout (little-endian):
//   "PCTL" | u16 version | u32 category | u64 norm_denominator | u64 vocab_hash
//   | u64 base_entries | base_entries x (u32 left, u32 right, u64 count)
//   | u32 blocks | blocks x (u32 step, u32 entries, entries x (u32, u32, i64))
//   | u32 crc32 of everything before it
inline constexpr std::uint16_t kTimelineVersion = 1;

void write_timeline(const PairCountTimeline& timeline, const std::filesystem::path& path);
PairCountTimeline read_timeline(const std::filesystem::path& path);

std::string encode_timeline(const PairCountTimeline& timeline);
PairCountTimeline decode_timeline(std::string_view bytes);

}  // namespace mixinfer
