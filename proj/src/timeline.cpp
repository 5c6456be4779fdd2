#include "mixinfer/timeline.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mixinfer/error.hpp"

namespace mixinfer {

std::size_t PairCountTimeline::max_delta_size() const {
  std::size_t m = 0;
  for (const auto& d : deltas) m = std::max(m, d.entries.size());
  return m;
}

PairCountTimeline replay(const WordTable& words, const MergeList& merges, std::size_t steps,
                         std::uint32_t category_id, std::size_t offset) {
  if (offset + steps > merges.size())
    throw InvalidArgument("replay: " + std::to_string(offset + steps) + " merges requested but the list has " +
                          std::to_string(merges.size()));
  MergeEngine engine(words, merges);
  for (std::size_t t = 0; t < offset; ++t)
    engine.apply_merge(merges.left_id(t), merges.right_id(t), merges.output_id(t));
  PairCountTimeline tl;
  tl.category_id = category_id;
  tl.norm_denominator = words.raw_bytes ? words.raw_bytes : words.total_bytes;
  tl.vocab_hash = merges.vocab_hash();
  tl.offset = static_cast<std::uint32_t>(offset);
  tl.base_counts.reserve(engine.pair_counts().size());
  for (const auto& [k, c] : engine.pair_counts()) tl.base_counts.emplace_back(k, static_cast<std::uint64_t>(c));
  std::sort(tl.base_counts.begin(), tl.base_counts.end());
  tl.deltas.reserve(steps);
  for (std::size_t t = offset; t < offset + steps; ++t)
    tl.deltas.push_back({static_cast<std::uint32_t>(t + 1),
                         engine.apply_merge(merges.left_id(t), merges.right_id(t), merges.output_id(t))});
  return tl;
}

std::vector<PairCountTimeline> replay_all_serial(const std::vector<WordTable>& categories,
                                                 const MergeList& merges, std::size_t steps, std::size_t offset) {
  std::vector<PairCountTimeline> out;
  out.reserve(categories.size());
  for (std::size_t i = 0; i < categories.size(); ++i)
    out.push_back(replay(categories[i], merges, steps, static_cast<std::uint32_t>(i), offset));
  return out;
}

std::vector<PairCountTimeline> replay_all(const std::vector<WordTable>& categories, const MergeList& merges,
                                          std::size_t steps, std::size_t offset) {
  if (offset + steps > merges.size())
    throw InvalidArgument("replay: merge horizon exceeds the merge list");
  std::vector<PairCountTimeline> out(categories.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < categories.size(); ++i)
    out[i] = replay(categories[i], merges, steps, static_cast<std::uint32_t>(i), offset);
  return out;
}

std::unordered_map<PairKey, std::int64_t> counts_at(const PairCountTimeline& tl, std::size_t t) {
  if (t > tl.steps())
    throw InvalidArgument("counts_at: step " + std::to_string(t) + " beyond " + std::to_string(tl.steps()));
  std::unordered_map<PairKey, std::int64_t> counts;
  counts.reserve(tl.base_counts.size());
  for (const auto& [k, c] : tl.base_counts) counts.emplace(k, static_cast<std::int64_t>(c));
  for (std::size_t s = 0; s < t; ++s)
    for (const auto& d : tl.deltas[s].entries) {
      auto& c = counts[d.pair];
      c += d.change;
      if (c == 0) counts.erase(d.pair);
    }
  return counts;
}

// ---------------------------------------------------------------------------
// Binary format

namespace {

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  void raw(std::string_view s) { buf_.append(s); }
  std::string& str() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <typename T>
  T get() {
    using U = std::make_unsigned_t<T>;
    if (pos_ + sizeof(T) > data_.size()) throw FormatError("timeline file is truncated");
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string encode_timeline(const PairCountTimeline& tl) {
  Writer w;
  w.raw("PCTL");
  w.put<std::uint16_t>(kTimelineVersion);
  w.put<std::uint32_t>(tl.category_id);
  w.put<std::uint64_t>(tl.norm_denominator);
  w.put<std::uint64_t>(tl.vocab_hash);
  w.put<std::uint64_t>(tl.base_counts.size());
  for (const auto& [k, c] : tl.base_counts) {
    w.put<std::uint32_t>(pair_left(k));
    w.put<std::uint32_t>(pair_right(k));
    w.put<std::uint64_t>(c);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tl.deltas.size()));
  for (const auto& block : tl.deltas) {
    w.put<std::uint32_t>(block.step);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(block.entries.size()));
    for (const auto& d : block.entries) {
      w.put<std::uint32_t>(pair_left(d.pair));
      w.put<std::uint32_t>(pair_right(d.pair));
      w.put<std::int64_t>(d.change);
    }
  }
  const auto crc = crc_of(w.str());
  w.put<std::uint32_t>(crc);
  return std::move(w.str());
}

PairCountTimeline decode_timeline(std::string_view bytes) {
  constexpr std::size_t kHeader = 4 + 2;
  if (bytes.size() < kHeader || bytes.substr(0, 4) != "PCTL") throw FormatError("not a timeline file (bad magic)");
  Reader head(bytes.substr(4));
  const auto version = head.get<std::uint16_t>();
  if (version != kTimelineVersion)
    throw FormatError("unsupported timeline version " + std::to_string(version) + " (expected " +
                      std::to_string(kTimelineVersion) + ")");
  if (bytes.size() < kHeader + 4) throw FormatError("timeline file is truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  if (tail.get<std::uint32_t>() != crc_of(body)) throw FormatError("timeline checksum mismatch");

  Reader r(body.substr(kHeader));
  PairCountTimeline tl;
  tl.category_id = r.get<std::uint32_t>();
  tl.norm_denominator = r.get<std::uint64_t>();
  tl.vocab_hash = r.get<std::uint64_t>();
  const auto base_n = r.get<std::uint64_t>();
  if (base_n > r.remaining() / 16) throw FormatError("timeline base count is inconsistent with file size");
  tl.base_counts.reserve(base_n);
  for (std::uint64_t i = 0; i < base_n; ++i) {
    const auto l = r.get<std::uint32_t>();
    const auto rt = r.get<std::uint32_t>();
    tl.base_counts.emplace_back(make_pair_key(l, rt), r.get<std::uint64_t>());
  }
  const auto blocks = r.get<std::uint32_t>();
  tl.deltas.reserve(blocks);
  for (std::uint32_t b = 0; b < blocks; ++b) {
    StepDelta block;
    block.step = r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    if (n > r.remaining() / 16) throw FormatError("timeline delta block is inconsistent with file size");
    block.entries.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto l = r.get<std::uint32_t>();
      const auto rt = r.get<std::uint32_t>();
      block.entries.push_back({make_pair_key(l, rt), r.get<std::int64_t>()});
    }
    tl.deltas.push_back(std::move(block));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in timeline file");
  tl.offset = tl.deltas.empty() ? 0 : tl.deltas.front().step - 1;
  return tl;
}

void write_timeline(const PairCountTimeline& tl, const std::filesystem::path& path) {
  const auto bytes = encode_timeline(tl);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

PairCountTimeline read_timeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open timeline " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_timeline(buf.str());
}

}  // namespace mixinfer
