#pragma once

#include <cstdint>
#include <utility>

namespace mixinfer {

using TokenId = std::uint32_t;
inline constexpr TokenId kNoToken = 0xFFFFFFFFu;

// Adjacent token pair packed as (left << 32) | right.
using PairKey = std::uint64_t;

constexpr PairKey make_pair_key(TokenId left, TokenId right) noexcept {
  return (static_cast<PairKey>(left) << 32) | right;
}
constexpr TokenId pair_left(PairKey key) noexcept { return static_cast<TokenId>(key >> 32); }
constexpr TokenId pair_right(PairKey key) noexcept { return static_cast<TokenId>(key & 0xFFFFFFFFu); }

}  // namespace mixinfer
