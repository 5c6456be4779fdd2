#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixinfer/bpe.hpp"

namespace mixinfer {

enum class MergeFormat { hf_merges, rank_vocab, plain };

std::string to_string(MergeFormat format);
MergeFormat parse_merge_format(std::string_view name);

struct RawTokenizerFile {
  MergeFormat format = MergeFormat::plain;
  std::string payload;
};

struct ParseOptions {
  // hf-merges only: take tokens literally as characters (sentencepiece-style
  // lists) instead of decoding the byte-level unicode mapping.
  bool char_level = false;
};

// Identifies a payload by its header or line shape. Throws ParseError when
// the shape matches no format or more than one.
MergeFormat detect_format(std::string_view payload);

RawTokenizerFile read_tokenizer_file(const std::filesystem::path& path,
                                     std::optional<MergeFormat> format = std::nullopt);

MergeList parse_merge_list(const RawTokenizerFile& file, const ParseOptions& options = {});
std::string serialize_merge_list(const MergeList& merges, MergeFormat format);
void write_merge_list(const std::filesystem::path& path, const MergeList& merges, MergeFormat format);

// Creation-ordered vocabulary -> merges. Each non-base token takes the split
// whose later-created side is earliest; exact ties go to the split that
// in-order encoding of the token produces, then the smallest left side.
MergeList reconstruct_from_vocab(const std::vector<std::string>& vocab, bool byte_level = true);

struct DedupeResult {
  MergeList merges;
  std::vector<std::size_t> removed;  // indices into the input list
};

// Among rules sharing a product, keeps the one that fires when the product
// is encoded in order and drops the rest.
DedupeResult dedupe_redundant(const MergeList& merges);

struct StripResult {
  MergeList merges;
  std::size_t stripped = 0;
};

// Drops the leading run of rules whose sides are pure whitespace
// (space, tab, newline, carriage return, U+2581).
StripResult strip_manual_prefix(const MergeList& merges);

MergeList truncate(const MergeList& merges, std::size_t count);

// Number of leading rules the two lists share.
std::size_t shared_prefix_length(const MergeList& a, const MergeList& b);

// Byte-level unicode mapping used by hf-merges files (space -> U+0120 'Ġ').
std::string bytes_to_hf(std::string_view bytes);
std::string hf_to_bytes(std::string_view text);  // throws InvalidArgument on unmapped characters

// Exact-mode escaping for the plain format: printable ASCII except '\\'
// passes through, everything else becomes \xNN.
std::string escape_exact(std::string_view bytes);
std::string unescape_exact(std::string_view text);  // throws InvalidArgument

// Human display: space -> '_', newline -> "\n", tab -> "\t".
std::string display_token(std::string_view bytes);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);  // throws InvalidArgument

}  // namespace mixinfer
