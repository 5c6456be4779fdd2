#include "mixinfer/merge_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "mixinfer/error.hpp"
#include "mixinfer/log.hpp"

namespace mixinfer {
namespace {

constexpr std::string_view kPlainHeader = "#mixinfer-merges v1";

// GPT-2 byte <-> unicode table.
struct HfTable {
  std::array<std::string, 256> encode;
  std::unordered_map<std::string, unsigned char> decode;

  HfTable() {
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
    int extra = 0;
    for (int b = 0; b < 256; ++b) {
      const unsigned cp = direct[b] ? static_cast<unsigned>(b) : 256u + static_cast<unsigned>(extra++);
      std::string utf8;
      if (cp < 0x80) {
        utf8.push_back(static_cast<char>(cp));
      } else {
        utf8.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        utf8.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      }
      encode[b] = utf8;
      decode.emplace(utf8, static_cast<unsigned char>(b));
    }
  }
};

const HfTable& hf_table() {
  static const HfTable table;
  return table;
}

std::vector<std::string_view> payload_lines(std::string_view payload) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin <= payload.size()) {
    auto end = payload.find('\n', begin);
    if (end == std::string_view::npos) end = payload.size();
    auto line = payload.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == payload.size()) break;
    begin = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

bool is_base64_token(std::string_view s) {
  if (s.empty() || s.size() % 4 != 0) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/' || c == '=';
  });
}

bool is_unsigned(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::pair<std::string_view, std::string_view> split_two(std::string_view line, std::size_t lineno) {
  const auto sp = line.find(' ');
  if (sp == std::string_view::npos || sp == 0 || sp + 1 >= line.size() ||
      line.find(' ', sp + 1) != std::string_view::npos)
    throw ParseError("expected exactly two space-separated fields", lineno);
  return {line.substr(0, sp), line.substr(sp + 1)};
}

std::vector<std::string> char_alphabet_of(const std::vector<MergeRule>& rules);

MergeList parse_hf(std::string_view payload, const ParseOptions& options) {
  std::vector<MergeRule> rules;
  std::size_t lineno = 0;
  for (auto line : payload_lines(payload)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.substr(0, 8) == "#version") continue;
    auto [l, r] = split_two(line, lineno);
    if (options.char_level) {
      rules.push_back({std::string(l), std::string(r)});
      continue;
    }
    try {
      rules.push_back({hf_to_bytes(l), hf_to_bytes(r)});
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (options.char_level) {
    auto base = char_alphabet_of(rules);
    return MergeList::with_alphabet(std::move(base), std::move(rules));
  }
  return MergeList::byte_level(std::move(rules));
}

MergeList parse_rank_vocab(std::string_view payload) {
  std::map<std::uint64_t, std::string> by_rank;
  std::size_t lineno = 0;
  for (auto line : payload_lines(payload)) {
    ++lineno;
    if (line.empty()) continue;
    auto [tok, rank] = split_two(line, lineno);
    if (!is_unsigned(rank)) throw ParseError("rank must be a non-negative integer", lineno);
    std::string bytes;
    try {
      bytes = base64_decode(tok);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), lineno);
    }
    if (bytes.empty()) throw ParseError("empty token", lineno);
    const auto r = std::stoull(std::string(rank));
    if (!by_rank.emplace(r, std::move(bytes)).second)
      throw ParseError("duplicate rank " + std::string(rank), lineno);
  }
  std::vector<std::string> vocab;
  vocab.reserve(by_rank.size());
  for (auto& [r, tok] : by_rank) vocab.push_back(std::move(tok));
  return reconstruct_from_vocab(vocab, true);
}

MergeList parse_plain(std::string_view payload) {
  std::vector<MergeRule> rules;
  std::optional<std::vector<std::string>> base;
  std::size_t lineno = 0;
  for (auto line : payload_lines(payload)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.substr(0, 6) == "#base ") {
        base.emplace();
        std::istringstream in{std::string(line.substr(6))};
        std::string item;
        try {
          while (in >> item) base->push_back(unescape_exact(item));
        } catch (const InvalidArgument& e) {
          throw ParseError(e.what(), lineno);
        }
      }
      continue;
    }
    auto [l, r] = split_two(line, lineno);
    try {
      rules.push_back({unescape_exact(l), unescape_exact(r)});
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (base) return MergeList::with_alphabet(std::move(*base), std::move(rules));
  return MergeList::byte_level(std::move(rules));
}

std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::vector<std::string> char_alphabet_of(const std::vector<MergeRule>& rules) {
  std::vector<std::string> chars;
  auto add = [&](std::string_view s) {
    for (std::size_t i = 0; i < s.size();) {
      const auto len = std::min(utf8_len(static_cast<unsigned char>(s[i])), s.size() - i);
      chars.emplace_back(s.substr(i, len));
      i += len;
    }
  };
  for (const auto& r : rules) {
    add(r.left);
    add(r.right);
  }
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  return chars;
}

// Unit boundaries of a token: every byte for byte-level lists, UTF-8
// character starts otherwise.
std::vector<std::size_t> unit_cuts(std::string_view tok, bool byte_level) {
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i < tok.size();) {
    const std::size_t len =
        byte_level ? 1 : std::min(utf8_len(static_cast<unsigned char>(tok[i])), tok.size() - i);
    i += len;
    if (i < tok.size()) cuts.push_back(i);
  }
  return cuts;
}

using RuleIndex = std::map<std::pair<std::string, std::string>, std::size_t>;

// Applies `rules` to the units of `tok` in list order, each exhaustively and
// left to right. Returns the final segmentation.
std::vector<std::string> replay_rules(std::string_view tok, bool byte_level, const RuleIndex& rules) {
  std::vector<std::string> seq;
  std::size_t start = 0;
  for (std::size_t cut : unit_cuts(tok, byte_level)) {
    seq.emplace_back(tok.substr(start, cut - start));
    start = cut;
  }
  seq.emplace_back(tok.substr(start));
  std::size_t from = 0;
  while (seq.size() > 1) {
    std::size_t best = SIZE_MAX;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const auto it = rules.find({seq[i], seq[i + 1]});
      if (it != rules.end() && it->second >= from) best = std::min(best, it->second);
    }
    if (best == SIZE_MAX) break;
    std::vector<std::string> next;
    for (std::size_t i = 0; i < seq.size();) {
      if (i + 1 < seq.size()) {
        const auto it = rules.find({seq[i], seq[i + 1]});
        if (it != rules.end() && it->second == best) {
          next.push_back(seq[i] + seq[i + 1]);
          i += 2;
          continue;
        }
      }
      next.push_back(std::move(seq[i]));
      ++i;
    }
    seq = std::move(next);
    from = best + 1;
  }
  return seq;
}

bool is_whitespace_token(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
    } else if (s.substr(i, 3) == "\xE2\x96\x81") {
      i += 3;
    } else {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string to_string(MergeFormat format) {
  switch (format) {
    case MergeFormat::hf_merges: return "hf-merges";
    case MergeFormat::rank_vocab: return "rank-vocab";
    case MergeFormat::plain: return "plain";
  }
  return "plain";
}

MergeFormat parse_merge_format(std::string_view name) {
  if (name == "hf-merges" || name == "hf") return MergeFormat::hf_merges;
  if (name == "rank-vocab" || name == "tiktoken") return MergeFormat::rank_vocab;
  if (name == "plain") return MergeFormat::plain;
  throw InvalidArgument("unknown merge-list format '" + std::string(name) + "'");
}

std::string bytes_to_hf(std::string_view bytes) {
  const auto& t = hf_table();
  std::string out;
  for (unsigned char b : bytes) out += t.encode[b];
  return out;
}

std::string hf_to_bytes(std::string_view text) {
  const auto& t = hf_table();
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    const auto len = std::min(utf8_len(static_cast<unsigned char>(text[i])), text.size() - i);
    auto it = t.decode.find(std::string(text.substr(i, len)));
    if (it == t.decode.end())
      throw InvalidArgument("character '" + std::string(text.substr(i, len)) +
                            "' is outside the byte-level mapping (use char-level parsing)");
    out.push_back(static_cast<char>(it->second));
    i += len;
  }
  return out;
}

std::string escape_exact(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    if (c > 0x20 && c < 0x7F && c != '\\') {
      out.push_back(static_cast<char>(c));
    } else {
      out += "\\x";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string unescape_exact(std::string_view text) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out.push_back(text[i]);
      continue;
    }
    if (i + 3 >= text.size() || text[i + 1] != 'x' || hex(text[i + 2]) < 0 || hex(text[i + 3]) < 0)
      throw InvalidArgument("bad escape in '" + std::string(text) + "'");
    out.push_back(static_cast<char>(hex(text[i + 2]) * 16 + hex(text[i + 3])));
    i += 3;
  }
  return out;
}

std::string display_token(std::string_view bytes) {
  std::string out;
  for (unsigned char c : bytes) {
    switch (c) {
      case ' ': out.push_back('_'); break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c == 0x7F) {
          out += escape_exact(std::string_view(reinterpret_cast<const char*>(&c), 1));
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (!is_base64_token(text)) throw InvalidArgument("invalid base64 '" + std::string(text) + "'");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw InvalidArgument("invalid base64 '" + std::string(text) + "'");
  std::size_t pad = 0;
  if (text.size() >= 1 && text[text.size() - 1] == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

MergeFormat detect_format(std::string_view payload) {
  const auto lines = payload_lines(payload);
  if (lines.empty()) throw ParseError("empty merge-list payload", 0);
  if (lines[0].substr(0, kPlainHeader.size()) == kPlainHeader) return MergeFormat::plain;
  if (lines[0].substr(0, 8) == "#version") return MergeFormat::hf_merges;
  bool all_rank = true, has_non_ascii = false, has_escape = false;
  std::size_t seen = 0;
  for (auto line : lines) {
    if (line.empty() || line[0] == '#') continue;
    if (++seen > 200) break;
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos || !is_base64_token(line.substr(0, sp)) ||
        !is_unsigned(line.substr(sp + 1)))
      all_rank = false;
    for (unsigned char c : line) has_non_ascii |= c >= 0x80;
    has_escape |= line.find("\\x") != std::string_view::npos;
  }
  if (seen == 0) throw ParseError("merge-list payload has no entries", 0);
  if (all_rank) return MergeFormat::rank_vocab;
  if (has_non_ascii && !has_escape) return MergeFormat::hf_merges;
  if (has_escape && !has_non_ascii) return MergeFormat::plain;
  throw ParseError("cannot tell the merge-list format apart; declare it explicitly", 0);
}

RawTokenizerFile read_tokenizer_file(const std::filesystem::path& path, std::optional<MergeFormat> format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open merge list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RawTokenizerFile file;
  file.payload = std::move(buf).str();
  if (format) {
    file.format = *format;
  } else {
    file.format = detect_format(file.payload);
    log::info("detected merge-list format " + to_string(file.format) + " for " + path.string());
  }
  return file;
}

MergeList parse_merge_list(const RawTokenizerFile& file, const ParseOptions& options) {
  if (file.payload.empty()) throw ParseError("empty merge-list payload", 0);
  switch (file.format) {
    case MergeFormat::hf_merges: return parse_hf(file.payload, options);
    case MergeFormat::rank_vocab: return parse_rank_vocab(file.payload);
    case MergeFormat::plain: return parse_plain(file.payload);
  }
  throw ParseError("unknown format", 0);
}

std::string serialize_merge_list(const MergeList& merges, MergeFormat format) {
  std::string out;
  switch (format) {
    case MergeFormat::hf_merges:
      if (!merges.is_byte_level()) {
        out += "#version: 0.2\n";
        for (const auto& r : merges.rules()) out += r.left + " " + r.right + "\n";
        return out;
      }
      out += "#version: 0.2\n";
      for (const auto& r : merges.rules()) out += bytes_to_hf(r.left) + " " + bytes_to_hf(r.right) + "\n";
      return out;
    case MergeFormat::rank_vocab: {
      if (!merges.is_byte_level()) throw InvalidArgument("rank-vocab requires a byte-level list");
      std::size_t rank = 0;
      for (const auto& tok : merges.vocab()) out += base64_encode(tok) + " " + std::to_string(rank++) + "\n";
      return out;
    }
    case MergeFormat::plain:
      out += std::string(kPlainHeader) + (merges.is_byte_level() ? " bytes\n" : " chars\n");
      if (!merges.is_byte_level()) {
        out += "#base";
        for (const auto& b : merges.base_alphabet()) out += " " + escape_exact(b);
        out += "\n";
      }
      for (const auto& r : merges.rules()) out += escape_exact(r.left) + " " + escape_exact(r.right) + "\n";
      return out;
  }
  return out;
}

void write_merge_list(const std::filesystem::path& path, const MergeList& merges, MergeFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize_merge_list(merges, format);
  if (!out) throw DataError("write failed for " + path.string());
}

MergeList reconstruct_from_vocab(const std::vector<std::string>& vocab, bool byte_level) {
  std::unordered_map<std::string, std::ptrdiff_t> created;  // first index in `vocab`
  auto is_base = [&](std::string_view tok) { return unit_cuts(tok, byte_level).empty(); };
  std::vector<std::string> base;
  for (std::size_t k = 0; k < vocab.size(); ++k) {
    if (vocab[k].empty()) throw DataError("empty token at position " + std::to_string(k));
    if (is_base(vocab[k]) && !byte_level) base.push_back(vocab[k]);
  }
  auto index_of = [&](const std::string& tok, std::size_t k) -> std::ptrdiff_t {
    auto it = created.find(tok);
    if (it != created.end() && it->second < static_cast<std::ptrdiff_t>(k)) return it->second;
    if (byte_level && tok.size() == 1) return -1;  // every byte is available
    return -2;
  };
  std::vector<MergeRule> rules;
  RuleIndex index;
  for (std::size_t k = 0; k < vocab.size(); ++k) {
    const auto& tok = vocab[k];
    if (is_base(tok)) {
      created.emplace(tok, static_cast<std::ptrdiff_t>(k));
      continue;
    }
    // The pair left after replaying the earlier rules on the token's units is
    // the rule that created it; the earliest-created split is the fallback.
    const auto parts = replay_rules(tok, byte_level, index);
    std::optional<MergeRule> chosen;
    if (parts.size() == 2 && index_of(parts[0], k) != -2 && index_of(parts[1], k) != -2) {
      chosen = MergeRule{parts[0], parts[1]};
    } else {
      std::ptrdiff_t best = -3;
      for (std::size_t cut : unit_cuts(tok, byte_level)) {
        std::string l = tok.substr(0, cut), r = tok.substr(cut);
        const auto il = index_of(l, k), ir = index_of(r, k);
        if (il == -2 || ir == -2) continue;
        const auto later = std::max(il, ir);
        if (best == -3 || later < best) {
          best = later;
          chosen = MergeRule{std::move(l), std::move(r)};
        }
      }
      if (!chosen) throw DataError("cannot reconstruct a merge producing token '" + display_token(tok) + "'");
      log::info("reconstruct: token '" + display_token(tok) + "' is not reached by earlier merges; using split '" +
                display_token(chosen->left) + "' + '" + display_token(chosen->right) + "'");
    }
    index.emplace(std::make_pair(chosen->left, chosen->right), rules.size());
    rules.push_back(std::move(*chosen));
    created.emplace(tok, static_cast<std::ptrdiff_t>(k));
  }
  if (byte_level) return MergeList::byte_level(std::move(rules));
  return MergeList::with_alphabet(std::move(base), std::move(rules));
}

DedupeResult dedupe_redundant(const MergeList& merges) {
  std::unordered_map<std::string, std::vector<std::size_t>> producers;
  for (std::size_t t = 0; t < merges.size(); ++t) producers[merges.rules()[t].merged()].push_back(t);
  std::vector<bool> drop(merges.size(), false);
  Encoder encoder(merges);
  for (const auto& [product, group] : producers) {
    if (group.size() < 2) continue;
    std::vector<std::size_t> fired;
    const auto toks = encoder.encode_word_traced(product, fired);
    std::size_t keep = group.front();
    if (toks.size() == 1 && !fired.empty() &&
        std::find(group.begin(), group.end(), fired.back()) != group.end()) {
      keep = fired.back();
    } else {
      log::info("dedupe: token '" + display_token(product) +
                "' is not reached by encoding its own bytes; keeping its first rule");
    }
    for (std::size_t t : group) drop[t] = t != keep;
  }
  DedupeResult result;
  std::vector<MergeRule> kept;
  for (std::size_t t = 0; t < merges.size(); ++t) {
    if (drop[t]) {
      result.removed.push_back(t);
      log::info("dedupe: removed rule " + std::to_string(t + 1) + " (" +
                display_token(merges.rules()[t].left) + " " + display_token(merges.rules()[t].right) + ")");
    } else {
      kept.push_back(merges.rules()[t]);
    }
  }
  result.merges = merges.with_rules(std::move(kept));
  return result;
}

StripResult strip_manual_prefix(const MergeList& merges) {
  std::size_t n = 0;
  const auto& rules = merges.rules();
  while (n < rules.size() && is_whitespace_token(rules[n].left) && is_whitespace_token(rules[n].right)) ++n;
  StripResult result;
  result.stripped = n;
  result.merges = n == 0 ? merges : merges.with_rules({rules.begin() + static_cast<std::ptrdiff_t>(n), rules.end()});
  return result;
}

MergeList truncate(const MergeList& merges, std::size_t count) { return merges.truncated(count); }

std::size_t shared_prefix_length(const MergeList& a, const MergeList& b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a.rules()[n] == b.rules()[n]) ++n;
  return n;
}

}  // namespace mixinfer
